"""Command-line entry point: ``conserva run|sweep|verify|dump|list``.

Exit codes: 0 success, 1 verification failure, 2 config error,
3 march failure in a ``--strict`` run.
"""

import argparse
import sys
import warnings

from . import bench
from .errors import ConfigError

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_MARCH = 0, 1, 2, 3


def _cmd_run(args):
    cfg = bench.load_config(args.config)
    rows = bench.run(cfg, args.workers)
    csv_path, json_path = bench.write_outputs(cfg, rows, args.out)
    sys.stdout.write(bench.csv_text(rows))
    print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
    for r in rows:
        if r.diverged:
            print(f"{r.method}: diverged at step {r.failure['step']} ({r.failure['message']})",
                  file=sys.stderr)
    if args.strict and any(r.diverged for r in rows):
        return EXIT_MARCH
    return EXIT_OK


def _cmd_sweep(args):
    sc = bench.load_sweep(args.config)
    res = bench.run_sweep(sc, args.workers)
    path = bench.write_sweep(sc, res, args.out)
    print(f"{sc.name}: best alpha={res.best['alpha']:.6g} beta={res.best['beta']:.6g} "
          f"objective={res.value:.6e} ({len(res.record)} marches)")
    print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def _cmd_verify(args):
    checks = bench.verify(args.scope, args.seed, args.trials)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def _cmd_dump(args):
    ref, sep, label = args.run_id.rpartition(":")
    if not sep or not ref:
        raise ConfigError("run id must look like <config>:<method>")
    cfg = bench.load_config(ref)
    row, hist = bench.run_entry_history(cfg, label)
    if hist is None:
        print(f"{label}: diverged at step {row.failure['step']}", file=sys.stderr)
        return EXIT_MARCH
    out = args.out or f"{cfg.name}_{''.join(ch if ch.isalnum() else '_' for ch in label)}.dat"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        bench.profile_dump(hist, args.times, out, cfg.problem.exact())
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def _cmd_list(args):
    for name in bench.bundled_configs():
        print(name)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="conserva", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a benchmark table")
    r.add_argument("config", help="config path or bundled name (e.g. table1)")
    r.add_argument("--out", help="output directory (default: the config's output key)")
    r.add_argument("--workers", type=int, help="parallel rows (default: CONSERVA_THREADS or cores)")
    r.add_argument("--strict", action="store_true", help="exit 3 if any march fails")
    r.set_defaults(fn=_cmd_run)

    s = sub.add_parser("sweep", help="optimise a scheme's free parameters")
    s.add_argument("config")
    s.add_argument("--out")
    s.add_argument("--workers", type=int)
    s.set_defaults(fn=_cmd_sweep)

    v = sub.add_parser("verify", help="check conservation identities numerically")
    v.add_argument("scope", nargs="?", default="All", help=", ".join(bench.SCOPES))
    v.add_argument("--seed", type=int, default=bench.calculus.DEFAULT_SEED)
    v.add_argument("--trials", type=int, default=20)
    v.set_defaults(fn=_cmd_verify)

    d = sub.add_parser("dump", help="write solution profiles for plotting")
    d.add_argument("run_id", help="<config>:<method>, e.g. table1:EC10(0.12)")
    d.add_argument("--times", type=float, nargs="+", required=True)
    d.add_argument("--out")
    d.set_defaults(fn=_cmd_dump)

    ls = sub.add_parser("list", help="list bundled configs")
    ls.set_defaults(fn=_cmd_list)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
