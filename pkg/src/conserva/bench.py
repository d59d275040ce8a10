"""Benchmark harness: experiment configs, table runs, outputs and verification.

Config files are INI-style. One ``[experiment]`` (or ``[sweep]``) section
holds the problem and grid; every other section is a scheme row whose name
is the method label. See ``configs/README.txt`` for the grammar.
"""

import configparser
import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import calculus
from .errors import ConfigError, MarchFailure
from .experiments import Equation, make_problem, make_scheme, run_case, time_steps
from .solver import NewtonConfig, Refreeze
from .sweep import Objective, SweepSpec, optimize, worker_count

CSV_COLUMNS = ("method", "Err1", "Err2", "Err3", "solution_error", "phase_error", "wall_seconds")
_METRICS = ("err1", "err2", "err3", "solution_error", "phase_error")


@dataclass(frozen=True)
class SchemeEntry:
    label: str
    family: str
    alpha: float = 0.0
    beta: float = 0.0
    dx: float = None
    dt: float = None
    steps: int = None
    explicit: bool = True


@dataclass
class ExperimentConfig:
    name: str
    equation: Equation
    problem: object
    dx: float
    dt: float = None
    steps: int = None
    schemes: list = field(default_factory=list)
    output: str = "results"
    seed: int = 0
    newton: NewtonConfig = field(default_factory=NewtonConfig)

    def step_count(self, entry):
        """Steps for one row: its own steps/dt first, then the experiment's."""
        for steps, dt in ((entry.steps, entry.dt), (self.steps, self.dt)):
            if steps is not None:
                return int(steps)
            if dt is not None:
                return time_steps(self.problem.T, dt)
        raise ConfigError(f"{entry.label}: neither dt nor steps given")


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


_DX_REL = 1e-9   # spatial steps are exact; printed time steps are rounded


def _check_even(length, step, what, rel=5e-3):
    n = length / step
    if abs(n - round(n)) > rel * max(1.0, round(n)):
        raise ConfigError(f"{what} step {step} does not divide {length} evenly")


def _newton(sec):
    kw = {}
    for key, conv in (("tol_abs", float), ("tol_rel", float), ("max_iter", int),
                      ("stall_ratio", float), ("divergence_growth", float), ("polish", int)):
        if key in sec:
            kw[key] = conv(sec[key])
    if "refreeze" in sec:
        kw["refreeze"] = Refreeze(sec["refreeze"].strip().lower())
    return NewtonConfig(**kw)


def _parser(text):
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return cp


def _problem_from(sec):
    try:
        equation = Equation(sec.get("equation", "KdV"))
        dom = _floats(sec["domain"]) if "domain" in sec else (None, None)
        T = float(sec["T"]) if "T" in sec else None
        params = _floats(sec["params"]) if "params" in sec else None
        return equation, make_problem(equation, sec["problem"], dom[0], dom[1], T, params)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad problem description: {exc}") from exc


def parse_config(text, name="experiment"):
    """Parse an experiment config from a string."""
    cp = _parser(text)
    if "experiment" not in cp:
        raise ConfigError("config needs an [experiment] section")
    sec = cp["experiment"]
    equation, problem = _problem_from(sec)
    try:
        dx = float(sec["dx"])
        dt = float(sec["dt"]) if "dt" in sec else None
        steps = int(sec["steps"]) if "steps" in sec else None
        cfg = ExperimentConfig(
            name=sec.get("name", name), equation=equation, problem=problem, dx=dx, dt=dt,
            steps=steps, output=sec.get("output", "results"), seed=int(sec.get("seed", "0")),
            newton=_newton(sec),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad [experiment] section: {exc}") from exc
    _check_even(problem.b - problem.a, dx, "spatial", _DX_REL)
    for label in cp.sections():
        if label == "experiment":
            continue
        s = cp[label]
        try:
            entry = SchemeEntry(
                label=label, family=s["family"], alpha=float(s.get("alpha", "0")),
                beta=float(s.get("beta", "0")),
                dx=float(s["dx"]) if "dx" in s else None,
                dt=float(s["dt"]) if "dt" in s else None,
                steps=int(s["steps"]) if "steps" in s else None,
                explicit=s.getboolean("explicit", True),
            )
            make_scheme(equation, entry.family, entry.alpha, entry.beta)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad scheme section [{label}]: {exc}") from exc
        if entry.dx is not None:
            _check_even(problem.b - problem.a, entry.dx, f"[{label}] spatial", _DX_REL)
        n = cfg.step_count(entry)
        if entry.steps is None and (entry.dt is not None or cfg.steps is None):
            _check_even(problem.T, entry.dt if entry.dt is not None else cfg.dt, f"[{label}] time")
        if n < 1:
            raise ConfigError(f"[{label}] needs at least one time step")
        cfg.schemes.append(entry)
    return cfg


def bundled_configs():
    root = resources.files("conserva") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def read_config_text(ref):
    """Config text from a path, or from a bundled name such as ``table1``."""
    p = Path(ref)
    if p.is_file():
        return p.read_text(), p.stem
    name = p.name[:-4] if p.name.endswith(".cfg") else p.name
    res = resources.files("conserva") / "configs" / f"{name}.cfg"
    if res.is_file():
        return res.read_text(), name
    raise ConfigError(f"no config file or bundled config named {ref!r}")


def load_config(ref):
    text, name = read_config_text(ref)
    return parse_config(text, name)


# --- running ------------------------------------------------------------------------

@dataclass
class Row:
    """One scheme's outcome; ``report`` is None when the march failed."""

    method: str
    entry: SchemeEntry
    dx: float
    dt: float
    steps: int
    report: object = None
    wall_seconds: float = 0.0
    iterations_max: int = None
    factorizations: int = 0
    failure: dict = None

    @property
    def diverged(self):
        return self.report is None


def _run_row(job):
    cfg, entry, keep = job
    dx = entry.dx if entry.dx is not None else cfg.dx
    n = cfg.step_count(entry)
    dt = cfg.problem.T / n
    scheme = make_scheme(cfg.equation, entry.family, entry.alpha, entry.beta)
    row = Row(entry.label, entry, dx, dt, n)
    try:
        res = run_case(cfg.problem, scheme, dx, dt, cfg.newton, explicit=entry.explicit,
                       stride=1 if keep else 10**9)
    except MarchFailure as exc:
        row.failure = {"message": str(exc.args[0]) if exc.args else str(exc),
                       "step": getattr(exc, "step", None),
                       "residual_norm": getattr(exc, "residual_norm", None)}
        return (row, None) if keep else row
    h = res.history
    row.report = res.report
    row.wall_seconds = h.wall_seconds
    row.iterations_max = max((k for k in h.iterations if k is not None), default=0)
    row.factorizations = h.factorizations
    return (row, h) if keep else row


def run(cfg, workers=None):
    """Run every scheme row of ``cfg``; failed marches become diverged rows."""
    jobs = [(cfg, e, False) for e in cfg.schemes]
    w = worker_count(workers)
    if w > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(w, len(jobs))) as ex:
            return list(ex.map(_run_row, jobs))
    return [_run_row(j) for j in jobs]


def run_entry_history(cfg, label):
    """Re-run one row keeping every level; returns (row, history or None)."""
    for e in cfg.schemes:
        if e.label == label:
            return _run_row((cfg, e, True))
    raise ConfigError(f"config {cfg.name!r} has no scheme [{label}]")


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{v:.5e}"


def csv_text(rows):
    """CSV table with 6 significant digits; failed rows read ``diverged``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        if r.diverged:
            w.writerow([r.method] + ["diverged"] * len(_METRICS) + [_fmt(r.wall_seconds)])
        else:
            w.writerow([r.method] + [_fmt(getattr(r.report, m)) for m in _METRICS]
                       + [_fmt(r.wall_seconds)])
    return buf.getvalue()


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating, np.integer)):
        return _clean(v.item())
    return v


def json_data(cfg, rows):
    out = []
    for r in rows:
        d = {"method": r.method, "family": r.entry.family, "alpha": r.entry.alpha,
             "beta": r.entry.beta, "dx": r.dx, "dt": r.dt, "steps": r.steps,
             "status": "diverged" if r.diverged else "ok",
             "wall_seconds": r.wall_seconds, "iterations_max": r.iterations_max,
             "factorizations": r.factorizations}
        if r.diverged:
            d["failure"] = {k: _clean(v) for k, v in r.failure.items()}
        else:
            d.update({k: _clean(v) for k, v in r.report.as_dict().items()})
        out.append(d)
    return {"name": cfg.name, "equation": cfg.equation.value, "problem": cfg.problem.kind,
            "domain": [cfg.problem.a, cfg.problem.b], "T": cfg.problem.T, "rows": out}


def write_outputs(cfg, rows, out_dir=None):
    """Write ``<name>.csv`` and ``<name>.json``; returns both paths."""
    d = Path(out_dir or cfg.output)
    d.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = d / f"{cfg.name}.csv", d / f"{cfg.name}.json"
    csv_path.write_text(csv_text(rows))
    json_path.write_text(json.dumps(json_data(cfg, rows), indent=1) + "\n")
    return csv_path, json_path


# --- sweeps ---------------------------------------------------------------------------

@dataclass
class SweepConfig:
    name: str
    problem: object
    dx: float
    dt: float
    spec: SweepSpec
    output: str = "results"
    newton: NewtonConfig = field(default_factory=NewtonConfig)


def _range(sec, key):
    if key not in sec:
        return 0.0
    vals = _floats(sec[key])
    return vals if len(vals) == 2 else vals[0]


def parse_sweep(text, name="sweep"):
    cp = _parser(text)
    if "sweep" not in cp:
        raise ConfigError("sweep config needs a [sweep] section")
    sec = cp["sweep"]
    _, problem = _problem_from(sec)
    try:
        spec = SweepSpec(sec["family"], _range(sec, "alpha"), _range(sec, "beta"),
                         Objective(sec.get("objective", "SolutionError")),
                         int(sec.get("points", "21")), int(sec.get("passes", "3")))
        return SweepConfig(sec.get("name", name), problem, float(sec["dx"]), float(sec["dt"]),
                           spec, sec.get("output", "results"), _newton(sec))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad [sweep] section: {exc}") from exc


def load_sweep(ref):
    text, name = read_config_text(ref)
    return parse_sweep(text, name)


def run_sweep(sc, workers=None):
    return optimize(sc.spec, sc.problem, sc.dx, sc.dt, sc.newton, workers)


def write_sweep(sc, result, out_dir=None):
    d = Path(out_dir or sc.output)
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"{sc.name}.json"
    data = {"name": sc.name, "family": sc.spec.family, "objective": sc.spec.objective.value,
            "best": result.best, "value": _clean(result.value),
            "record": [[a, b, _clean(v)] for a, b, v in result.scanned()]}
    path.write_text(json.dumps(data, indent=1) + "\n")
    return path


# --- profiles -----------------------------------------------------------------------------

def profile_dump(history, times, path, exact=None):
    """Write (x, u[, exact]) blocks, one per requested time, for gnuplot.

    Times snap to the nearest stored level with a warning when they are not
    stored exactly. Blocks are separated by two blank lines so that gnuplot's
    ``index`` selects them.
    """
    x = history.grid.x
    blocks = []
    for t in times:
        j = history.level_at(t)
        ts = float(history.t[j])
        if not math.isclose(ts, t, rel_tol=1e-9, abs_tol=1e-12):
            warnings.warn(f"t={t} is not a stored level; using t={ts:.10g}", stacklevel=2)
        lines = [f"# t = {ts:.10g}"]
        cols = [x, history.u[j]]
        if exact is not None:
            lines[0] += "  columns: x u exact"
            cols.append(np.asarray(exact(x, ts), dtype=float) * np.ones_like(x))
        else:
            lines[0] += "  columns: x u"
        for vals in zip(*cols):
            lines.append(" ".join(f"{v:.16e}" for v in vals))
        blocks.append("\n".join(lines))
    Path(path).write_text("\n\n\n".join(blocks) + "\n")
    return Path(path)


# --- verification ---------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float
    tol: float
    expect_zero: bool = True

    @property
    def passed(self):
        if self.expect_zero:
            return self.value <= self.tol
        return self.value >= self.tol

    def line(self):
        rel = "<=" if self.expect_zero else ">="
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:32s} {self.value:.3e} {rel} {self.tol:.0e}"


SCOPES = ("Identities", "Euler", "Theorem1", "All")


def verify(scope="All", seed=calculus.DEFAULT_SEED, trials=20):
    """Run the identity, Euler-operator and summation-by-parts suites."""
    scope = {s.lower(): s for s in SCOPES}.get(str(scope).lower())
    if scope is None:
        raise ConfigError(f"scope must be one of {', '.join(SCOPES)}")
    checks = []
    if scope in ("Identities", "All"):
        for name, Q, A, F, G, grid in calculus.shipped_identities():
            v = calculus.divergence_identity_check(Q, A, F, G, trials, grid, seed, relative=True)
            checks.append(Check(f"identity {name}", v, 1e-12))
    if scope in ("Euler", "All"):
        for name, f, grid, zero in calculus.euler_kernel_cases():
            v = calculus.euler_defect(f, grid, draws=10, seed=seed)
            checks.append(Check(f"euler {name}", v, 1e-5 if zero else 1e-3, zero))
    if scope in ("Theorem1", "All"):
        from .heat import HeatScheme, heat_laws
        laws = heat_laws(HeatScheme("CS", 0.0, -0.125))
        for i, tol in ((1, 1e-12), (2, 1e-11)):
            v = calculus.theorem1_check(laws[1].density, laws.f_tilde, 2, i, trials, seed)
            checks.append(Check(f"theorem k=2 i={i}", v, tol))
    return checks

