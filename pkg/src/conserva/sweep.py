"""Free-parameter optimisation by scan and local refinement.

The objective is either the solution error or the error in the conservation
law a scheme does not preserve (energy for the MC families, momentum for the
EC families). A coarse grid scan is followed by passes that halve the
spacing around the incumbent. Within a pass, moves along one coordinate at
a time are repeated until none improves, which lets two-parameter searches
follow a diagonal valley.
"""

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, MarchFailure, NotApplicableError
from .experiments import Equation, make_scheme, run_case
from .kdv import KdvScheme, kdv_laws


class Objective(enum.Enum):
    SOLUTION_ERROR = "SolutionError"
    NON_PRESERVED_CL_ERROR = "NonPreservedCLError"


_FREE = {"EC8": 0, "MC8": 1, "EC10": 1, "MC10": 2, "Multisymplectic": 0, "NarrowBox": 0,
         "CS": 2, "MLIM": 0}


@dataclass(frozen=True)
class SweepSpec:
    """What to scan. A range with lo == hi, or a float, fixes that parameter."""

    family: str
    alpha: object = 0.0
    beta: object = 0.0
    objective: Objective = Objective.SOLUTION_ERROR
    points: int = 21
    passes: int = 3

    def __post_init__(self):
        object.__setattr__(self, "objective", Objective(self.objective))
        for name in ("alpha", "beta"):
            r = getattr(self, name)
            if isinstance(r, (tuple, list)):
                lo, hi = map(float, r)
                if lo > hi:
                    raise ConfigError(f"{name} range needs lo <= hi, got [{lo}, {hi}]")
                object.__setattr__(self, name, (lo, hi))
            else:
                object.__setattr__(self, name, (float(r), float(r)))
        if self.passes < 0:
            raise ConfigError("refinement passes must be >= 0")
        if self.points < 2:
            raise ConfigError("need at least 2 scan points per parameter")

    def axes(self):
        """Names of the parameters that are actually scanned."""
        free = _FREE.get(self.family, 2)
        names = ("alpha", "beta")[:free]
        return [n for n in names if getattr(self, n)[0] < getattr(self, n)[1]]


@dataclass
class SweepResult:
    best: dict
    value: float
    record: list = field(default_factory=list)   # [(alpha, beta, objective)] in evaluation order

    def scanned(self):
        return sorted(self.record)


def non_preserved_index(scheme):
    """Index of the KdV law the scheme does not preserve (2 or 3)."""
    if not isinstance(scheme, KdvScheme):
        raise NotApplicableError("the non-preserved-law objective is defined for KdV schemes")
    missing = [k for k in (2, 3) if k not in kdv_laws(scheme)]
    if len(missing) != 1:
        raise NotApplicableError(f"{scheme.label} does not preserve exactly one of laws 2 and 3")
    return missing[0]


def evaluate_point(job):
    """Objective at one parameter point; a failed march scores +inf."""
    problem, family, alpha, beta, objective, dx, dt, cfg = job
    scheme = make_scheme(problem.equation, family, alpha, beta)
    try:
        res = run_case(problem, scheme, dx, dt, cfg, stride=10**9)
    except MarchFailure:
        return math.inf
    rep = res.report
    if objective is Objective.SOLUTION_ERROR:
        v = rep.solution_error
    else:
        v = getattr(rep, f"err{non_preserved_index(scheme)}")
    return float(v) if math.isfinite(v) else math.inf


def worker_count(requested=None):
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("CONSERVA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"CONSERVA_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


class _Evaluator:
    def __init__(self, spec, problem, dx, dt, cfg, workers):
        self.spec, self.problem, self.dx, self.dt, self.cfg = spec, problem, dx, dt, cfg
        self.workers = worker_count(workers)
        self.cache = {}
        self.record = []

    def __call__(self, points):
        todo = [p for p in dict.fromkeys(points) if p not in self.cache]
        jobs = [(self.problem, self.spec.family, a, b, self.spec.objective, self.dx, self.dt,
                 self.cfg) for a, b in todo]
        if self.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=min(self.workers, len(jobs))) as ex:
                vals = list(ex.map(evaluate_point, jobs))
        else:
            vals = [evaluate_point(j) for j in jobs]
        for p, v in zip(todo, vals):
            self.cache[p] = v
            self.record.append((p[0], p[1], v))
        return [self.cache[p] for p in points]


_MAX_MOVES = 40


def _key(a, b):
    # rounding keeps grid points reached by different routes identical
    return (round(float(a), 12), round(float(b), 12))


def optimize(spec, problem, dx, dt, cfg=None, workers=None):
    """Scan then refine; returns a :class:`SweepResult`.

    ``problem`` is an :class:`~conserva.experiments.Problem`; (dx, dt) the
    step sizes of every march. The returned optimum is never worse than
    any evaluated point.
    """
    if isinstance(problem.equation, Equation) and problem.equation is Equation.HEAT \
            and spec.objective is Objective.NON_PRESERVED_CL_ERROR:
        raise NotApplicableError("heat CS schemes preserve both laws; use SolutionError")
    ev = _Evaluator(spec, problem, dx, dt, cfg, workers)
    axes = spec.axes()
    lo = {n: getattr(spec, n)[0] for n in ("alpha", "beta")}
    hi = {n: getattr(spec, n)[1] for n in ("alpha", "beta")}
    step = {n: (hi[n] - lo[n]) / (spec.points - 1) for n in axes}

    grids = {n: np.linspace(lo[n], hi[n], spec.points) if n in axes else np.array([lo[n]])
             for n in ("alpha", "beta")}
    pts = [_key(a, b) for a in grids["alpha"] for b in grids["beta"]]
    vals = ev(pts)
    k = int(np.argmin(vals))
    best, best_v = pts[k], vals[k]

    for _ in range(spec.passes if axes else 0):
        for n in axes:
            step[n] *= 0.5
        # compass search at this spacing: keep moving while any axis improves
        for _ in range(_MAX_MOVES):
            moved = False
            for n in axes:
                idx = 0 if n == "alpha" else 1
                cand = []
                for sgn in (-1, 1):
                    c = list(best)
                    c[idx] = best[idx] + sgn * step[n]
                    if lo[n] - 1e-12 <= c[idx] <= hi[n] + 1e-12:
                        cand.append(_key(*c))
                for p, v in zip(cand, ev(cand)):
                    if v < best_v:
                        best, best_v, moved = p, v, True
            if not moved:
                break
    return SweepResult({"alpha": best[0], "beta": best[1]}, best_v, ev.record)


def boundary_minimum(result, spec, axis="alpha"):
    """True when the scan minimum along ``axis`` lies on the range boundary."""
    lo, hi = getattr(spec, axis)
    v = result.best[axis]
    return math.isclose(v, lo, abs_tol=1e-12) or math.isclose(v, hi, abs_tol=1e-12)

