"""Benchmark problems and single-scheme runs.

A run marches one scheme on one problem and returns the diagnostics and the
history. The benchmark harness and the parameter sweeps are both built on
:func:`run_case`.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import (HeatLawTracker, exact_peak_x, heat_report, kdv_report,
                          kdv_trackers)
from .grid import GridSpec
from .heat import (HeatFamily, HeatScheme, explicit_cs00_step, heat_jacobian, heat_problem,
                   heat_residual)
from .kdv import Exact, KdvScheme, kdv_exact, kdv_jacobian, kdv_residual
from .solver import NewtonConfig, march_explicit, newton_march


class Equation(enum.Enum):
    KDV = "KdV"
    HEAT = "Heat"


KDV_DEFAULT_PARAMS = {
    Exact.ONE_SOLITON: (5.0, 5.0),
    Exact.TWO_SOLITON: (10.0, 5.0, 12.0, 10.0),
}


@dataclass(frozen=True)
class Problem:
    """Equation, benchmark, domain, horizon and exact-solution parameters."""

    equation: Equation
    kind: str
    a: float
    b: float
    T: float
    params: tuple = ()

    def exact(self):
        if self.equation is Equation.KDV:
            kind = Exact(self.kind)
            return lambda x, t: kdv_exact(kind, self.params, x, t)
        return heat_problem(self.kind, *self.params).exact


def make_problem(equation, kind, a=None, b=None, T=None, params=None):
    """Problem with the benchmark defaults filled in."""
    equation = Equation(equation)
    if equation is Equation.KDV:
        kind = Exact(kind).value
        defaults = (-20.0, 20.0, 2.0, KDV_DEFAULT_PARAMS[Exact(kind)])
    else:
        hp = heat_problem(kind, *(params or ()))
        kind = hp.kind.value
        defaults = (hp.a, hp.b, hp.T, ())
    a = defaults[0] if a is None else a
    b = defaults[1] if b is None else b
    T = defaults[2] if T is None else T
    params = tuple(defaults[3] if params is None else params)
    return Problem(equation, kind, float(a), float(b), float(T), params)


def time_steps(T, dt):
    """Number of steps of size about ``dt`` covering [0, T].

    Printed step sizes are rounded (0.333 for T/12), so the count is the
    nearest integer and the actual step is T / steps.
    """
    n = int(round(T / dt))
    if n < 1:
        raise ValueError(f"dt={dt} exceeds the horizon T={T}")
    return n


def problem_grid(problem, dx, dt):
    steps = time_steps(problem.T, dt)
    if problem.equation is Equation.KDV:
        return GridSpec.periodic(problem.a, problem.b, dx, T=problem.T, steps=steps)
    return GridSpec.dirichlet(problem.a, problem.b, dx, T=problem.T, steps=steps)


@dataclass
class CaseResult:
    report: object
    history: object
    grid: object
    extra: dict = field(default_factory=dict)


def run_case(problem, scheme, dx, dt, cfg=None, stride=1, explicit=True):
    """March ``scheme`` on ``problem`` and compute every applicable metric.

    CS(0,0) is advanced by its linear one-step solve when ``explicit`` is
    true. Raises :class:`~conserva.errors.MarchFailure` when a step fails.
    """
    grid = problem_grid(problem, dx, dt)
    exact = problem.exact()
    if problem.equation is Equation.KDV:
        if not isinstance(scheme, KdvScheme):
            raise TypeError("KdV problems need a KdvScheme")
        u0 = np.asarray(exact(grid.x, 0.0), dtype=float)
        trackers = kdv_trackers(scheme, grid)
        hist = newton_march(
            lambda lo, up: kdv_residual(scheme, lo, up, grid),
            lambda lo, up: kdv_jacobian(scheme, lo, up, grid),
            u0, grid, cfg, observers=list(trackers.values()), stride=stride,
            scheme=scheme.label, params={"alpha": scheme.alpha, "beta": scheme.beta},
        )
        peak = None
        if Exact(problem.kind) is Exact.TWO_SOLITON:
            peak = exact_peak_x(exact, hist.t[-1], grid)
        rep = kdv_report(hist, scheme, trackers, exact=exact, peak=peak)
        return CaseResult(rep, hist, grid)

    if not isinstance(scheme, HeatScheme):
        raise TypeError("heat problems need a HeatScheme")
    hp = heat_problem(problem.kind, *problem.params)
    bdry = hp.bdry
    bdry.check(grid)
    tracker = HeatLawTracker(scheme, grid)
    u0 = bdry.initial(grid)
    params = {"alpha": scheme.alpha, "beta": scheme.beta}
    if explicit and scheme.family is HeatFamily.CS and scheme.alpha == 0 and scheme.beta == 0:
        hist = march_explicit(lambda lo, t: explicit_cs00_step(lo, bdry, grid, t), u0, grid, bdry,
                              observers=[tracker], stride=stride, scheme=scheme.label,
                              params=params)
    else:
        hist = newton_march(
            lambda lo, up: heat_residual(scheme, lo, up, bdry, grid),
            lambda lo, up: heat_jacobian(scheme, lo, up, bdry, grid),
            u0, grid, cfg, bdry, observers=[tracker], stride=stride,
            scheme=scheme.label, params=params,
        )
    return CaseResult(heat_report(hist, tracker, exact), hist, grid)


def make_scheme(equation, family, alpha=0.0, beta=0.0):
    if Equation(equation) is Equation.KDV:
        return KdvScheme(family, alpha, beta)
    return HeatScheme(family, alpha, beta)


def finite_or_inf(v):
    return v if (v is not None and math.isfinite(v)) else math.inf
