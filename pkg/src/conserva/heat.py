"""Schemes for the nonlinear heat equation u_t - u_x^2 - u u_xx = 0 with Dirichlet data.

The equation is D_t(u) + D_x^2(-u^2/2) = 0, so any scheme written as
D_n(g) + D_m^2(f) = 0 conserves discrete analogues of the laws with
characteristics 1 and x. CS(alpha, beta) is the two-parameter family of such
schemes on the six-point stencil; ML/IM is the method-of-lines baseline
integrated with the implicit midpoint rule.
"""

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, MarchFailure, SingularMatrixError
from .grid import Dm, Dn, GridSpec, dt_pow, dx_pow, evaluate, mum, mun, u, x
from .kdv import ConservationLaw
from .solver import BandedMatrix, complex_step_jacobian


class HeatFamily(enum.Enum):
    CS = "CS"
    MLIM = "MLIM"


@dataclass(frozen=True)
class HeatScheme:
    family: HeatFamily
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", HeatFamily(self.family))
        if self.family is HeatFamily.MLIM:
            object.__setattr__(self, "alpha", 0.0)
            object.__setattr__(self, "beta", 0.0)

    @property
    def label(self):
        if self.family is HeatFamily.MLIM:
            return "ML/IM"
        return f"CS({self.alpha:g},{self.beta:g})"


@dataclass(frozen=True)
class BoundaryData:
    """Initial profile psi(x) and boundary values phi1(t) at x=a, phi2(t) at x=b."""

    psi: Callable
    phi1: Callable
    phi2: Callable

    def check(self, grid, tol=1e-12):
        """Raise ValueError when the corner values disagree."""
        for name, p, q in (("left", self.psi(grid.a), self.phi1(0.0)),
                           ("right", self.psi(grid.b), self.phi2(0.0))):
            if abs(p - q) > tol:
                raise ValueError(f"{name} corner mismatch: psi={p!r}, phi={q!r}")

    def initial(self, grid):
        u0 = np.asarray(self.psi(grid.x), dtype=float).copy()
        u0[0], u0[-1] = self.phi1(0.0), self.phi2(0.0)
        return u0


@dataclass
class HeatLawSet:
    scheme: HeatScheme
    laws: dict
    f_tilde: object = None

    @property
    def empty(self):
        """True for schemes without discrete conservation laws (ML/IM)."""
        return not self.laws

    def __contains__(self, index):
        return index in self.laws

    def __getitem__(self, index):
        return self.laws[index]


def _one():
    return dx_pow(0)


def _cs_parts(alpha, beta):
    f = -0.5 * u(-1, 0) * u(-1, 1) + dt_pow(2, beta) * Dn(u(-1, 0)) ** 2
    F1 = Dm(f)
    G1 = u(0, 0) + dx_pow(2, alpha) * Dm(u(-1, 0), 2)
    return f, F1, G1


def _mlim_residual():
    return (
        Dn(u(0, 0))
        - Dm(mum(mun(u(-1, 0)))) ** 2
        - mun(u(0, 0)) * Dm(mun(u(-1, 0)), 2)
    )


class _Compiled:
    def __init__(self, scheme):
        self.scheme = scheme
        if scheme.family is HeatFamily.CS:
            f, F1, G1 = _cs_parts(scheme.alpha, scheme.beta)
            self.residual = Dm(F1) + Dn(G1)
            F2 = mum(x(-1)) * F1 - mum(f)
            G2 = x(0) * G1
            self.laws = HeatLawSet(scheme, {
                1: ConservationLaw(1, _one(), F1, G1),
                2: ConservationLaw(2, x(0), F2, G2),
            }, f)
        else:
            self.residual = _mlim_residual()
            self.laws = HeatLawSet(scheme, {})


_CACHE = {}


def compiled(scheme):
    c = _CACHE.get(scheme)
    if c is None:
        c = _CACHE[scheme] = _Compiled(scheme)
    return c


def residual_expr(scheme):
    return compiled(scheme).residual


def _interior(grid):
    return np.arange(1, grid.M - 1)


def heat_residual(scheme, lower, upper, bdry, grid):
    """Residual at the interior nodes 1..M-2.

    ``upper`` must already carry the boundary values at the new time level;
    ``bdry`` is accepted for symmetry with the Jacobian and not read.
    """
    if grid.is_periodic:
        raise ValueError("heat schemes are defined on Dirichlet grids")
    levels = np.vstack([lower, upper])
    return evaluate(compiled(scheme).residual, levels, grid, _interior(grid))


def heat_jacobian(scheme, lower, upper, bdry, grid):
    """d(residual)/d(interior of upper) as a tridiagonal :class:`BandedMatrix`."""
    expr = compiled(scheme).residual
    base = _interior(grid)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)

    def fun(v):
        up = upper.astype(v.dtype)
        up[1:-1] = v
        return evaluate(expr, np.vstack([lower.astype(v.dtype), up]), grid, base)

    return complex_step_jacobian(fun, upper[1:-1], 1, 1, cyclic=False)


def explicit_cs00_step(lower, bdry, grid, t_next):
    """One CS(0,0) step by a single tridiagonal solve.

    The scheme is linear in the new level: with v = u_{j+1},
    v_i/dt - (u_{i-1} v_{i-1} - 2 u_i v_i + u_{i+1} v_{i+1}) / (2 dx^2) = u_i/dt.
    """
    lower = np.asarray(lower, dtype=float)
    M, dx, dt = grid.M, grid.dx, grid.dt
    c = 1.0 / (2 * dx * dx)
    n = M - 2
    diags = np.zeros((3, n))
    diags[0] = -c * lower[0:M - 2]          # A[i, i-1]
    diags[1] = 1.0 / dt + 2 * c * lower[1:M - 1]
    diags[2] = -c * lower[2:M]              # A[i, i+1]
    rhs = lower[1:M - 1] / dt
    left, right = bdry.phi1(t_next), bdry.phi2(t_next)
    rhs[0] += c * lower[0] * left
    rhs[-1] += c * lower[-1] * right
    try:
        v = BandedMatrix(diags, 1, 1).factorize().solve(rhs)
    except SingularMatrixError as exc:
        step = int(round(t_next / dt))
        raise MarchFailure(f"CS(0,0) system is singular: {exc}", step, float("nan")) from exc
    out = np.empty(M)
    out[0], out[-1] = left, right
    out[1:-1] = v
    return out


def heat_laws(scheme):
    return compiled(scheme).laws


# --- benchmark problems ---------------------------------------------------------

class HeatProblemKind(enum.Enum):
    BARENBLATT = "Barenblatt"
    RAMP = "Ramp"
    BLOWUP = "BlowUp"


def barenblatt(x, t):
    x = np.asarray(x, dtype=float)
    s = (t + 1.0) ** (1.0 / 3.0)
    return np.maximum(1.0 - x * x / (6.0 * s * s), 0.0) / s


def ramp(x, t):
    return np.maximum(t - np.asarray(x, dtype=float), 0.0)


def blowup_interface(t, t_tilde=11.0):
    return math.sqrt(6.0) * (1.0 - (1.0 - t / t_tilde) ** (1.0 / 3.0))


def blowup(x, t, t_tilde=11.0):
    if t_tilde <= 0:
        raise ValueError("t_tilde must be positive")
    if t >= t_tilde:
        raise DomainError(f"blow-up solution exists only for t < {t_tilde}")
    x = np.asarray(x, dtype=float)
    val = ((1.0 - x / math.sqrt(6.0)) ** 2 - (1.0 - t / t_tilde) ** (2.0 / 3.0)) / (t_tilde - t)
    return np.where(x <= blowup_interface(t, t_tilde), val, 0.0)


def heat_exact(kind, params, x, t):
    kind = HeatProblemKind(kind)
    if kind is HeatProblemKind.BARENBLATT:
        return barenblatt(x, t)
    if kind is HeatProblemKind.RAMP:
        return ramp(x, t)
    return blowup(x, t, *params)


@dataclass(frozen=True)
class HeatProblem:
    kind: HeatProblemKind
    a: float
    b: float
    T: float
    bdry: BoundaryData
    exact: Callable

    def grid(self, dx, dt=None, steps=None):
        return GridSpec.dirichlet(self.a, self.b, dx, dt=dt or 1.0, T=self.T, steps=steps)


def heat_problem(kind, t_tilde=11.0):
    """Domain, horizon, boundary data and exact solution of a benchmark."""
    kind = HeatProblemKind(kind)
    if kind is HeatProblemKind.BARENBLATT:
        bd = BoundaryData(lambda x: barenblatt(x, 0.0), lambda t: 0.0, lambda t: 0.0)
        return HeatProblem(kind, -6.0, 6.0, 4.0, bd, barenblatt)
    if kind is HeatProblemKind.RAMP:
        bd = BoundaryData(lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                          lambda t: t, lambda t: 0.0)
        return HeatProblem(kind, 0.0, 15.0, 10.0, bd, ramp)
    bd = BoundaryData(
        lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        lambda t: (1.0 - (1.0 - t / t_tilde) ** (2.0 / 3.0)) / (t_tilde - t),
        lambda t: 0.0,
    )
    return HeatProblem(kind, 0.0, 5.0, 10.0, bd, lambda x, t: blowup(x, t, t_tilde))
