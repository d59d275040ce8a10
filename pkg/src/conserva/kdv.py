"""Conservative finite difference schemes for u_t + u u_x + u_xxx = 0.

Every scheme is written as ``Dm(F1) + Dn(G1)`` at a base node, with the
lattice offsets exactly as in its defining formulas; periodic wrap absorbs
the negative offsets. The energy-conserving families (EC8, EC10) also carry
a third conservation law, the momentum-conserving families (MC8, MC10) a
second one. The multisymplectic and narrow box schemes preserve mass only.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateParametersError
from .grid import Dm, Dn, Expr, Sm, dx_pow, evaluate, extents, mum, mun, u
from .solver import complex_step_jacobian


class Family(enum.Enum):
    EC8 = "EC8"
    MC8 = "MC8"
    EC10 = "EC10"
    MC10 = "MC10"
    MULTISYMPLECTIC = "Multisymplectic"
    NARROW_BOX = "NarrowBox"


TEN_POINT = {Family.EC10, Family.MC10}


@dataclass(frozen=True)
class KdvScheme:
    family: Family
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", Family(self.family))
        if self.family in (Family.EC8, Family.MULTISYMPLECTIC, Family.NARROW_BOX):
            object.__setattr__(self, "alpha", 0.0)
            object.__setattr__(self, "beta", 0.0)
        elif self.family in (Family.MC8, Family.EC10):
            object.__setattr__(self, "beta", 0.0)

    @property
    def stencil_points(self):
        return 10 if self.family in TEN_POINT else 8

    @property
    def label(self):
        f = self.family
        if f is Family.MC10:
            return f"MC10({self.alpha:g},{self.beta:g})"
        if f in (Family.MC8, Family.EC10):
            return f"{f.value}({self.alpha:g})"
        return f.value


@dataclass(frozen=True)
class ConservationLaw:
    """Characteristic, flux and density of one discrete conservation law."""

    index: int
    characteristic: Expr
    flux: Expr
    density: Expr


@dataclass
class KdvLawSet:
    scheme: KdvScheme
    laws: dict = field(default_factory=dict)
    # summands h_i of H(j) = -(dx/2) * sum_i h_i
    hamiltonians: dict = field(default_factory=dict)

    def __contains__(self, index):
        return index in self.laws

    def __getitem__(self, index):
        return self.laws[index]


# --- scheme building blocks --------------------------------------------------

def _one():
    return Expr(lambda w: 1.0)


def _ec8():
    a = mum(u(-2, 0), 2)                       # mu_m^2 u_{-2,0}
    F1 = (1 / 3) * mun(a ** 2) + (1 / 6) * a * mum(u(-2, 1), 2) + mun(Dm(u(-2, 0), 2))
    G1 = mum(u(-1, 0))
    Q3 = 2 * mum(F1)
    b = mun(Dm(mum(u(-2, 0))))                 # mu_n D_m mu_m u_{-2,0}
    c = mun(a)                                 # mu_n mu_m^2 u_{-2,0}
    F3 = (
        F1 ** 2
        + b * Dn(a)
        - c * Dn(Dm(mum(u(-2, 0))))
        + dx_pow(2, 1 / 6) * c * (
            (2 * mum(Dn(u(-1, 0)))) * b
            - Dn(mum(u(-1, 0)) * Dm(mum(u(-2, 0))))
        )
    )
    G3 = (1 / 3) * G1 * mum(a ** 2) + G1 * mum(Dm(u(-2, 0), 2))
    laws = {
        1: ConservationLaw(1, _one(), F1, G1),
        3: ConservationLaw(3, Q3, F3, G3),
    }
    return F1, G1, laws, {"H1": G3}


def _mc8(alpha):
    lam = dx_pow(2, alpha)
    F1 = (
        (1 / 6) * mun(u(-1, 0)) * mun(u(-2, 0) + u(-1, 0) + u(0, 0))
        + mun(Dm(u(-2, 0), 2))
        + lam * (
            mun(u(0, 0)) * Dm(mun(u(-2, 0)), 2)
            + Dm(mun(u(-2, 0)) * Dm(mun(u(-2, 0))))
        )
    )
    G1 = mum(u(-1, 0))
    Q2 = mum(mun(u(-1, 0)))
    F2 = (
        (1 / 3) * mum(mun(u(-2, 0))) * mum(mun(u(-1, 0)))
        * mun(u(-1, 0) + 6 * lam * Dm(u(-2, 0), 2))
        + mun(mum(u(-2, 0), 2)) * mun(Dm(u(-2, 0), 2))
        - 0.5 * mum(mun(Dm(u(-2, 0))) ** 2)
    )
    G2 = 0.5 * G1 ** 2
    laws = {
        1: ConservationLaw(1, _one(), F1, G1),
        2: ConservationLaw(2, Q2, F2, G2),
    }
    return F1, G1, laws, {"H2": G1 ** 2}


def _ec10(alpha):
    lam = dx_pow(2, alpha)
    # phi_{0,0}; the scheme uses phi_{-1,0} = S_m^{-1} phi_{0,0}
    phi = (
        (u(0, 1) ** 2 + u(0, 0) ** 2 + u(0, 0) * u(0, 1)) / 6
        + Dm(mun(u(-1, 0)), 2)
        + lam * Dn(Dm(mum(u(-1, 0))))
    )
    phi_m1 = Sm(phi, -1)
    F1 = mum(phi_m1)
    G1 = u(0, 0)
    Q3 = 2 * phi
    F3 = (
        phi * phi_m1
        + Dm(mun(u(-1, 0))) * Dn(mum(u(-1, 0)))
        - mum(mun(u(-1, 0))) * Dn(Dm(u(-1, 0)))
        + lam * Dn(u(0, 0)) * Dn(u(-1, 0))
    )
    G3 = (1 / 3) * u(0, 0) ** 3 + u(0, 0) * Dm(u(-1, 0), 2)
    laws = {
        1: ConservationLaw(1, _one(), F1, G1),
        3: ConservationLaw(3, Q3, F3, G3),
    }
    return F1, G1, laws, {"H1": G3}


def _mc10(alpha, beta):
    lam = dx_pow(2, alpha)
    nu = dx_pow(2, beta)
    p, q = mun(u(-1, 0)), mun(u(0, 0))
    corr = lam * u(-1, 0) + nu * Dm(u(-2, 0), 2)
    F1 = (p ** 2 + q ** 2 + p * q) / 6 + mun(Dm(mum(u(-2, 0)), 2)) + Dn(Dm(corr))
    G1 = u(0, 0)
    Q2 = q
    F2 = (
        (1 / 3) * q * p * mun(mum(u(-1, 0)))
        + 0.5 * (q * Dm(mun(u(-2, 0)), 2) + p * Dm(mun(u(-1, 0)), 2))
        - 0.5 * Dm(mun(u(-1, 0))) ** 2
        + lam * (
            mum(mun(u(-1, 0))) * Dn(Dm(u(-1, 0)))
            - 0.5 * Dn(mum(u(-1, 0)) * Dm(u(-1, 0)))
        )
        + nu * (
            q * Dn(Dm(u(-2, 0), 3))
            - Dm(mun(u(-1, 0))) * Dn(Dm(u(-1, 0), 2))
            + 0.5 * Dn(Dm(u(-1, 0)) * Dm(u(-1, 0), 2) - u(0, 0) * Dm(u(-2, 0), 3))
        )
    )
    h2 = u(0, 0) ** 2 + u(0, 0) * Dm(corr, 2)
    G2 = 0.5 * h2
    laws = {
        1: ConservationLaw(1, _one(), F1, G1),
        2: ConservationLaw(2, Q2, F2, G2),
    }
    return F1, G1, laws, {"H2": h2}


def _multisymplectic():
    F1 = 0.5 * mum(mum(mun(u(-2, 0))) ** 2) + Dm(mun(u(-2, 0)), 2)
    G1 = mum(u(-2, 0), 3)
    return F1, G1, {1: ConservationLaw(1, _one(), F1, G1)}, {}


def _narrow_box():
    F1 = 0.5 * mun(u(-1, 0)) ** 2 + Dm(mun(u(-2, 0)), 2)
    G1 = mum(u(-1, 0))
    return F1, G1, {1: ConservationLaw(1, _one(), F1, G1)}, {}


def _parts(scheme):
    f = scheme.family
    if f is Family.EC8:
        return _ec8()
    if f is Family.MC8:
        return _mc8(scheme.alpha)
    if f is Family.EC10:
        return _ec10(scheme.alpha)
    if f is Family.MC10:
        return _mc10(scheme.alpha, scheme.beta)
    if f is Family.MULTISYMPLECTIC:
        return _multisymplectic()
    return _narrow_box()


class _Compiled:
    """Residual expression and Jacobian bandwidth for one scheme."""

    def __init__(self, scheme):
        F1, G1, laws, hams = _parts(scheme)
        self.scheme = scheme
        self.flux, self.density = F1, G1
        self.residual = Dm(F1) + Dn(G1)
        self.laws = KdvLawSet(scheme, laws, hams)
        from .grid import offsets
        upper_cols = [i for i, j in offsets(self.residual) if j == 1]
        # row m depends on column m + i
        self.kl = max(0, -min(upper_cols))
        self.ku = max(0, max(upper_cols))


_CACHE = {}


def compiled(scheme):
    c = _CACHE.get(scheme)
    if c is None:
        c = _CACHE[scheme] = _Compiled(scheme)
    return c


def residual_expr(scheme):
    return compiled(scheme).residual


def kdv_residual(scheme, lower, upper, grid):
    """Residual D_m F1 + D_n G1 at every node of a periodic grid."""
    if not grid.is_periodic:
        raise ValueError("KdV schemes are defined on periodic grids")
    return evaluate(compiled(scheme).residual, np.vstack([lower, upper]), grid)


def kdv_jacobian(scheme, lower, upper, grid):
    """d(residual)/d(upper) as a cyclic :class:`~conserva.solver.BandedMatrix`."""
    c = compiled(scheme)
    lower = np.asarray(lower, dtype=float)

    def fun(up):
        return evaluate(c.residual, np.vstack([lower.astype(up.dtype), up]), grid)

    return complex_step_jacobian(fun, upper, c.kl, c.ku, cyclic=True)


def kdv_laws(scheme):
    return compiled(scheme).laws


# --- exact solutions -----------------------------------------------------------

class Exact(enum.Enum):
    ONE_SOLITON = "OneSoliton"
    TWO_SOLITON = "TwoSoliton"


def one_soliton(x, t, c=5.0, d=5.0):
    if c <= 0:
        raise ValueError("soliton speed c must be positive")
    return 3 * c / np.cosh(0.5 * np.sqrt(c) * (x - c * t + d)) ** 2


def two_soliton(x, t, c1=10.0, c2=5.0, d1=12.0, d2=10.0):
    """Two-soliton solution on the real line.

    The hyperbolic functions are scaled by exp(-|xi1| - |xi2|) before the
    quotient is formed, so large |xi| never overflows.
    """
    if c1 == c2:
        raise DegenerateParametersError("c1 == c2 makes the two-soliton formula singular")
    if not c1 > c2 > 0:
        raise ValueError("two-soliton parameters need c1 > c2 > 0")
    x = np.asarray(x, dtype=float)
    r1, r2 = np.sqrt(c1), np.sqrt(c2)
    xi1 = 0.5 * r1 * (x + d1 - c1 * t)
    xi2 = 0.5 * r2 * (x + d2 - c2 * t)
    s = np.abs(xi1) + np.abs(xi2)
    # 4 e^{-2s} cosh^2(y) = e^{2(y-s)} + 2 e^{-2s} + e^{-2(y+s)}
    def cosh2(y):
        return 0.25 * (np.exp(2 * (y - s)) + 2 * np.exp(-2 * s) + np.exp(-2 * (y + s)))

    def sinh2(y):
        return 0.25 * (np.exp(2 * (y - s)) - 2 * np.exp(-2 * s) + np.exp(-2 * (y + s)))

    def cosh_(y):
        return 0.5 * (np.exp(y - s) + np.exp(-y - s))

    num = 12 * (c1 - c2) * (c1 * cosh2(xi2) + c2 * sinh2(xi1))
    den = ((r1 - r2) * cosh_(xi1 + xi2) + (r1 + r2) * cosh_(xi1 - xi2)) ** 2
    return num / den


def kdv_exact(kind, params, x, t):
    kind = Exact(kind)
    if kind is Exact.ONE_SOLITON:
        return one_soliton(x, t, *params)
    return two_soliton(x, t, *params)
