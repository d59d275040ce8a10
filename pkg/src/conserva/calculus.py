"""Numerical checks on difference expressions.

A difference expression is a divergence exactly when the difference Euler
operator E = sum_{i,j} S_m^{-i} S_n^{-j} d/du_{i,j} annihilates it. The
functions here evaluate E by central differences on random fields, check
the pointwise identities Q A = D_m F + D_n G shipped with each scheme, and
check the summation-by-parts property behind the heat-scheme laws.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientHistoryError, PreconditionError
from .grid import Dm, Dn, Expr, GridSpec, evaluate, extents, offsets, mun, u, x
from .solver import FieldHistory

DEFAULT_SEED = 0xC0FFEE


@dataclass(frozen=True)
class StencilFunction:
    """A difference expression together with the window it reads."""

    expr: Expr
    name: str = ""

    @property
    def extents(self):
        return extents(self.expr)

    @property
    def offsets(self):
        return offsets(self.expr)

    def __call__(self, levels, grid, base=None, level=0):
        return evaluate(self.expr, levels, grid, base, level)


def _expr(f):
    return f.expr if isinstance(f, StencilFunction) else f


def _levels(fields):
    if isinstance(fields, FieldHistory):
        return np.asarray(fields.u, dtype=float)
    return np.atleast_2d(np.asarray(fields, dtype=float))


def random_fields(levels, M, rng):
    """Uniform [-1, 1] values on ``levels`` time levels of ``M`` nodes."""
    return rng.uniform(-1.0, 1.0, size=(levels, M))


def trial_rng(seed, trial):
    """Generator for one trial; depends only on (seed, trial)."""
    return np.random.default_rng([int(seed), int(trial)])


def unit_grid(M=8, periodic=True, dx=1.0, dt=1.0):
    """Small grid for identity checks on unit-scale random fields."""
    if periodic:
        return GridSpec.periodic(0.0, M * dx, dx, dt)
    return GridSpec.dirichlet(0.0, (M - 1) * dx, dx, dt)


def discrete_euler(f, fields, node, grid, h=1e-6):
    """Difference Euler operator of ``f`` at ``node = (m, n)``.

    Every base node (m - i, n - j) whose window reads u_{m,n} contributes
    d f / d u_{i,j}; their sum is the derivative, with respect to the single
    lattice value u_{m,n}, of f summed over those bases. That derivative is
    taken by a central difference with step ``h``.
    """
    expr = _expr(f)
    levels = _levels(fields).copy()
    L, M = levels.shape
    m, n = node
    offs = sorted(offsets(expr))
    (imin, imax), (jmin, jmax) = extents(expr)
    if grid.is_periodic and imax - imin >= M:
        raise ValueError(f"window width {imax - imin + 1} exceeds the {M} grid nodes")

    by_level = {}
    for i, j in offs:
        b = n - j
        if b + jmin < 0 or b + jmax >= L:
            raise InsufficientHistoryError(
                f"base level {b} needs levels {b + jmin}..{b + jmax}, only 0..{L - 1} exist"
            )
        base = m - i
        if grid.is_periodic:
            base %= M
        by_level.setdefault(b, []).append(base)

    def total():
        return sum(float(np.sum(evaluate(expr, levels, grid, np.array(bs), b)))
                   for b, bs in by_level.items())

    v0 = levels[n, m]
    levels[n, m] = v0 + h
    up = total()
    levels[n, m] = v0 - h
    down = total()
    levels[n, m] = v0
    return (up - down) / (2 * h)


def _identity_terms(Q, A, F, G):
    Q, A, F, G = map(_expr, (Q, A, F, G))
    return Q * A, Dm(F), Dn(G)


def divergence_identity_check(Q, A, F, G, trials, grid, seed=DEFAULT_SEED, relative=False):
    """Max over random fields of |Q A - D_m F - D_n G| at one base node.

    With ``relative=True`` each defect is divided by the largest of the
    three terms, so the result is comparable across grid scalings.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    qa, dmf, dng = _identity_terms(Q, A, F, G)
    whole = qa - dmf - dng
    (imin, imax), (jmin, jmax) = extents(whole)
    L = jmax - jmin + 1
    base = np.array([-imin if not grid.is_periodic else 0])
    if not grid.is_periodic and imax - imin >= grid.M:
        raise ValueError("grid too small for the identity window")
    worst = 0.0
    for t in range(trials):
        lev = random_fields(L, grid.M, trial_rng(seed, t))
        a, b, c = (float(evaluate(e, lev, grid, base, -jmin)[0]) for e in (qa, dmf, dng))
        d = abs(a - b - c)
        if relative:
            d /= max(abs(a), abs(b), abs(c), np.finfo(float).tiny)
        worst = max(worst, d)
    return worst


def theorem1_check(g_tilde, f_tilde, k, i, trials, seed=DEFAULT_SEED, dx=0.1, M=64):
    """Max over random compact fields of dx * sum_m x_m^(i-1) (D_m^k f)_m.

    Applies to schemes D_n(g) + D_m^k(f) = 0, whose characteristics
    1, x, ..., x^(k-1) give conservation laws. ``f_tilde`` is evaluated on
    random fields supported well inside a Dirichlet grid (f must vanish on
    zero fields); ``g_tilde`` only sets how many time levels are drawn.
    """
    if not 1 <= i <= k:
        raise PreconditionError(f"need 1 <= i <= k, got i={i}, k={k}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    fe = _expr(f_tilde)
    (fi0, fi1), (fj0, fj1) = extents(fe)
    j0, j1 = fj0, fj1
    if g_tilde is not None:
        (_, _), (gj0, gj1) = extents(_expr(g_tilde))
        j0, j1 = min(j0, gj0), max(j1, gj1)
    grid = GridSpec.dirichlet(-0.5 * (M - 1) * dx, 0.5 * (M - 1) * dx, dx)
    pad = k + max(abs(fi0), abs(fi1)) + 2
    bases = np.arange(max(0, -fi0), min(M, M - fi1))
    xs = grid.x[bases]
    worst = 0.0
    for t in range(trials):
        lev = random_fields(j1 - j0 + 1, M, trial_rng(seed, t))
        lev[:, :pad] = 0.0
        lev[:, M - pad:] = 0.0
        fvals = evaluate(fe, lev, grid, bases, -j0)
        d = fvals
        for _ in range(k):
            d = np.diff(d) / dx
        s = dx * float(np.sum(xs[:d.size] ** (i - 1) * d))
        worst = max(worst, abs(s))
    return worst


# --- registry of shipped identities -------------------------------------------------

def shipped_identities():
    """Yield (name, Q, A, F, G, grid) for every preserved law of every scheme."""
    from .heat import HeatFamily, HeatScheme, heat_laws, residual_expr as heat_residual_expr
    from .kdv import Family, KdvScheme, kdv_laws, residual_expr as kdv_residual_expr

    kdv_schemes = [
        KdvScheme(Family.EC8), KdvScheme(Family.MC8, -0.073), KdvScheme(Family.EC10, 0.12),
        KdvScheme(Family.MC10, 0.39, 0.04), KdvScheme(Family.MULTISYMPLECTIC),
        KdvScheme(Family.NARROW_BOX),
    ]
    kgrid = GridSpec.periodic(0.0, 1.2, 0.1, 0.01)
    for s in kdv_schemes:
        A = kdv_residual_expr(s)
        for idx, law in sorted(kdv_laws(s).laws.items()):
            yield f"{s.label} law {idx}", law.characteristic, A, law.flux, law.density, kgrid
    hgrid = GridSpec.dirichlet(0.0, 1.5, 0.25, 1.0 / 3.0)
    for beta in (-0.25, -0.125, 0.0, 0.21):
        s = HeatScheme(HeatFamily.CS, 0.0, beta)
        A = heat_residual_expr(s)
        for idx, law in sorted(heat_laws(s).laws.items()):
            yield f"{s.label} law {idx}", law.characteristic, A, law.flux, law.density, hgrid


def euler_kernel_cases():
    """Yield (name, f, grid, expect_zero) for the Euler-operator suite.

    Preserved laws give Q A in the kernel; the non-preserved pairings
    (EC8 with linear momentum multipliers, ML/IM with 1, x and mu_n u) must
    stay away from it.
    """
    from .heat import HeatFamily, HeatScheme, residual_expr as heat_residual_expr
    from .kdv import Family, KdvScheme, kdv_laws, residual_expr as kdv_residual_expr

    pgrid = unit_grid(12)
    for s in (KdvScheme(Family.EC8), KdvScheme(Family.MC8, -0.073), KdvScheme(Family.EC10, 0.12),
              KdvScheme(Family.MC10, 0.39, 0.04), KdvScheme(Family.MULTISYMPLECTIC),
              KdvScheme(Family.NARROW_BOX)):
        A = kdv_residual_expr(s)
        for idx, law in sorted(kdv_laws(s).laws.items()):
            yield f"{s.label} law {idx}", law.characteristic * A, pgrid, True
    ec8 = kdv_residual_expr(KdvScheme(Family.EC8))
    yield "EC8 x mu_n u", mun(u(0, 0)) * ec8, pgrid, False
    yield "EC8 x mu_n u_{-1}", mun(u(-1, 0)) * ec8, pgrid, False

    dgrid = unit_grid(16, periodic=False, dx=0.5, dt=0.5)
    for beta in (-0.125, 0.0):
        s = HeatScheme(HeatFamily.CS, 0.0, beta)
        A = heat_residual_expr(s)
        yield f"{s.label} law 1", A, dgrid, True
        yield f"{s.label} law 2", x(0) * A, dgrid, True
    ml = heat_residual_expr(HeatScheme(HeatFamily.MLIM))
    yield "ML/IM x 1", ml, dgrid, False
    yield "ML/IM x x", x(0) * ml, dgrid, False
    yield "ML/IM x mu_n u", mun(u(0, 0)) * ml, dgrid, False


def euler_defect(f, grid, draws=10, seed=DEFAULT_SEED, h=1e-6):
    """Max |E(f)| at a central node over ``draws`` random fields."""
    (imin, imax), (jmin, jmax) = extents(_expr(f))
    span = jmax - jmin
    L = 2 * span + 1
    m = grid.M // 2
    worst = 0.0
    for t in range(draws):
        lev = random_fields(L, grid.M, trial_rng(seed, t))
        worst = max(worst, abs(discrete_euler(f, lev, (m, span), grid, h)))
    return worst
