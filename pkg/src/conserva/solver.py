"""Banded linear algebra and the frozen-Jacobian Newton time march."""

import enum
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import MarchFailure, SingularMatrixError

PIVOT_FLOOR = 1e-300


class BandedMatrix:
    """Square matrix with ``kl`` sub- and ``ku`` super-diagonals.

    ``diags[k + kl, i]`` holds A[i, i + k]. When ``cyclic`` is set the column
    index wraps modulo n, which is how periodic stencils couple the first and
    last nodes.
    """

    def __init__(self, diags, kl, ku, cyclic=False):
        diags = np.asarray(diags, dtype=float)
        if diags.shape[0] != kl + ku + 1:
            raise ValueError("diags must have kl + ku + 1 rows")
        self.diags = diags
        self.kl = kl
        self.ku = ku
        self.cyclic = cyclic

    @property
    def n(self):
        return self.diags.shape[1]

    @classmethod
    def from_dense(cls, A, kl, ku, cyclic=False):
        A = np.asarray(A, dtype=float)
        n = A.shape[0]
        d = np.zeros((kl + ku + 1, n))
        rows = np.arange(n)
        for k in range(-kl, ku + 1):
            cols = rows + k
            if cyclic:
                d[k + kl] = A[rows, cols % n]
            else:
                ok = (cols >= 0) & (cols < n)
                d[k + kl, ok] = A[rows[ok], cols[ok]]
        return cls(d, kl, ku, cyclic)

    def entries(self):
        """Yield (rows, cols, values) for each stored diagonal."""
        n = self.n
        rows = np.arange(n)
        for k in range(-self.kl, self.ku + 1):
            cols = rows + k
            if self.cyclic:
                yield rows, cols % n, self.diags[k + self.kl]
            else:
                ok = (cols >= 0) & (cols < n)
                yield rows[ok], cols[ok], self.diags[k + self.kl][ok]

    def to_dense(self):
        A = np.zeros((self.n, self.n))
        for r, c, v in self.entries():
            A[r, c] += v
        return A

    def matvec(self, v):
        out = np.zeros(self.n, dtype=np.result_type(v, float))
        for r, c, d in self.entries():
            np.add.at(out, r, d * v[c])
        return out

    def factorize(self):
        if not self.cyclic:
            return _BandLU(self.diags, self.kl, self.ku)
        q = max(self.kl, self.ku)
        if q == 0:
            return _BandLU(self.diags, 0, 0)
        if self.n <= 2 * q + 2:
            return _DenseLU(self.to_dense())
        s = self.winding_number()
        try:
            lu = _BorderedLU(self, q) if s == 0 else _ShiftedLU(self.column_shift(s), s)
        except SingularMatrixError:
            lu = None
        if lu is not None and self._solves_accurately(lu):
            return lu
        # rows far from Toeplitz can defeat the split; the dense route is exact
        return _DenseLU(self.to_dense())

    def _solves_accurately(self, lu, tol=1e-8):
        z = np.cos(np.arange(self.n) * 0.7) + 1.5
        with np.errstate(all="ignore"):
            err = np.max(np.abs(lu.solve(self.matvec(z)) - z))
        return bool(np.isfinite(err) and err <= tol * np.max(np.abs(z)))

    def winding_number(self):
        """Winding number about 0 of the symbol of the row-averaged diagonals.

        A cyclic band matrix whose symbol winds is invertible, but its
        non-cyclic principal block is exponentially ill conditioned, so the
        bordered elimination must first shift the columns.
        """
        c = self.diags.mean(axis=1)
        theta = np.linspace(0.0, 2 * np.pi, 2049)
        k = np.arange(-self.kl, self.ku + 1)
        a = np.exp(1j * np.outer(theta, k)) @ c
        if np.min(np.abs(a)) == 0.0:
            return 0
        return int(round(np.sum(np.diff(np.unwrap(np.angle(a)))) / (2 * np.pi)))

    def column_shift(self, s):
        """Matrix B with B[i, l] = A[i, (l + s) mod n]."""
        kl, ku = self.kl + s, self.ku - s
        pad_l, pad_u = max(0, -kl), max(0, -ku)
        d = np.zeros((kl + ku + 1 + pad_l + pad_u, self.n))
        d[pad_l:pad_l + self.kl + self.ku + 1] = self.diags
        return BandedMatrix(d, kl + pad_l, ku + pad_u, cyclic=True)


def _band_storage(diags, kl, ku):
    """Convert row-diagonal storage to the LAPACK gbtrf layout."""
    n = diags.shape[1]
    ab = np.zeros((2 * kl + ku + 1, n))
    rows = np.arange(n)
    for k in range(-kl, ku + 1):
        cols = rows + k
        ok = (cols >= 0) & (cols < n)
        ab[kl + ku - k, cols[ok]] = diags[k + kl, ok]
    return ab


class _BandLU:
    def __init__(self, diags, kl, ku):
        self.kl, self.ku = kl, ku
        lu, piv, info = lapack.dgbtrf(_band_storage(diags, kl, ku), kl, ku)
        if info > 0 or np.min(np.abs(lu[kl + ku])) < PIVOT_FLOOR:
            raise SingularMatrixError(f"banded matrix is singular (pivot {info})")
        self.lu, self.piv = lu, piv

    def solve(self, b):
        x, info = lapack.dgbtrs(self.lu, self.kl, self.ku, b, self.piv)
        if info != 0:
            raise SingularMatrixError(f"dgbtrs failed with info={info}")
        return x


class _DenseLU:
    def __init__(self, A):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
        if np.min(np.abs(np.diag(lu))) < PIVOT_FLOOR:
            raise SingularMatrixError("matrix is singular")
        self.lu, self.piv = lu, piv

    def solve(self, b):
        return scipy.linalg.lu_solve((self.lu, self.piv), b, check_finite=False)


class _BorderedLU:
    """Cyclic banded solve by eliminating the last ``q`` unknowns.

    With the unknowns split into an interior block I (first n - q) and a
    border block, A[I, I] is an ordinary band matrix; the wrap-around entries
    all land in the border rows or columns. The border is solved through the
    q x q Schur complement.
    """

    def __init__(self, A, q):
        n = A.n
        m = n - q
        self.m = m
        inner = np.zeros_like(A.diags)
        C = np.zeros((m, q))
        D = np.zeros((q, m))
        E = np.zeros((q, q))
        rows = np.arange(n)
        for k in range(-A.kl, A.ku + 1):
            cols = (rows + k) % n
            vals = A.diags[k + A.kl]
            in_r, in_c = rows < m, cols < m
            band = in_r & in_c & (rows + k == cols)
            inner[k + A.kl, band] = vals[band]
            sel = in_r & ~in_c
            np.add.at(C, (rows[sel], cols[sel] - m), vals[sel])
            sel = ~in_r & in_c
            np.add.at(D, (rows[sel] - m, cols[sel]), vals[sel])
            sel = ~in_r & ~in_c
            np.add.at(E, (rows[sel] - m, cols[sel] - m), vals[sel])
        self.B = _BandLU(inner[:, :m], A.kl, A.ku)
        self.Z = self.B.solve(C)
        self.D = D
        self.S = _DenseLU(E - D @ self.Z)

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        m = self.m
        y = self.B.solve(b[:m])
        xb = self.S.solve(b[m:] - self.D @ y)
        return np.concatenate([y - self.Z @ xb, xb])


class _ShiftedLU:
    """Solve A x = b through the column-shifted matrix B = A P."""

    def __init__(self, B, s):
        self.inner = _BorderedLU(B, max(B.kl, B.ku))
        self.s = s

    def solve(self, b):
        return np.roll(self.inner.solve(b), self.s, axis=0)


def banded_solve(matrix, rhs):
    """Solve A x = rhs for a plain or cyclic :class:`BandedMatrix` (or dense array)."""
    if isinstance(matrix, BandedMatrix):
        return matrix.factorize().solve(rhs)
    return _DenseLU(np.asarray(matrix, dtype=float)).solve(rhs)


def complex_step_jacobian(fun, v, kl, ku, cyclic, h=1e-30):
    """Banded Jacobian of ``fun`` at ``v`` by complex-step differentiation.

    Columns further apart than the bandwidth are probed together, so the cost
    is about kl + ku + 1 evaluations of ``fun``. For the polynomial residuals
    used here the result is exact to round-off.
    """
    v = np.asarray(v, dtype=float)
    n = v.size
    width = kl + ku + 1
    full = width * (n // width) if cyclic else n
    groups = [np.arange(c, full, width) for c in range(min(width, n))]
    groups += [np.array([p]) for p in range(full, n)]
    diags = np.zeros((width, n))
    for cols in groups:
        if cols.size == 0:
            continue
        probe = v.astype(complex)
        probe[cols] += 1j * h
        deriv = np.imag(fun(probe)) / h
        for k in range(-kl, ku + 1):
            rows = cols - k
            if cyclic:
                rows = rows % n
            else:
                ok = (rows >= 0) & (rows < n)
                rows = rows[ok]
            diags[k + kl, rows] = deriv[rows]
    return BandedMatrix(diags, kl, ku, cyclic)


class Refreeze(enum.Enum):
    FIRST_STEP_ONLY = "first"
    EVERY_STEP = "every"
    ON_STALL = "stall"


@dataclass(frozen=True)
class NewtonConfig:
    """Stopping and refreezing rules for the simplified Newton iteration.

    The residual test is applied to ``dt * ||r||_inf`` (the residual in units
    of the solution) against ``tol_abs * max(1, ||u||_inf) + tol_rel * r0``.
    After it is met, up to ``polish`` further iterations run while the update
    keeps shrinking, which drives the step to round-off.
    """

    tol_abs: float = 1e-12
    tol_rel: float = 0.0
    max_iter: int = 50
    refreeze: Refreeze = Refreeze.ON_STALL
    stall_ratio: float = 0.5
    divergence_growth: float = 1e3
    polish: int = 20

    def __post_init__(self):
        if self.tol_abs <= 0:
            raise ValueError("tol_abs must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class FieldHistory:
    """Discrete solution u[j, i] ~ u(x_i, t[j]) over the stored levels."""

    grid: object
    u: np.ndarray
    t: np.ndarray
    scheme: str = ""
    params: dict = field(default_factory=dict)
    iterations: list = field(default_factory=list)
    factorizations: int = 0
    wall_seconds: float = 0.0

    @property
    def final(self):
        return self.u[-1]

    @property
    def x(self):
        return self.grid.x

    def level_at(self, t):
        """Index of the stored level nearest to time ``t``."""
        return int(np.argmin(np.abs(self.t - t)))


def newton_march(residual_fn, jacobian_fn, initial, grid, cfg=None, bdry=None, *,
                 observers=(), stride=1, scheme="", params=None):
    """March ``initial`` over grid.N - 1 steps, solving each step by frozen Newton.

    ``residual_fn(lower, upper)`` returns the scheme residual at the unknown
    nodes (all nodes for periodic grids, interior nodes when ``bdry`` supplies
    Dirichlet data) and ``jacobian_fn(lower, upper)`` its derivative with
    respect to those unknowns as a :class:`BandedMatrix`. Each observer is
    called as ``obs(j, lower, upper)`` after step j -> j + 1 converges.
    """
    cfg = cfg or NewtonConfig()
    started = time.perf_counter()
    dt = grid.dt
    lower = np.array(initial, dtype=float)
    if lower.shape != (grid.M,):
        raise ValueError(f"initial slice has shape {lower.shape}, expected ({grid.M},)")
    if bdry is not None:
        lower[0], lower[-1] = bdry.phi1(0.0), bdry.phi2(0.0)
        unknown = slice(1, grid.M - 1)
    else:
        unknown = slice(None)

    stored, times, iters = [lower.copy()], [0.0], []
    lu = None
    factorizations = 0

    def refactor(lo, up):
        nonlocal lu, factorizations
        lu = jacobian_fn(lo, up).factorize()
        factorizations += 1

    for j in range(grid.N - 1):
        t_next = (j + 1) * dt
        upper = lower.copy()
        if bdry is not None:
            upper[0], upper[-1] = bdry.phi1(t_next), bdry.phi2(t_next)
        if lu is None or cfg.refreeze is Refreeze.EVERY_STEP:
            refactor(lower, upper)

        r = residual_fn(lower, upper)
        r0 = rn = dt * np.max(np.abs(r))
        met_at, prev_dn, k = None, None, 0
        while True:
            target = cfg.tol_abs * max(1.0, np.max(np.abs(upper))) + cfg.tol_rel * r0
            if met_at is None and rn <= target:
                met_at = k
            if met_at is not None and k - met_at >= cfg.polish:
                break
            if k >= cfg.max_iter:
                if met_at is not None:
                    break
                raise MarchFailure("Newton iteration hit max_iter", j + 1, rn)
            delta = lu.solve(-r)
            upper[unknown] += delta
            r = residual_fn(lower, upper)
            prev_rn, rn = rn, dt * np.max(np.abs(r))
            dn = np.max(np.abs(delta))
            k += 1
            if not np.isfinite(rn) or rn > cfg.divergence_growth * max(r0, target):
                raise MarchFailure("Newton iteration diverged", j + 1, rn)
            if met_at is not None:
                if dn == 0.0 or (prev_dn is not None and dn >= prev_dn):
                    break  # update is at round-off level
            elif cfg.refreeze is Refreeze.ON_STALL and rn > cfg.stall_ratio * prev_rn:
                refactor(lower, upper)
            prev_dn = dn
        iters.append(met_at)

        for obs in observers:
            obs(j, lower, upper)
        if (j + 1) % stride == 0 or j + 1 == grid.N - 1:
            stored.append(upper.copy())
            times.append(t_next)
        lower = upper

    return FieldHistory(
        grid=grid,
        u=np.array(stored),
        t=np.array(times),
        scheme=scheme,
        params=dict(params or {}),
        iterations=iters,
        factorizations=factorizations,
        wall_seconds=time.perf_counter() - started,
    )


def march_explicit(step_fn, initial, grid, bdry=None, *, observers=(), stride=1,
                   scheme="", params=None):
    """Time march with a one-step map ``step_fn(lower, t_next) -> upper``."""
    started = time.perf_counter()
    lower = np.array(initial, dtype=float)
    if bdry is not None:
        lower[0], lower[-1] = bdry.phi1(0.0), bdry.phi2(0.0)
    stored, times = [lower.copy()], [0.0]
    for j in range(grid.N - 1):
        t_next = (j + 1) * grid.dt
        upper = step_fn(lower, t_next)
        for obs in observers:
            obs(j, lower, upper)
        if (j + 1) % stride == 0 or j + 1 == grid.N - 1:
            stored.append(upper.copy())
            times.append(t_next)
        lower = upper
    return FieldHistory(grid, np.array(stored), np.array(times), scheme,
                        dict(params or {}), wall_seconds=time.perf_counter() - started)

