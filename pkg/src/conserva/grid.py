"""Uniform space-time lattices and the difference-operator algebra.

Stencil expressions are built from the lattice values ``u(i, j)`` (the value
``i`` nodes to the right and ``j`` levels above a base node) and combined with
the forward shift, difference and average operators::

    F1 = mum(phi.shifted(-1))              # average of a shifted expression
    A = Dm(F1) + Dn(u(0, 0))               # a discrete divergence

An :class:`Expr` is evaluated on a :class:`Window`, which holds the field
values and the set of base nodes, so one expression gives either the full
vector of residuals over a grid or a single value at one base node.
"""

import enum
import math
import operator
from dataclasses import dataclass

import numpy as np

from .errors import OutOfRangeError, UnsupportedWordError


class Boundary(enum.Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice x_i = a + i*dx, t_j = j*dt.

    For periodic grids node M is identified with node 0, so ``b - a = M*dx``;
    Dirichlet grids include both end points, ``b - a = (M - 1)*dx``.
    """

    a: float
    b: float
    dx: float
    dt: float
    M: int
    N: int
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        if self.dx <= 0 or self.dt <= 0:
            raise ValueError("step sizes must be positive")
        if self.M < 4:
            raise ValueError(f"need at least 4 spatial nodes, got {self.M}")
        if self.N < 2:
            raise ValueError(f"need at least 2 time levels, got {self.N}")
        cells = self.M if self.is_periodic else self.M - 1
        if not math.isclose(self.b - self.a, cells * self.dx, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(
                f"domain [{self.a}, {self.b}] is not {cells} cells of width {self.dx}"
            )

    @classmethod
    def periodic(cls, a, b, dx, dt=1.0, T=None, steps=None):
        M = _count(b - a, dx, "spatial")
        dt, N = _time_steps(dt, T, steps)
        return cls(a, b, (b - a) / M, dt, M, N, Boundary.PERIODIC)

    @classmethod
    def dirichlet(cls, a, b, dx, dt=1.0, T=None, steps=None):
        cells = _count(b - a, dx, "spatial")
        dt, N = _time_steps(dt, T, steps)
        return cls(a, b, (b - a) / cells, dt, cells + 1, N, Boundary.DIRICHLET)

    @property
    def is_periodic(self):
        return self.boundary is Boundary.PERIODIC

    @property
    def x(self):
        return self.a + self.dx * np.arange(self.M)

    @property
    def t(self):
        return self.dt * np.arange(self.N)

    @property
    def T(self):
        return self.dt * (self.N - 1)

    def with_levels(self, N):
        return GridSpec(self.a, self.b, self.dx, self.dt, self.M, N, self.boundary)


def _count(length, step, what):
    n = length / step
    k = int(round(n))
    if k <= 0 or abs(n - k) > 1e-6 * max(1.0, n):
        raise ValueError(f"{what} step {step} does not divide length {length}")
    return k


def _time_steps(dt, T, steps):
    """Return (dt, N). ``steps`` wins over ``dt`` when both are given."""
    if T is None:
        if steps is None:
            return dt, 2
        raise ValueError("steps given without a horizon T")
    if steps is None:
        steps = _count(T, dt, "time")
    return T / steps, steps + 1


class Window:
    """Field values seen from a set of base nodes.

    ``levels`` is an array of shape (L, M); ``base`` holds the spatial base
    indices and ``level`` the base time level. Shifting a window is cheap and
    shares a lookup cache with its parent, so repeated accesses to the same
    lattice offset during one evaluation cost a single gather.
    """

    __slots__ = ("levels", "grid", "base", "oi", "oj", "_cache")

    def __init__(self, levels, grid, base=None, level=0, oi=0, cache=None):
        self.levels = levels
        self.grid = grid
        self.base = np.arange(levels.shape[-1]) if base is None else np.asarray(base)
        self.oi = oi
        self.oj = level
        self._cache = {} if cache is None else cache

    @property
    def dx(self):
        return self.grid.dx

    @property
    def dt(self):
        return self.grid.dt

    def shift(self, di, dj=0):
        return Window(self.levels, self.grid, self.base, self.oj + dj, self.oi + di, self._cache)

    def u(self, i, j):
        key = (self.oi + i, self.oj + j)
        val = self._cache.get(key)
        if val is None:
            lev = key[1]
            if not 0 <= lev < self.levels.shape[0]:
                raise OutOfRangeError(f"time level {lev} not available")
            idx = self.base + key[0]
            M = self.levels.shape[-1]
            if self.grid.is_periodic:
                idx = np.mod(idx, M)
            elif idx.size and (idx.min() < 0 or idx.max() >= M):
                raise OutOfRangeError(
                    f"spatial offset {key[0]} leaves [0, {M - 1}] without boundary data"
                )
            val = self.levels[lev][idx]
            self._cache[key] = val
        return val

    def x(self, i):
        return self.grid.a + (self.base + self.oi + i) * self.grid.dx


class _TraceWindow:
    """Records which lattice offsets an expression reads."""

    def __init__(self, grid):
        self.grid = grid
        self.oi = 0
        self.oj = 0
        self.seen = set()

    dx = property(lambda self: self.grid.dx)
    dt = property(lambda self: self.grid.dt)

    def shift(self, di, dj=0):
        w = _TraceWindow(self.grid)
        w.oi, w.oj, w.seen = self.oi + di, self.oj + dj, self.seen
        return w

    def u(self, i, j):
        self.seen.add((self.oi + i, self.oj + j))
        return np.zeros(1)

    def x(self, i):
        return np.zeros(1)


_TRACE_GRID = GridSpec(0.0, 4.0, 1.0, 1.0, 4, 2)


def extents(expr):
    """Return ((i_min, i_max), (j_min, j_max)) of the lattice values ``expr`` reads."""
    w = _TraceWindow(_TRACE_GRID)
    expr(w)
    if not w.seen:
        return (0, 0), (0, 0)
    ii = [k[0] for k in w.seen]
    jj = [k[1] for k in w.seen]
    return (min(ii), max(ii)), (min(jj), max(jj))


def offsets(expr):
    w = _TraceWindow(_TRACE_GRID)
    expr(w)
    return frozenset(w.seen)


class Expr:
    """A stencil function: maps a :class:`Window` to an array of values."""

    __slots__ = ("fn",)

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, w):
        return self.fn(w)

    def _bin(self, other, op, swap=False):
        f = self.fn
        if isinstance(other, Expr):
            g = other.fn
            if swap:
                return Expr(lambda w: op(g(w), f(w)))
            return Expr(lambda w: op(f(w), g(w)))
        c = other
        if swap:
            return Expr(lambda w: op(c, f(w)))
        return Expr(lambda w: op(f(w), c))

    def __add__(self, o):
        return self._bin(o, operator.add)

    def __radd__(self, o):
        return self._bin(o, operator.add, True)

    def __sub__(self, o):
        return self._bin(o, operator.sub)

    def __rsub__(self, o):
        return self._bin(o, operator.sub, True)

    def __mul__(self, o):
        return self._bin(o, operator.mul)

    def __rmul__(self, o):
        return self._bin(o, operator.mul, True)

    def __truediv__(self, o):
        return self._bin(o, operator.truediv)

    def __pow__(self, k):
        f = self.fn
        if k == 2:
            return Expr(lambda w: (lambda v: v * v)(f(w)))
        return Expr(lambda w: f(w) ** k)

    def __neg__(self):
        f = self.fn
        return Expr(lambda w: -f(w))

    def shifted(self, di, dj=0):
        return Sm(self, di) if dj == 0 else Sn(Sm(self, di), dj)


def u(i, j=0):
    """Lattice value u_{i,j} relative to the base node."""
    return Expr(lambda w: w.u(i, j))


def x(i=0):
    """Node coordinate x_i relative to the base node."""
    return Expr(lambda w: w.x(i))


def const(c):
    return Expr(lambda w: c)


def dx_pow(p, coeff=1.0):
    """coeff * dx**p, read from the grid at evaluation time."""
    return Expr(lambda w: coeff * w.dx ** p)


def dt_pow(p, coeff=1.0):
    return Expr(lambda w: coeff * w.dt ** p)


def Sm(e, k=1):
    f = e.fn
    return Expr(lambda w: f(w.shift(k, 0)))


def Sn(e, k=1):
    f = e.fn
    return Expr(lambda w: f(w.shift(0, k)))


def Dm(e, k=1):
    for _ in range(k):
        f = e.fn
        e = Expr(lambda w, f=f: (f(w.shift(1, 0)) - f(w)) / w.dx)
    return e


def mum(e, k=1):
    for _ in range(k):
        f = e.fn
        e = Expr(lambda w, f=f: 0.5 * (f(w.shift(1, 0)) + f(w)))
    return e


def Dn(e):
    f = e.fn
    return Expr(lambda w: (f(w.shift(0, 1)) - f(w)) / w.dt)


def mun(e):
    f = e.fn
    return Expr(lambda w: 0.5 * (f(w.shift(0, 1)) + f(w)))


def evaluate(expr, levels, grid, base=None, level=0):
    """Evaluate ``expr`` at every base node (default: all nodes) of the given levels."""
    return expr(Window(np.asarray(levels), grid, base, level))


def valid_bases(expr, grid):
    """Base nodes at which ``expr`` stays inside a Dirichlet grid."""
    (lo, hi), _ = extents(expr)
    return np.arange(max(0, -lo), min(grid.M, grid.M - hi))


# --- operator words ---------------------------------------------------------

SPATIAL_ATOMS = ("Sm", "Sm_inv", "Dm", "MUm")
TEMPORAL_ATOMS = ("Sn", "Dn", "MUn")

_ATOM_OPS = {
    "Sm": lambda e: Sm(e, 1),
    "Sm_inv": lambda e: Sm(e, -1),
    "Dm": Dm,
    "MUm": mum,
    "Sn": lambda e: Sn(e, 1),
    "Dn": Dn,
    "MUn": mun,
}


@dataclass(frozen=True)
class OperatorWord:
    """A product of commuting lattice operators, e.g. ``(("MUm", 1), ("Dm", 2))``.

    The empty word is the identity.
    """

    atoms: tuple = ()

    @classmethod
    def of(cls, *names):
        return cls(tuple((n, 1) for n in names))

    def __post_init__(self):
        for name, count in self.atoms:
            if name not in _ATOM_OPS:
                raise ValueError(f"unknown operator atom {name!r}")
            if count < 0:
                raise ValueError("repetition counts must be non-negative")

    def __matmul__(self, other):
        return OperatorWord(self.atoms + other.atoms)

    def apply(self, e):
        for name, count in reversed(self.atoms):
            for _ in range(count):
                e = _ATOM_OPS[name](e)
        return e

    def degree(self, names):
        return sum(c for n, c in self.atoms if n in names)


def apply_spatial(word, values, grid):
    """Apply a word of spatial atoms to one time slice.

    Periodic grids wrap and return M values; Dirichlet grids return only the
    nodes whose stencil stays inside the grid.
    """
    if word.degree(TEMPORAL_ATOMS):
        raise UnsupportedWordError("apply_spatial accepts spatial atoms only")
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.M,):
        raise ValueError(f"slice has shape {values.shape}, grid has M={grid.M}")
    e = word.apply(u(0, 0))
    base = None if grid.is_periodic else valid_bases(e, grid)
    return evaluate(e, values[None, :], grid, base)


def apply_temporal(word, lower, upper, grid):
    """Apply a word of temporal atoms using two adjacent time levels."""
    if word.degree(SPATIAL_ATOMS):
        raise UnsupportedWordError("apply_temporal accepts temporal atoms only")
    if word.degree(TEMPORAL_ATOMS) > 1:
        raise UnsupportedWordError("word needs more than two time levels")
    levels = np.vstack([lower, upper]).astype(float)
    return evaluate(word.apply(u(0, 0)), levels, grid)


def telescoping_sum(values, grid):
    """dx * sum_i (D_m f)_i over a periodic slice; zero up to round-off."""
    if not grid.is_periodic:
        raise ValueError("telescoping_sum needs a periodic grid")
    f = np.asarray(values, dtype=float)
    return grid.dx * np.sum((np.roll(f, -1) - f) / grid.dx)
