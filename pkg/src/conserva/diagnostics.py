"""Error metrics: solution error, conservation-law errors, phase error, Hamiltonians.

The conservation errors are maxima over time levels, so each one also exists
as a streaming tracker that can be handed to the march as an observer; long
runs then never need to keep the full history in memory.
"""

from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .errors import DivisionGuardError, NotApplicableError
from .grid import evaluate
from .heat import HeatFamily, HeatScheme
from .kdv import TEN_POINT, KdvScheme, kdv_laws

NAN = float("nan")


@dataclass
class ErrorReport:
    err1: float = NAN
    err2: float = NAN
    err3: float = NAN
    solution_error: float = NAN
    phase_error: float = NAN
    hamiltonian_drift: float = NAN
    solution_error_linf: float = NAN
    phase_tie: bool = False

    def as_dict(self):
        return asdict(self)


# --- solution error ---------------------------------------------------------------

def _final_exact(history, exact):
    x, T = history.grid.x, history.t[-1]
    return history.final, np.asarray(exact(x, T), dtype=float) * np.ones_like(x)


def solution_error(history, exact, norm=2):
    """Relative error ||u - u_exact|| / ||u_exact|| at the final stored level."""
    num, ref = _final_exact(history, exact)
    den = np.linalg.norm(ref, norm)
    if den == 0.0:
        raise DivisionGuardError("exact solution vanishes identically at the final time")
    return float(np.linalg.norm(num - ref, norm) / den)


# --- streaming trackers -----------------------------------------------------------

class DriftTracker:
    """Tracks scale * max_j |sum_i (g_i(u_j) - g_i(u_0))| over a march.

    ``fn`` maps one time slice to the per-node values g_i. Per-node
    differences are formed before summing, which keeps the cancellation
    exact where the conserved quantity is large.
    """

    def __init__(self, fn, scale):
        self.fn = fn
        self.scale = scale
        self.base = None
        self.worst = 0.0
        self.series = []

    def start(self, initial):
        self.base = self.fn(initial)
        self.series.append(0.0)

    def __call__(self, j, lower, upper):
        if self.base is None:
            self.start(lower)
        s = float(np.sum(self.fn(upper) - self.base))
        self.series.append(s)
        self.worst = max(self.worst, abs(s))

    @property
    def value(self):
        return self.scale * self.worst


def _density_fn(expr, grid):
    return lambda s: evaluate(expr, np.asarray(s)[None, :], grid)


def _v_fn(stencil_points):
    if stencil_points == 10:
        return lambda s: np.asarray(s, dtype=float)
    return lambda s: 0.5 * (np.roll(s, 1) + s)   # mu_m u_{i-1}


def _nonpreserved_fn(ell, v, dx):
    if ell == 1:
        return v
    if ell == 2:
        return lambda s: 0.5 * v(s) ** 2
    if ell == 3:
        def g3(s):
            w = v(s)
            d2 = (np.roll(w, -1) - 2 * w + np.roll(w, 1)) / (dx * dx)   # D_m^2 w_{i-1}
            return w ** 3 / 3 + w * d2
        return g3
    raise ValueError(f"law index must be 1, 2 or 3, got {ell}")


def kdv_trackers(scheme, grid):
    """Observers for Err1..Err3 and the scheme's discrete Hamiltonian."""
    laws = kdv_laws(scheme)
    pts = 10 if scheme.family in TEN_POINT else 8
    v = _v_fn(pts)
    out = {}
    for ell in (1, 2, 3):
        if ell in laws:
            fn = _density_fn(laws[ell].density, grid)
        else:
            fn = _nonpreserved_fn(ell, v, grid.dx)
        out[f"err{ell}"] = DriftTracker(fn, grid.dx)
    for name, h in laws.hamiltonians.items():
        out[name] = DriftTracker(_density_fn(h, grid), 0.5 * grid.dx)
    return out


class HeatLawTracker:
    """Per-step boundary-aware conservation errors for heat marches.

    Err1 is dx * max_j |sum_interior D_n G1 + boundary flux bracket| and Err2
    its first-moment analogue; for CS schemes both equal the sums of the
    (weighted) residuals, hence vanish to round-off.
    """

    def __init__(self, scheme, grid):
        self.alpha = scheme.alpha
        self.beta = scheme.beta
        self.grid = grid
        self.worst1 = 0.0
        self.worst2 = 0.0

    def __call__(self, j, lower, upper):
        e1, e2 = heat_step_errors(lower, upper, self.grid, self.alpha, self.beta)
        self.worst1 = max(self.worst1, abs(e1))
        self.worst2 = max(self.worst2, abs(e2))

    @property
    def err1(self):
        return self.grid.dx * self.worst1

    @property
    def err2(self):
        return self.grid.dx * self.worst2


def heat_step_errors(lower, upper, grid, alpha=0.0, beta=0.0):
    """Signed conservation defects of one step (before the dx scaling)."""
    dx, dt = grid.dx, grid.dt
    lo = np.asarray(lower, dtype=float)
    up = np.asarray(upper, dtype=float)
    xs = grid.x

    def g1(s):  # u_i + alpha dx^2 D_m^2 u_{i-1} at interior nodes
        return s[1:-1] + alpha * (s[2:] - 2 * s[1:-1] + s[:-2])

    dng = (g1(up) - g1(lo)) / dt
    sum1 = np.sum(dng)
    sum2 = np.sum(xs[1:-1] * dng)

    p = lo * up                                   # u_r u_r'
    q = ((up - lo) / dt) ** 2                     # (D_n u_r)^2
    phi = (-0.5 * p + beta * dt * dt * q)         # f-tilde value at node r
    # [D_m(phi/dx)]_{r=0}^{M-2}
    flux1 = ((phi[-1] - phi[-2]) - (phi[1] - phi[0])) / (dx * dx)

    def moment(w):  # mu_m(x_r) D_m(w_r) - mu_m(w_r), r = 0..M-2
        return 0.5 * (xs[:-1] + xs[1:]) * (w[1:] - w[:-1]) / dx - 0.5 * (w[:-1] + w[1:])

    bp, bq = moment(p), moment(q)
    flux2 = -(bp[-1] - bp[0]) / (2 * dx) + beta * dt * dt * (bq[-1] - bq[0]) / dx
    return sum1 + flux1, sum2 + flux2


# --- history-based metrics ----------------------------------------------------------

def _require_consecutive(history):
    g = history.grid
    if len(history.t) != g.N or not np.allclose(np.diff(history.t), g.dt):
        raise ValueError("metric needs every time level; march with stride=1")


def conservation_error_preserved(history, density, law_index=None, scheme=None):
    """Err for a preserved law.

    On periodic grids ``density`` is the law's density stencil and the result
    is dx * max_j |sum_i (G(x_i, t_j) - G(x_i, t_0))|. On Dirichlet grids the
    boundary-aware heat formula is used instead; ``law_index`` selects Err1 or
    Err2 and ``scheme`` supplies alpha and beta (``density`` is then unused).
    """
    g = history.grid
    if g.is_periodic:
        tr = DriftTracker(_density_fn(density, g), g.dx)
        tr.start(history.u[0])
        for j in range(1, len(history.u)):
            tr(j - 1, history.u[j - 1], history.u[j])
        return tr.value
    if law_index not in (1, 2):
        raise ValueError("heat laws are numbered 1 and 2")
    _require_consecutive(history)
    scheme = scheme or HeatScheme(HeatFamily.CS)
    tr = HeatLawTracker(scheme, g)
    for j in range(len(history.u) - 1):
        tr(j, history.u[j], history.u[j + 1])
    return tr.err1 if law_index == 1 else tr.err2


def conservation_error_nonpreserved(history, stencil_kind, ell):
    """Err_ell for a law the scheme does not preserve, built from v.

    ``stencil_kind`` is 8 or 10 (or the strings "EightPoint"/"TenPoint");
    v = mu_m u_{i-1} on the 8-point stencil and v = u on the 10-point one.
    """
    g = history.grid
    if not g.is_periodic:
        raise ValueError("non-preserved errors are defined for KdV histories")
    pts = {"EightPoint": 8, "TenPoint": 10}.get(stencil_kind, stencil_kind)
    if pts not in (8, 10):
        raise ValueError(f"unknown stencil kind {stencil_kind!r}")
    v = _v_fn(pts)
    fn = _nonpreserved_fn(ell, v, g.dx)
    tr = DriftTracker(fn, g.dx)
    tr.start(history.u[0])
    for j in range(1, len(history.u)):
        tr(j - 1, history.u[j - 1], history.u[j])
    return tr.value


@dataclass
class HamiltonianSeries:
    values: np.ndarray
    drift: float


def hamiltonian_series(history, which, scheme):
    """Discrete Hamiltonian H(j) = -(dx/2) sum_i h_i(u_j) and its max drift.

    The drift is formed from per-node differences, so it equals Err3/2 (H1)
    or Err2 (H2) bit for bit.
    """
    if not isinstance(scheme, KdvScheme):
        raise NotApplicableError("discrete Hamiltonians are defined for KdV schemes")
    laws = kdv_laws(scheme)
    if which not in laws.hamiltonians:
        raise NotApplicableError(f"{scheme.label} does not define {which}")
    g = history.grid
    fn = _density_fn(laws.hamiltonians[which], g)
    h = [fn(s) for s in history.u]
    values = np.array([-0.5 * g.dx * np.sum(hj) for hj in h])
    drift = 0.5 * g.dx * max(abs(float(np.sum(hj - h[0]))) for hj in h)
    return HamiltonianSeries(values, drift)


# --- phase error --------------------------------------------------------------------

def exact_peak_x(exact, t, grid, tol=1e-10):
    """Location of the global maximum of exact(., t) by a bounded scalar search.

    The search interval is the two cells around the largest grid value, which
    also covers a peak that sits exactly midway between two nodes.
    """
    xs = grid.x
    k = int(np.argmax(exact(xs, t)))
    f = lambda s: -float(exact(np.array([s]), t)[0])
    res = optimize.minimize_scalar(
        f, bounds=(xs[k] - grid.dx, xs[k] + grid.dx), method="bounded",
        options={"xatol": tol},
    )
    return float(res.x)


def phase_error(history, exact_peak, return_tie=False):
    """x_max - x of the grid argmax of the final slice (ties go to the smaller index)."""
    final = history.final
    peak = np.max(final)
    hits = np.flatnonzero(final == peak)
    x_num = history.grid.x[hits[0]]
    val = float(exact_peak - x_num)
    return (val, hits.size > 1) if return_tie else val


def kdv_report(history, scheme, trackers, exact=None, peak=None):
    """Assemble an :class:`ErrorReport` from finished KdV trackers."""
    rep = ErrorReport(
        err1=trackers["err1"].value,
        err2=trackers["err2"].value,
        err3=trackers["err3"].value,
    )
    for name in ("H1", "H2"):
        if name in trackers:
            rep.hamiltonian_drift = trackers[name].value
    if exact is not None:
        rep.solution_error = solution_error(history, exact)
        rep.solution_error_linf = solution_error(history, exact, np.inf)
    if peak is not None:
        rep.phase_error, rep.phase_tie = phase_error(history, peak, return_tie=True)
    return rep


def heat_report(history, tracker, exact):
    return ErrorReport(
        err1=tracker.err1,
        err2=tracker.err2,
        solution_error=solution_error(history, exact),
        solution_error_linf=solution_error(history, exact, np.inf),
    )
