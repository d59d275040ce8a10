import math

import mpmath
import numpy as np
import pytest

from conserva.calculus import divergence_identity_check
from conserva.errors import DomainError, MarchFailure
from conserva.grid import GridSpec
from conserva.heat import (BoundaryData, HeatFamily, HeatScheme, barenblatt, blowup,
                           blowup_interface, explicit_cs00_step, heat_exact, heat_jacobian,
                           heat_laws, heat_problem, heat_residual, ramp, residual_expr)
from conserva.solver import NewtonConfig, newton_march

CS_FAMILY = [HeatScheme("CS", 0.0, -0.25), HeatScheme("CS", 0.0, -0.125), HeatScheme("CS"),
             HeatScheme("CS", 0.1, 0.21)]


def const_bdry(c):
    return BoundaryData(lambda x: np.full_like(np.asarray(x, float), c), lambda t: c, lambda t: c)


def small_grid(M=12, dx=0.25, dt=0.1):
    return GridSpec.dirichlet(0.0, (M - 1) * dx, dx, dt)


def test_mlim_ignores_parameters():
    assert HeatScheme(HeatFamily.MLIM, 1.0, 2.0) == HeatScheme("MLIM")
    assert HeatScheme("MLIM").label == "ML/IM"


@pytest.mark.parametrize("scheme", CS_FAMILY + [HeatScheme("MLIM")], ids=lambda s: s.label)
def test_constant_field_has_zero_residual(scheme):
    g = small_grid()
    b = const_bdry(2.5)
    c = np.full(g.M, 2.5)
    r = heat_residual(scheme, c, c, b, g)
    assert r.shape == (g.M - 2,)
    assert np.max(np.abs(r)) <= 1e-12


def test_cs00_residual_hand_expansion():
    g = small_grid()
    rng = np.random.default_rng(4)
    lo, up = rng.uniform(0, 1, (2, g.M))
    dx, dt = g.dx, g.dt
    i = np.arange(1, g.M - 1)
    p = lo * up
    expect = (up[i] - lo[i]) / dt - (p[i - 1] - 2 * p[i] + p[i + 1]) / (2 * dx * dx)
    r = heat_residual(HeatScheme("CS"), lo, up, const_bdry(0.0), g)
    assert np.max(np.abs(r - expect)) <= 1e-14 * max(1.0, np.max(np.abs(expect)))


def test_barenblatt_residual_is_small_away_from_interface():
    def trunc(dx, dt):
        g = GridSpec.dirichlet(-6.0, 6.0, dx, dt)
        lo, up = barenblatt(g.x, 1.0), barenblatt(g.x, 1.0 + dt)
        r = heat_residual(HeatScheme("CS"), lo, up, None, g)
        xi = g.x[1:-1]
        smooth = np.abs(xi) < 1.5
        return np.max(np.abs(r[smooth])), np.max(np.abs(r))

    s1, full = trunc(0.1, 0.1)
    s2, _ = trunc(0.05, 0.05)
    assert full > 10 * s1       # the kink dominates the residual
    assert 4 * 0.8 <= s1 / s2 <= 4 * 1.2


def _fd(scheme, lo, up, b, g, h=1e-6):
    n = g.M - 2
    J = np.zeros((n, n))
    for k in range(n):
        p, m = up.copy(), up.copy()
        p[k + 1] += h
        m[k + 1] -= h
        J[:, k] = (heat_residual(scheme, lo, p, b, g) - heat_residual(scheme, lo, m, b, g)) / (2 * h)
    return J


@pytest.mark.parametrize("scheme", CS_FAMILY + [HeatScheme("MLIM")], ids=lambda s: s.label)
def test_jacobian_matches_finite_differences(scheme):
    g = small_grid()
    rng = np.random.default_rng(8)
    lo, up = rng.uniform(0, 1, (2, g.M))
    J = heat_jacobian(scheme, lo, up, None, g).to_dense()
    Jfd = _fd(scheme, lo, up, None, g)
    assert np.max(np.abs(J - Jfd)) <= 1e-6 * np.max(np.abs(Jfd))
    assert np.all(np.triu(J, 2) == 0) and np.all(np.tril(J, -2) == 0)


def test_cs00_jacobian_is_explicit_matrix():
    g = small_grid()
    rng = np.random.default_rng(1)
    lo, up = rng.uniform(0, 1, (2, g.M))
    J = heat_jacobian(HeatScheme("CS"), lo, up, None, g).to_dense()
    c = 1 / (2 * g.dx ** 2)
    i = np.arange(1, g.M - 1)
    expect = np.diag(1 / g.dt + 2 * c * lo[i])
    expect += np.diag(-c * lo[2:g.M - 1], 1) + np.diag(-c * lo[1:g.M - 2], -1)
    np.testing.assert_allclose(J, expect, rtol=1e-13)


def test_explicit_step_constant():
    g = small_grid()
    c = np.full(g.M, 1.5)
    np.testing.assert_allclose(explicit_cs00_step(c, const_bdry(1.5), g, g.dt), 1.5, rtol=1e-15)


def test_explicit_matches_newton_step():
    g = small_grid(M=20)
    rng = np.random.default_rng(12)
    lo = rng.uniform(0.1, 1.0, g.M)
    b = BoundaryData(lambda x: lo[0] + 0 * x, lambda t: lo[0], lambda t: lo[-1])
    gg = g.with_levels(2)
    s = HeatScheme("CS")
    h = newton_march(lambda a, c: heat_residual(s, a, c, b, gg),
                     lambda a, c: heat_jacobian(s, a, c, b, gg), lo, gg, bdry=b)
    e = explicit_cs00_step(lo, b, gg, gg.dt)
    assert np.max(np.abs(h.final - e)) <= 1e-12


def test_explicit_singular_matrix_reports_step():
    # first row: diagonal 1/dt + u_1/dx^2 vanishes and u_2 = 0 kills the off-diagonal
    g = GridSpec.dirichlet(0.0, 0.75, 0.25, 0.1)
    lo = np.array([0.0, -g.dx ** 2 / g.dt, 0.0, 0.0])
    b = BoundaryData(lambda x: 0 * x, lambda t: 0.0, lambda t: 0.0)
    with pytest.raises(MarchFailure) as info:
        explicit_cs00_step(lo, b, g, 3 * g.dt)
    assert info.value.step == 3


def test_law_sets():
    for s in CS_FAMILY:
        laws = heat_laws(s)
        assert set(laws.laws) == {1, 2} and not laws.empty
    assert heat_laws(HeatScheme("MLIM")).empty


@pytest.mark.parametrize("scheme", CS_FAMILY, ids=lambda s: s.label)
def test_identities(scheme):
    g = GridSpec.dirichlet(0.0, 2.0, 0.25, 1 / 3)
    A = residual_expr(scheme)
    for law in heat_laws(scheme).laws.values():
        d = divergence_identity_check(law.characteristic, A, law.flux, law.density, 20, g)
        assert d <= 1e-12


def test_cs_quarter_and_eighth_flux_forms():
    # beta = -1/4 gives f = -(u u' + ...)/2 = -mu_n(u^2)/2; beta = -1/8 gives -(mu_n u)^2/2
    g = small_grid()
    rng = np.random.default_rng(3)
    lo, up = rng.uniform(0, 1, (2, g.M))
    from conserva.grid import evaluate
    f4 = evaluate(heat_laws(HeatScheme("CS", 0, -0.25)).f_tilde, np.vstack([lo, up]), g,
                  np.arange(1, g.M))
    f8 = evaluate(heat_laws(HeatScheme("CS", 0, -0.125)).f_tilde, np.vstack([lo, up]), g,
                  np.arange(1, g.M))
    a, b = lo[:-1], up[:-1]
    np.testing.assert_allclose(f4, -0.25 * (a * a + b * b), rtol=1e-13)
    np.testing.assert_allclose(f8, -0.5 * (0.5 * (a + b)) ** 2, rtol=1e-13)


def test_exact_solutions():
    assert barenblatt(np.array([0.0]), 0.0)[0] == 1.0
    assert ramp(np.array([3.0]), 3.0)[0] == 0.0
    assert ramp(np.array([0.0]), 4.5)[0] == 4.5
    mpmath.mp.dps = 30
    ref = (1 - (mpmath.mpf(1) / 11) ** (mpmath.mpf(2) / 3)) / (11 - 10)
    assert blowup(np.array([0.0]), 10.0)[0] == pytest.approx(float(ref), rel=1e-14)
    assert heat_exact("BlowUp", (11.0,), np.array([0.0]), 10.0)[0] == pytest.approx(float(ref))
    xi = blowup_interface(10.0)
    assert xi == pytest.approx(math.sqrt(6) * (1 - (1 / 11) ** (1 / 3)))
    assert blowup(np.array([xi + 1e-9]), 10.0)[0] == 0.0
    with pytest.raises(DomainError):
        blowup(np.array([0.0]), 11.0)


@pytest.mark.parametrize("kind", ["Barenblatt", "Ramp", "BlowUp"])
def test_boundary_compatibility(kind):
    p = heat_problem(kind)
    p.bdry.check(p.grid(0.25, steps=4))
    x = p.grid(0.25, steps=4).x
    np.testing.assert_allclose(p.bdry.initial(p.grid(0.25, steps=4)), p.exact(x, 0.0), atol=1e-15)


def test_boundary_mismatch_detected():
    b = BoundaryData(lambda x: 0 * np.asarray(x, float) + 1.0, lambda t: 0.0, lambda t: 1.0)
    with pytest.raises(ValueError):
        b.check(small_grid())


def test_cs00_barenblatt_table_value():
    p = heat_problem("Barenblatt")
    g = p.grid(0.25, steps=12)
    from conserva.solver import march_explicit
    h = march_explicit(lambda lo, t: explicit_cs00_step(lo, p.bdry, g, t), p.bdry.initial(g), g,
                       p.bdry)
    err = np.linalg.norm(h.final - p.exact(g.x, 4.0)) / np.linalg.norm(p.exact(g.x, 4.0))
    assert err == pytest.approx(0.0032, rel=0.10)
    assert np.min(h.u) >= -1e-6


def test_explicit_and_implicit_cs00_agree_every_step():
    p = heat_problem("Barenblatt")
    g = p.grid(0.25, steps=12)
    s = HeatScheme("CS")
    from conserva.solver import march_explicit
    he = march_explicit(lambda lo, t: explicit_cs00_step(lo, p.bdry, g, t), p.bdry.initial(g), g,
                        p.bdry)
    hn = newton_march(lambda a, c: heat_residual(s, a, c, p.bdry, g),
                      lambda a, c: heat_jacobian(s, a, c, p.bdry, g), p.bdry.initial(g), g,
                      NewtonConfig(), p.bdry)
    assert np.max(np.abs(he.u - hn.u)) <= 1e-12
