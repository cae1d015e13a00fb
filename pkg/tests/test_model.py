import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from strategies import grids, model_params

from hardwall.errors import DomainError
from hardwall.model import (
    ModelParams,
    ObservableGrid,
    T_funcs,
    balayage_integrals,
    balayage_radial,
    equilibrium,
    f_funcs,
    log_denominators,
    log_Q,
    mass_split,
    mathsf_Q,
    radial_log_potentials,
    radii,
)


def test_sigma_star_reference_arithmetic():
    eq = equilibrium(ModelParams(1.0, 0.0, 0.6, 0.8))
    assert eq.sigma_star == pytest.approx(0.28 / (2.0 * math.log(4.0 / 3.0)), rel=1e-15)
    # the rounded value 0.486655 sometimes quoted for this case is off in the
    # sixth digit; the exact arithmetic gives 0.4866483...
    assert round(eq.sigma_star, 6) == 0.486648


def test_equilibrium_against_oracle(model_oracle):
    for row in model_oracle["equilibrium"]:
        eq = equilibrium(ModelParams(row["b"], 0.0, row["rho1"], row["rho2"]))
        assert eq.sigma_star == pytest.approx(float(mp.mpf(row["sigma_star"])), abs=1e-13)
        assert eq.sigma1 == pytest.approx(float(mp.mpf(row["sigma1"])), abs=1e-13)
        assert eq.sigma2 == pytest.approx(float(mp.mpf(row["sigma2"])), abs=1e-13)


def test_degenerate_annulus_limit():
    rho1 = 0.5
    p = ModelParams(1.3, 0.0, rho1, rho1 * (1 + 1e-9))
    eq = equilibrium(p)
    assert eq.sigma_star == pytest.approx(p.x1, rel=1e-8)
    assert 0 < eq.sigma1 < 1e-8 and 0 < eq.sigma2 < 1e-8


@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_balayage_matches_closed_form(b):
    p = ModelParams.scaled_reference(b)
    eq = equilibrium(p)
    s1, s2 = balayage_radial(p)
    assert eq.sigma1 > 0 and eq.sigma2 > 0
    assert abs(s1 - eq.sigma1) < 1e-10 and abs(s2 - eq.sigma2) < 1e-10


@given(model_params())
def test_balayage_mass_integral(p):
    c1, c2 = balayage_integrals(p)
    assert c2 == pytest.approx(p.b * (p.rho2 ** (2 * p.b) - p.rho1 ** (2 * p.b)), rel=1e-12)
    eq = equilibrium(p)
    assert eq.sigma1 + eq.sigma2 == pytest.approx(c2, rel=1e-12)
    assert eq.sigma_star == pytest.approx(p.x1 + eq.sigma1, rel=1e-13)


@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_potentials_agree_outside_annulus(b):
    p = ModelParams.scaled_reference(b)
    for s in (p.rho1 / 2.0, 2.0 * p.rho2):
        u_ann, u_bal = radial_log_potentials(p, s)
        assert u_ann == pytest.approx(u_bal, abs=1e-12)
    u_ann, u_bal = radial_log_potentials(p, 0.5 * (p.rho1 + p.rho2))
    assert abs(u_ann - u_bal) > 1e-4


def test_mass_split():
    p = ModelParams.scaled_reference(1.0)
    eq = equilibrium(p)
    inner, outer = mass_split(p, eq)
    assert inner == pytest.approx(eq.sigma_star, abs=1e-12)
    assert outer == pytest.approx(1.0 - eq.sigma_star, abs=1e-12)


@given(grids(u_range=(-5.0, 5.0)))
def test_omega_identity(g):
    assert 1.0 + math.fsum(g.omega) == pytest.approx(g.Omega, rel=1e-13)


@given(grids(zero_u=True), st.floats(0.0, 1.0))
def test_zero_u_gives_zero_functions(g, frac):
    p = ModelParams.scaled_reference(1.0)
    x = p.x1 + frac * (p.x2 - p.x1)
    for j in (0, 1, 2):
        assert T_funcs(x, g, p, j) == (0.0, 0.0)
    if 1e-6 < frac < 1 - 1e-6:
        assert f_funcs(x, g, p) == (0.0, 0.0)
    assert log_Q(g, p) == 0.0 and mathsf_Q(g, p) == 1.0


@given(grids())
def test_T0_at_inner_wall_independent_of_t(g):
    p = ModelParams.scaled_reference(1.0)
    assert T_funcs(p.x1, g, p, 0)[0] == pytest.approx(math.fsum(g.omega[: g.m]), rel=1e-13, abs=1e-15)


@given(st.floats(-3.0, 3.0))
def test_single_radius_Q(u1):
    p = ModelParams.scaled_reference(1.0)
    g = ObservableGrid(1, (0.0, 0.0), (u1, 0.0))
    assert T_funcs(p.x2, g, p, 0)[1] == 0.0
    assert log_Q(g, p) == pytest.approx(u1, abs=1e-14)


def test_f_vanishes_for_zero_t():
    p = ModelParams.scaled_reference(1.0)
    g = ObservableGrid(1, (0.0, 0.0), (0.7, -0.4))
    assert f_funcs(0.5 * (p.x1 + p.x2), g, p) == (0.0, 0.0)


def test_f_rejects_walls():
    p = ModelParams.scaled_reference(1.0)
    g = ObservableGrid(1, (1.0, 1.0), (0.7, -0.4))
    with pytest.raises(DomainError):
        f_funcs(p.x1, g, p)


@given(model_params(), grids(u_range=(-10.0, 3.0)), st.floats(0.0, 1.0))
def test_denominators_positive(p, g, frac):
    x = p.x1 + frac * (p.x2 - p.x1)
    T0, H0 = T_funcs(x, g, p, 0)
    H0w = T_funcs(p.x2, g, p, 0)[1]
    assert 1.0 + T0 + H0w > 0
    assert 1.0 - H0 + H0w > 0
    assert mathsf_Q(g, p) > 0


def test_radii_formula():
    p = ModelParams(1.0, 0.0, 0.6, 0.8)
    r = radii(ObservableGrid(1, (1.0, 0.0), (0.0, 0.0)), p, 100)
    assert r[0] == pytest.approx(0.6 * math.sqrt(0.99), rel=1e-15)
    assert r[1] == 0.8


@given(model_params(), grids(), st.integers(4, 10**5))
def test_radii_ordered(p, g, n):
    r = radii(g, p, n)
    assert np.all(np.diff(r) > 0)
    assert r[g.m - 1] <= p.rho1 and r[g.m] >= p.rho2


def test_radii_need_large_n():
    with pytest.raises(DomainError):
        radii(ObservableGrid(1, (2.0, 0.0), (0.0, 0.0)), ModelParams.scaled_reference(), 2)


@pytest.mark.parametrize("bad", [
    dict(b=-1.0, alpha=0.0, rho1=0.1, rho2=0.2),
    dict(b=1.0, alpha=-1.0, rho1=0.1, rho2=0.2),
    dict(b=1.0, alpha=0.0, rho1=0.3, rho2=0.2),
    dict(b=1.0, alpha=0.0, rho1=0.3, rho2=1.0),
])
def test_param_validation(bad):
    with pytest.raises(DomainError):
        ModelParams(**bad)


@pytest.mark.parametrize("t", [(1.0, 2.0, 0.0, 1.0), (2.0, 1.0, 1.0, 1.0), (-1.0, 0.0)])
def test_grid_validation(t):
    m = len(t) // 2
    with pytest.raises(DomainError):
        ObservableGrid(m, t, (0.0,) * len(t))


@given(model_params(), grids(u_range=(-1.0, 1.0)))
def test_log_denominators_match_direct_form_for_moderate_exponents(params, grid):
    x = np.linspace(params.x1, params.x2, 9)
    T0, H0 = T_funcs(x, grid, params, 0)
    Hw = float(np.sum(grid.omega[grid.m:]))
    log_in, log_out = log_denominators(x, grid, params)
    assert np.allclose(log_in, np.log(1.0 + T0 + Hw), rtol=0, atol=1e-12)
    assert np.allclose(log_out, np.log(1.0 - H0 + Hw), rtol=0, atol=1e-12)


@given(model_params(), grids(zero_u=True))
def test_log_denominators_vanish_at_zero_exponents(params, grid):
    log_in, log_out = log_denominators(np.linspace(params.x1, params.x2, 5), grid, params)
    assert np.all(log_in == 0.0) and np.all(log_out == 0.0)


def test_log_denominators_at_the_walls_and_under_cancellation():
    params = ModelParams(1.0, 0.0, 0.6, 0.8)
    grid = ObservableGrid(2, (2.0, 1.0, 0.5, 3.0), (-9.0, -8.0, -10.0, 1.5))
    # at the inner wall the first denominator is Omega, at the outer wall the second is 1
    assert log_denominators(params.x1, grid, params)[0] == pytest.approx(grid.log_Omega, abs=1e-13)
    assert log_denominators(params.x2, grid, params)[1] == pytest.approx(0.0, abs=1e-15)
    x = 0.5 * (params.x1 + params.x2)
    mp.mp.dps = 50
    u = [mp.mpf(v) for v in grid.u]
    suffix = [mp.fsum(u[k:]) for k in range(4)] + [mp.mpf(0)]
    w = [mp.exp(suffix[k + 1]) * mp.expm1(u[k]) for k in range(4)]
    T0 = mp.fsum(w[k] * mp.exp(-grid.t[k] * (mp.mpf(x) - params.x1)) for k in range(2))
    Hw = w[2] + w[3]
    ref = float(mp.log(1 + T0 + Hw))
    mp.mp.dps = 15
    assert ref < -10
    assert log_denominators(x, grid, params)[0] == pytest.approx(ref, abs=1e-12)
