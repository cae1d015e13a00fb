import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hardwall.errors import DomainError
from hardwall.specialfn import (
    ThetaParams,
    jacobi_theta,
    jacobi_theta_modular,
    jacobi_theta_product,
    jacobi_theta_series,
    log_jacobi_theta,
    theta_log_derivatives,
    weierstrass_c,
    weierstrass_p,
)

tau_values = st.floats(0.2, 8.0)
real_z = st.floats(-2.0, 2.0)


def test_frozen_values(model_oracle):
    for row in model_oracle["theta"]:
        p = ThetaParams(row["tau_im"])
        ref = float(mp.mpf(row["theta"]))
        assert jacobi_theta(row["z"], p) == pytest.approx(ref, rel=1e-13)


@given(t=tau_values, z=real_z)
def test_periodicity(t, z):
    p = ThetaParams(t)
    assert jacobi_theta(z + 1.0, p) == pytest.approx(jacobi_theta(z, p), rel=1e-12)


@given(t=tau_values, z=real_z)
def test_symmetry(t, z):
    p = ThetaParams(t)
    assert jacobi_theta(-z, p) == pytest.approx(jacobi_theta(z, p), rel=1e-12)


@given(t=st.floats(0.5, 4.0), z=st.floats(-0.5, 0.5))
def test_quasi_periodicity(t, z):
    p = ThetaParams(t)
    tau = p.tau
    lhs = jacobi_theta_series(z + tau, p)
    rhs = cmath.exp(-2j * math.pi * z - 1j * math.pi * tau) * jacobi_theta_series(z, p)
    assert abs(lhs - rhs) <= 1e-11 * abs(rhs)


@given(t=tau_values, z=st.floats(-1.0, 1.0))
def test_modular_matches_series(t, z):
    p = ThetaParams(t)
    assert jacobi_theta_modular(z, p) == pytest.approx(jacobi_theta_series(z, p), rel=1e-12)


@given(t=tau_values, z=st.floats(-1.0, 1.0))
def test_triple_product(t, z):
    p = ThetaParams(t)
    assert jacobi_theta_product(z, p) == pytest.approx(jacobi_theta_series(z, p), rel=1e-12)


def test_large_tau_limit():
    assert jacobi_theta(0.3, ThetaParams(50.0)) == 1.0


@given(t=tau_values, z=real_z)
def test_log_derivatives_consistent(t, z):
    p = ThetaParams(t)
    h = 1e-4
    lt, d1, d2 = theta_log_derivatives(z, p)
    assert lt == pytest.approx(math.log(jacobi_theta(z, p)), abs=1e-13)
    fd = (log_jacobi_theta(z + h, p) - log_jacobi_theta(z - h, p)) / (2 * h)
    assert fd == pytest.approx(d1, abs=1e-6 * max(1.0, abs(d1)))


def test_weierstrass_constant_against_mpmath():
    for t in (0.4, 1.0, 2.3):
        q = math.exp(-math.pi * t)
        with mp.workdps(30):
            ref = mp.pi**2 * mp.jtheta(1, 0, q, 3) / (3 * mp.jtheta(1, 0, q, 1))
        assert weierstrass_c(ThetaParams(t)) == pytest.approx(float(ref), rel=1e-12)


@given(t=st.floats(0.3, 5.0), x=st.floats(-0.45, 0.45))
def test_wp_matches_log_theta(t, x):
    p = ThetaParams(t)
    d2 = theta_log_derivatives(x + 0.5, p)[2]
    wp = weierstrass_p(complex(x, t / 2.0), p)
    assert abs(wp.imag) < 1e-9 * max(1.0, abs(wp.real))
    assert wp.real - weierstrass_c(p) == pytest.approx(-d2, abs=1e-9 * max(1.0, abs(d2)))


@given(t=st.floats(0.3, 5.0), x=st.floats(0.05, 0.45))
def test_wp_periodic_and_even(t, x):
    p = ThetaParams(t)
    w = weierstrass_p(x, p)
    assert weierstrass_p(x + 1.0, p) == pytest.approx(w, rel=1e-9)
    assert weierstrass_p(-x, p) == pytest.approx(w, rel=1e-9)


def test_wp_against_mpmath_series():
    # p(z) = 1/z**2 + sum over nonzero lattice points, checked through the
    # Laurent start p(z) - 1/z**2 -> 0 at z -> 0 for the square lattice
    p = ThetaParams(1.0)
    z = 1e-3
    assert weierstrass_p(z, p) - 1 / z**2 == pytest.approx(0.0, abs=1e-5)


def test_wp_pole():
    with pytest.raises(DomainError):
        weierstrass_p(1.0, ThetaParams(1.0))


def test_params_validation():
    with pytest.raises(DomainError):
        ThetaParams(0.0)
    p = ThetaParams.from_radii(0.6, 0.8)
    assert p.tau_im == pytest.approx(math.pi / math.log(4 / 3))
    assert p.nome == pytest.approx(math.exp(-math.pi * p.tau_im))


def test_vector_input():
    p = ThetaParams(1.3)
    zs = np.linspace(-1, 1, 7)
    assert np.allclose(jacobi_theta(zs, p), [jacobi_theta(z, p) for z in zs], rtol=1e-15)
