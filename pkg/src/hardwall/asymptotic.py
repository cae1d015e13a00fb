"""Large-n expansion of the counting-statistics MGF and its closed-form corollaries.

The log-MGF behaves like ``C1 n + C2 ln n + C3 + F_n + C4 / sqrt(n)`` where
``F_n`` is a ratio of Jacobi theta functions with nome
``q = exp(-pi**2 / L)``. Joint cumulants are the u-derivatives of these
terms at ``u = 0``; the first two orders are also available in closed form.

Throughout, ``x1 = b rho1**(2b)``, ``x2 = b rho2**(2b)``, ``L = ln(rho2/rho1)``,
and ``phi(y) = (1 - exp(-y)) / y`` with ``phi(0) = 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError
from .model import (
    EquilibriumData,
    ModelParams,
    ObservableGrid,
    T_funcs,
    equilibrium,
    log_denominators,
    log_Q,
)
from .specialfn import (
    ThetaParams,
    erfc_integral_constants,
    log_jacobi_theta,
    theta_log_derivatives,
    weierstrass_c,
    weierstrass_p,
)

__all__ = [
    "AsymptoticExpansion",
    "CovarianceCoefficients",
    "ExpectationCoefficients",
    "F_n",
    "clt_covariance",
    "constants",
    "covariance_asymptotics",
    "covariance_coefficients",
    "cumulant_asymptotics",
    "expansion_derivative",
    "expectation_asymptotics",
    "expectation_coefficients",
    "log_mgf_asymptotic",
    "theta_argument",
]

_QUAD_TOL = 1e-13
_MAX_ORDER = 4


def _phi(y):
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-8
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, 1.0 - y / 2.0, -np.expm1(-y) / np.where(small, 1.0, y))
    return out if out.ndim else float(out)


def _quad(f, a, b):
    if b <= a:
        return 0.0
    val, err = integrate.quad(f, a, b, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
    if not err < 1e-9:
        raise QuadratureError(f"quadrature error estimate {err:.2e} on [{a}, {b}]")
    return val


def _log_sigma_ratio(eq: EquilibriumData) -> float:
    return math.log(eq.sigma2 / eq.sigma1)


def theta_argument(params: ModelParams, n: int, eq: EquilibriumData | None = None) -> float:
    """``z_n = sigma_star n + 1/2 - alpha + ln(sigma2/sigma1) / (2L)`` reduced mod 1 in ``sigma_star n``.

    The reduction uses the period 1 of theta and is exact up to the rounding
    of ``sigma_star * n`` (about ``n * 1e-16``).
    """
    eq = eq or equilibrium(params)
    frac = math.fmod(eq.sigma_star * n, 1.0)
    return frac + 0.5 - params.alpha + _log_sigma_ratio(eq) / (2.0 * params.log_ratio)


@dataclass(frozen=True)
class AsymptoticExpansion:
    """Constants of the large-n expansion for one ``(params, grid)`` pair.

    Attributes
    ----------
    C1, C2, C3, C4 : float
        Coefficients of ``n``, ``ln n``, ``1`` and ``n**-1/2``.
    log_Q : float
        Shift of the theta argument is ``log_Q / (2L)``.
    theta : ThetaParams
        ``tau = pi i / L``.
    c_const : float
        The Weierstrass normalization ``theta1'''(0) / (3 theta1'(0))``.
    """

    C1: float
    C2: float
    C3: float
    C4: float
    log_Q: float
    theta: ThetaParams
    c_const: float
    params: ModelParams
    eq: EquilibriumData

    def F_n(self, n: int) -> float:
        """Oscillatory term ``ln theta(z_n + ln Q/(2L)) - ln theta(z_n)``."""
        if self.log_Q == 0.0:
            return 0.0
        z = theta_argument(self.params, n, self.eq)
        shift = self.log_Q / (2.0 * self.params.log_ratio)
        return float(log_jacobi_theta(z + shift, self.theta) - log_jacobi_theta(z, self.theta))

    def F_n_discrete_gaussian(self, n: int) -> float:
        """``F_n`` from the discrete Gaussian expectation of ``Q**(X - frac)``.

        An independent evaluation of the same quantity through the theta
        modular transform; used to cross-check :meth:`F_n`.
        """
        L = self.params.log_ratio
        lam = (self.eq.sigma_star * n - 0.5 - self.params.alpha
               + _log_sigma_ratio(self.eq) / (2.0 * L))
        frac = lam - math.floor(lam)
        K = math.ceil(math.sqrt(40.0 / L + (self.log_Q / (2.0 * L)) ** 2)) + abs(
            math.ceil(self.log_Q / (2.0 * L))) + 3
        x = np.arange(-K, K + 1) - frac
        base = -L * x * x
        num = np.logaddexp.reduce(base + x * self.log_Q)
        den = np.logaddexp.reduce(base)
        return float(-self.log_Q**2 / (4.0 * L) + num - den)

    def log_mgf(self, n: int, include_theta: bool = True, include_c4: bool = True) -> float:
        """``C1 n + C2 ln n + C3 + F_n + C4 / sqrt(n)`` with optional terms dropped."""
        val = self.C1 * n + self.C2 * math.log(n) + self.C3
        if include_theta:
            val += self.F_n(n)
        if include_c4:
            val += self.C4 / math.sqrt(n)
        return val


def F_n(expansion: AsymptoticExpansion, n: int) -> float:
    """Oscillatory term of ``expansion`` at ``n``; see :meth:`AsymptoticExpansion.F_n`."""
    return expansion.F_n(n)


def _wall_values(grid, params):
    T1w, H1w = T_funcs(params.x1, grid, params, 1)[0], T_funcs(params.x2, grid, params, 1)[1]
    T2w, H2w = T_funcs(params.x1, grid, params, 2)[0], T_funcs(params.x2, grid, params, 2)[1]
    return T1w, T2w, H1w, H2w


def _inner_regularized(x, grid, params, T1w, Omega):
    """``f(x) + x1 T1(x1) / (Omega (x - x1))`` without the pole cancellation."""
    m = grid.m
    t = grid.t_array[:m]
    w = grid.omega[:m]
    b, a, x1 = params.b, params.alpha, params.x1
    d = x - x1
    e = np.exp(-t * d / b)
    g = (t / b) * _phi(t * d / b)  # (1 - e) / (x - x1)
    T1 = float(np.dot(w * t, e))
    T2 = float(np.dot(w * t * t, e))
    D = math.exp(log_denominators(x, grid, params)[0])
    A = -float(np.dot(w, g))  # (T0(x) - T0(x1)) / (x - x1)
    B = float(np.dot(w * t, g))  # (T1(x1) - T1(x)) / (x - x1)
    return x1 * (T1w * A + Omega * B) / (Omega * D) + (-(a / b) * T1 - x * T2 / (2.0 * b)) / D


def _outer_regularized(x, grid, params, H1w):
    """``fhat(x) - x2 That1(x2) / (x2 - x)`` without the pole cancellation."""
    m = grid.m
    t = grid.t_array[m:]
    w = grid.omega[m:]
    b, a, x2 = params.b, params.alpha, params.x2
    d = x2 - x
    e = np.exp(-t * d / b)
    g = (t / b) * _phi(t * d / b)
    H1 = float(np.dot(w * t, e))
    H2 = float(np.dot(w * t * t, e))
    D = math.exp(log_denominators(x, grid, params)[1])
    return (x2 * (-float(np.dot(w * t, g)) - H1w * float(np.dot(w, g)))
            + (-(a / b) * H1 + x * H2 / (2.0 * b))) / D


def constants(params: ModelParams, grid: ObservableGrid,
              eq: EquilibriumData | None = None) -> AsymptoticExpansion:
    """Evaluate ``C1..C4``, ``ln Q`` and the theta data for one grid.

    ``C1`` and ``C3`` need one quadrature on each side of ``sigma_star``;
    the ``C3`` integrands are the pole-subtracted forms of ``f`` and ``fhat``,
    which are analytic up to the walls.
    """
    eq = eq or equilibrium(params)
    b, x1, x2, L = params.b, params.x1, params.x2, params.log_ratio
    Omega = grid.Omega
    sum_u = grid.log_Omega
    T1w, T2w, H1w, H2w = _wall_values(grid, params)
    s = eq.sigma_star
    lq = log_Q(grid, params, eq)

    def c1_in(x):
        return log_denominators(x, grid, params)[0]

    def c1_out(x):
        return log_denominators(x, grid, params)[1]

    C1 = x1 * sum_u + _quad(c1_in, x1, s) + _quad(c1_out, s, x2)
    C2 = -0.5 * x1 * T1w / Omega + 0.5 * x2 * H1w
    lsr = _log_sigma_ratio(eq)
    log_in = math.log(b * params.rho1**b / (math.sqrt(2.0 * math.pi) * eq.sigma1))
    log_out = math.log(b * params.rho2**b / (math.sqrt(2.0 * math.pi) * eq.sigma2))
    C3 = (-0.5 * sum_u - (params.alpha - (2.0 * lsr + lq) / (4.0 * L)) * lq
          + _quad(lambda x: _inner_regularized(x, grid, params, T1w, Omega), x1, s)
          + _quad(lambda x: _outer_regularized(x, grid, params, H1w), s, x2)
          + x1 * T1w / Omega * log_in - x2 * H1w * log_out)
    I = erfc_integral_constants().I
    r1, r2 = params.rho1, params.rho2
    C4 = math.sqrt(2.0) * I * b * (
        r1 ** (3 * b) * T2w / Omega - r1**b * T1w / Omega - r1 ** (3 * b) * T1w**2 / Omega**2
        - r2 ** (3 * b) * H2w - r2**b * H1w - r2 ** (3 * b) * H1w**2
    )
    theta = ThetaParams.from_radii(params.rho1, params.rho2)
    return AsymptoticExpansion(C1, C2, C3, C4, lq, theta, weierstrass_c(theta), params, eq)


def log_mgf_asymptotic(params: ModelParams, grid: ObservableGrid, n: int,
                       eq: EquilibriumData | None = None, include_theta: bool = True,
                       include_c4: bool = True) -> float:
    """``C1 n + C2 ln n + C3 + F_n + C4/sqrt(n)``; see :class:`AsymptoticExpansion`."""
    return constants(params, grid, eq).log_mgf(n, include_theta, include_c4)


# ---------------------------------------------------------------------------
# closed-form first and second cumulants


class ExpectationCoefficients(NamedTuple):
    b1: float
    c1: float
    d1: float
    e1: float
    f1_weight: float  # f1(n) = f1_weight * (ln theta)'(z_n) / (2L)


class CovarianceCoefficients(NamedTuple):
    b11: float
    c11: float
    d11: float
    e11: float
    wp_weight: float  # multiplies -(p(w) - c) / (4 L**2)
    dlog_weight: float  # multiplies (ln theta)'(z_n) / (2L)


def _check_index(grid, ell):
    if not 1 <= ell <= 2 * grid.m:
        raise DomainError(f"index must lie in 1..{2 * grid.m}, got {ell}")


def expectation_coefficients(params: ModelParams, grid: ObservableGrid, ell: int,
                             eq: EquilibriumData | None = None) -> ExpectationCoefficients:
    """Coefficients of ``E[N(r_ell)] = b1 n + c1 ln n + d1 + f1(n) + e1/sqrt(n)``."""
    _check_index(grid, ell)
    eq = eq or equilibrium(params)
    b, a, x1, x2, L = params.b, params.alpha, params.x1, params.x2, params.log_ratio
    t = grid.t[ell - 1]
    I = erfc_integral_constants().I
    shift = a - _log_sigma_ratio(eq) / (2.0 * L)
    s = eq.sigma_star
    if ell <= grid.m:
        decay = math.exp(-t * eq.sigma1 / b)
        b1 = x1 + eq.sigma1 * _phi(t * eq.sigma1 / b)
        c1 = -x1 * t / 2.0
        log_in = math.log(b * params.rho1**b / (math.sqrt(2.0 * math.pi) * eq.sigma1))

        def integrand(x):
            y = t * (x - x1) / b
            return x1 * t * (t / b) * _phi(y) - math.exp(-y) * t * (2.0 * a + x * t) / (2.0 * b)

        d1 = -0.5 - decay * shift + x1 * t * log_in + (_quad(integrand, x1, s) if t else 0.0)
        e1 = math.sqrt(2.0) * I * b * params.rho1**b * t * (params.rho1 ** (2 * b) * t - 1.0)
    else:
        decay = math.exp(-t * eq.sigma2 / b)
        b1 = x2 - eq.sigma2 * _phi(t * eq.sigma2 / b)
        c1 = x2 * t / 2.0
        log_out = math.log(b * params.rho2**b / (math.sqrt(2.0 * math.pi) * eq.sigma2))

        def integrand(x):
            y = t * (x2 - x) / b
            return x2 * t * (t / b) * _phi(y) + math.exp(-y) * t * (2.0 * a - x * t) / (2.0 * b)

        d1 = -0.5 - decay * shift - x2 * t * log_out - (_quad(integrand, s, x2) if t else 0.0)
        e1 = -math.sqrt(2.0) * I * b * params.rho2**b * t * (params.rho2 ** (2 * b) * t + 1.0)
    return ExpectationCoefficients(b1, c1, d1, e1, decay)


def _theta_terms(params, n, eq):
    theta = ThetaParams.from_radii(params.rho1, params.rho2)
    z = theta_argument(params, n, eq)
    _, d1, _ = theta_log_derivatives(z, theta)
    # p(w) with w = z_n - 1/2 + tau/2 lies on the real line Im w = tau_im / 2
    wp = weierstrass_p(complex(z - 0.5, theta.tau_im / 2.0), theta)
    if abs(wp.imag) > 1e-8 * max(1.0, abs(wp.real)):
        raise ArithmeticError("weierstrass_p left the real slice")
    return float(d1), float(wp.real) - weierstrass_c(theta)


def expectation_asymptotics(params: ModelParams, grid: ObservableGrid, ell: int, n: int,
                            eq: EquilibriumData | None = None) -> float:
    """Closed-form large-n approximation of ``E[N(r_ell)]``."""
    eq = eq or equilibrium(params)
    co = expectation_coefficients(params, grid, ell, eq)
    dlog, _ = _theta_terms(params, n, eq)
    f1 = co.f1_weight * dlog / (2.0 * params.log_ratio)
    return co.b1 * n + co.c1 * math.log(n) + co.d1 + f1 + co.e1 / math.sqrt(n)


def covariance_coefficients(params: ModelParams, grid: ObservableGrid, ell: int, k: int,
                            eq: EquilibriumData | None = None) -> CovarianceCoefficients:
    """Coefficients of ``Cov(N(r_ell), N(r_k))`` for ``ell <= k`` in all three regimes."""
    _check_index(grid, ell)
    _check_index(grid, k)
    if ell > k:
        ell, k = k, ell
    eq = eq or equilibrium(params)
    b, a, x1, x2, L = params.b, params.alpha, params.x1, params.x2, params.log_ratio
    m = grid.m
    tl, tk = grid.t[ell - 1], grid.t[k - 1]
    I = erfc_integral_constants().I
    lsr = _log_sigma_ratio(eq)
    s = eq.sigma_star
    s1, s2 = eq.sigma1, eq.sigma2
    if k <= m:
        b11 = s1 * _phi(tl * s1 / b) - s1 * _phi((tl + tk) * s1 / b)
        c11 = x1 * tk / 2.0
        log_in = math.log(b * params.rho1**b / (math.sqrt(2.0 * math.pi) * s1))

        def integrand(x):
            y = (x - x1) / b
            e_sum = math.exp(-(tl + tk) * y)
            return (-x1 * tk * ((tl + tk) / b) * _phi((tl + tk) * y)
                    + (x * tk * tk + 2.0 * a * tk) / (2.0 * b) * e_sum
                    - tl * math.exp(-tl * y) * (
                        x1 * (tk / b) * _phi(tk * y)
                        + (1.0 - math.exp(-tk * y)) * (2.0 * a + x * tl) / (2.0 * b)))

        d11 = (-math.exp(-tl * s1 / b) * (a - lsr / (2.0 * L))
               + math.exp(-(tl + tk) * s1 / b) * (a - (lsr - 1.0) / (2.0 * L))
               + (_quad(integrand, x1, s) if (tl or tk) else 0.0)
               - x1 * tk * log_in)
        e11 = math.sqrt(2.0) * I * b * params.rho1**b * tk * (1.0 - params.rho1 ** (2 * b) * (2 * tl + tk))
        wp_w = math.exp(-(tl + tk) * s1 / b)
        dlog_w = wp_w * math.expm1(tk * s1 / b)
    elif ell > m:
        b11 = s2 * _phi(tk * s2 / b) - s2 * _phi((tl + tk) * s2 / b)
        c11 = x2 * tl / 2.0
        log_out = math.log(b * params.rho2**b / (math.sqrt(2.0 * math.pi) * s2))

        def integrand(x):
            y = (x2 - x) / b
            e_sum = math.exp(-(tl + tk) * y)
            return (-x2 * tl * ((tl + tk) / b) * _phi((tl + tk) * y)
                    + (x * tl * tl - 2.0 * a * tl) / (2.0 * b) * e_sum
                    + tk * math.exp(-tk * y) * (
                        -x2 * (tl / b) * _phi(tl * y)
                        + (1.0 - math.exp(-tl * y)) * (2.0 * a - x * tk) / (2.0 * b)))

        d11 = (math.exp(-tk * s2 / b) * (a - lsr / (2.0 * L))
               - math.exp(-(tl + tk) * s2 / b) * (a - (lsr + 1.0) / (2.0 * L))
               + (_quad(integrand, s, x2) if (tl or tk) else 0.0)
               - x2 * tl * log_out)
        e11 = -math.sqrt(2.0) * I * b * params.rho2**b * tl * (1.0 + params.rho2 ** (2 * b) * (tl + 2 * tk))
        wp_w = math.exp(-(tl + tk) * s2 / b)
        dlog_w = -wp_w * math.expm1(tl * s2 / b)
    else:
        wp_w = math.exp(-tl * s1 / b) * math.exp(-tk * s2 / b)
        b11, c11, e11, dlog_w = 0.0, 0.0, 0.0, 0.0
        d11 = wp_w / (2.0 * L)
    return CovarianceCoefficients(b11, c11, d11, e11, wp_w, dlog_w)


def covariance_asymptotics(params: ModelParams, grid: ObservableGrid, ell: int, k: int, n: int,
                           eq: EquilibriumData | None = None) -> float:
    """Closed-form large-n approximation of ``Cov(N(r_ell), N(r_k))``.

    The oscillation is ``f11 = -w (p(w_n) - c) / (4L**2) + v (ln theta)'(z_n) / (2L)``
    with ``w_n = z_n - 1/2 + tau/2`` and regime-dependent weights ``w, v``.
    """
    eq = eq or equilibrium(params)
    co = covariance_coefficients(params, grid, ell, k, eq)
    L = params.log_ratio
    dlog, wp_minus_c = _theta_terms(params, n, eq)
    f11 = -co.wp_weight * wp_minus_c / (4.0 * L * L) + co.dlog_weight * dlog / (2.0 * L)
    return co.b11 * n + co.c11 * math.log(n) + co.d11 + f11 + co.e11 / math.sqrt(n)


def clt_covariance(params: ModelParams, grid: ObservableGrid,
                   eq: EquilibriumData | None = None) -> np.ndarray:
    """Limit correlation matrix of the standardized counts.

    Needs ``t_m > 0`` and ``t_{m+1} > 0`` so that every diagonal ``b11`` is
    positive.
    """
    m = grid.m
    if not (grid.t[m - 1] > 0 and grid.t[m] > 0):
        raise DomainError("the CLT needs t_m > 0 and t_{m+1} > 0")
    eq = eq or equilibrium(params)
    k = 2 * m
    B = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            if (i < m) == (j < m):
                B[i, j] = B[j, i] = covariance_coefficients(params, grid, i + 1, j + 1, eq).b11
    d = np.sqrt(np.diag(B))
    sigma = B / np.outer(d, d)
    np.fill_diagonal(sigma, 1.0)
    return sigma


# ---------------------------------------------------------------------------
# u-derivatives of the expansion by finite differences

_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
}


def _as_orders(jvec, size):
    orders = [int(v) for v in jvec]
    if len(orders) != size or any(v < 0 for v in orders):
        raise DomainError(f"multi-index must have {size} nonnegative entries")
    total = sum(orders)
    if total < 1:
        raise DomainError("multi-index must have order >= 1")
    if total > _MAX_ORDER:
        raise DomainError(f"derivative order {total} exceeds the supported {_MAX_ORDER}")
    return orders


def expansion_derivative(params: ModelParams, grid: ObservableGrid, jvec: Sequence[int],
                         n_list: Sequence[int] = (), eq: EquilibriumData | None = None,
                         h: float = 0.05, levels: int = 4) -> dict:
    """Mixed u-derivative at ``u = 0`` of ``C1..C4`` and of ``F_n`` for each ``n``.

    Tensor-product central differences with step ``h, h/2, ...`` combined by
    Richardson extrapolation in ``h**2``. The constants are analytic in ``u``
    so a fairly large base step keeps roundoff negligible.

    Returns
    -------
    dict
        Keys ``"C1" .. "C4"`` and ``("F", n)`` for each requested ``n``.
    """
    eq = eq or equilibrium(params)
    orders = _as_orders(jvec, 2 * grid.m)
    axes = [(i, _STENCILS[o]) for i, o in enumerate(orders) if o]
    cache = {}

    def evaluate(u):
        key = tuple(u)
        if key not in cache:
            ex = constants(params, grid.with_u(u), eq)
            cache[key] = np.array([ex.C1, ex.C2, ex.C3, ex.C4] + [ex.F_n(n) for n in n_list])
        return cache[key]

    def stencil(step):
        total = 0.0
        for combo in itertools.product(*[list(st.items()) for _, st in axes]):
            u = np.zeros(2 * grid.m)
            coef = 1.0
            for (axis, _), (shift, c) in zip(axes, combo):
                u[axis] += shift * step
                coef *= c
            total = total + coef * evaluate(u)
        return total / step ** sum(orders)

    table = [stencil(h / 2**i) for i in range(levels)]
    for p in range(1, levels):
        f = 4.0**p
        table = [(f * table[i + 1] - table[i]) / (f - 1.0) for i in range(len(table) - 1)]
    vec = table[0]
    out = {"C1": vec[0], "C2": vec[1], "C3": vec[2], "C4": vec[3]}
    for i, n in enumerate(n_list):
        out[("F", n)] = vec[4 + i]
    return out


def cumulant_asymptotics(params: ModelParams, grid: ObservableGrid, jvec: Sequence[int], n: int,
                         eq: EquilibriumData | None = None) -> float:
    """Large-n approximation of the joint cumulant ``kappa_j`` of the counts.

    Differentiates ``C1 n + C2 ln n + C3 + F_n + C4/sqrt(n)`` in ``u`` at 0.
    Orders up to 4 are supported.
    """
    d = expansion_derivative(params, grid, jvec, [n], eq)
    return d["C1"] * n + d["C2"] * math.log(n) + d["C3"] + d[("F", n)] + d["C4"] / math.sqrt(n)
