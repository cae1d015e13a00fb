"""Model definition: parameters, observable grid, equilibrium data and the
building-block functions T_j, f, Q shared by the exact and asymptotic engines.

Notation: ``x1 = b*rho1**(2b)`` and ``x2 = b*rho2**(2b)`` are the wall values,
``L = ln(rho2/rho1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError

__all__ = [
    "EquilibriumData",
    "ModelParams",
    "ObservableGrid",
    "T_funcs",
    "balayage_integrals",
    "balayage_radial",
    "equilibrium",
    "f_funcs",
    "log_Q",
    "log_denominators",
    "mass_split",
    "mathsf_Q",
    "radial_log_potentials",
    "radii",
]

_QUAD_TOL = 1e-12
_ENDPOINT_GAP = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Hard-wall Mittag-Leffler ensemble.

    Attributes
    ----------
    b : float
        Potential exponent, ``b > 0``.
    alpha : float
        Point charge at the origin, ``alpha > -1``.
    rho1, rho2 : float
        Wall radii, ``0 < rho1 < rho2 < b**(-1/(2b))``.
    """

    b: float
    alpha: float
    rho1: float
    rho2: float

    def __post_init__(self):
        vals = (self.b, self.alpha, self.rho1, self.rho2)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError(f"non-finite model parameter in {vals}")
        if not self.b > 0:
            raise DomainError(f"b must be positive, got {self.b}")
        if not self.alpha > -1:
            raise DomainError(f"alpha must exceed -1, got {self.alpha}")
        edge = self.b ** (-1.0 / (2.0 * self.b))
        if not 0 < self.rho1 < self.rho2 < edge:
            raise DomainError(
                f"need 0 < rho1 < rho2 < b**(-1/(2b)) = {edge:.12g}, "
                f"got rho1={self.rho1}, rho2={self.rho2}"
            )

    @classmethod
    def scaled_reference(cls, b: float = 1.0, alpha: float = 0.0) -> "ModelParams":
        """Radii ``(3/5, 4/5) * b**(-1/(2b))``, the reference configuration."""
        edge = b ** (-1.0 / (2.0 * b))
        return cls(b=b, alpha=alpha, rho1=0.6 * edge, rho2=0.8 * edge)

    @property
    def x1(self) -> float:
        return self.b * self.rho1 ** (2.0 * self.b)

    @property
    def x2(self) -> float:
        return self.b * self.rho2 ** (2.0 * self.b)

    @property
    def log_ratio(self) -> float:
        """``L = ln(rho2 / rho1)``."""
        return math.log(self.rho2 / self.rho1)


@dataclass(frozen=True)
class ObservableGrid:
    """Merging radii exponents ``t`` and MGF parameters ``u``.

    The first ``m`` entries of ``t`` belong to radii inside the wall and must
    be strictly decreasing; the last ``m`` belong to radii outside and must
    be strictly increasing. All ``t`` are nonnegative.
    """

    m: int
    t: tuple
    u: tuple

    def __post_init__(self):
        t = tuple(float(v) for v in self.t)
        u = tuple(float(v) for v in self.u)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "u", u)
        m = self.m
        if not (isinstance(m, (int, np.integer)) and m >= 1):
            raise DomainError(f"m must be a positive integer, got {m!r}")
        if len(t) != 2 * m or len(u) != 2 * m:
            raise DomainError(f"t and u need length 2m = {2 * m}")
        if not all(math.isfinite(v) and v >= 0 for v in t):
            raise DomainError("t entries must be finite and nonnegative")
        if not all(math.isfinite(v) for v in u):
            raise DomainError("u entries must be finite")
        inner, outer = t[:m], t[m:]
        if any(a <= b for a, b in zip(inner, inner[1:])):
            raise DomainError("need t_1 > ... > t_m")
        if any(a >= b for a, b in zip(outer, outer[1:])):
            raise DomainError("need t_{m+1} < ... < t_{2m}")

    @classmethod
    def single(cls, t_in: float = 0.0, t_out: float = 0.0, u_in: float = 0.0,
               u_out: float = 0.0) -> "ObservableGrid":
        """The ``m = 1`` grid with one radius on each side of the wall."""
        return cls(1, (t_in, t_out), (u_in, u_out))

    def with_u(self, u: Sequence[float]) -> "ObservableGrid":
        return ObservableGrid(self.m, self.t, tuple(u))

    @property
    def t_array(self) -> np.ndarray:
        return np.asarray(self.t)

    @property
    def u_array(self) -> np.ndarray:
        return np.asarray(self.u)

    @property
    def suffix_sums(self) -> np.ndarray:
        """``s_k = u_k + ... + u_{2m}`` for k = 1..2m+1 (the last entry is 0)."""
        u = self.u_array
        return np.append(np.cumsum(u[::-1])[::-1], 0.0)

    @property
    def omega(self) -> np.ndarray:
        """Weights ``omega_1..omega_{2m}`` (``omega_{2m+1} = 1`` is implicit)."""
        s = self.suffix_sums
        return np.exp(s[1:]) * np.expm1(self.u_array)

    @property
    def log_Omega(self) -> float:
        return math.fsum(self.u)

    @property
    def Omega(self) -> float:
        """``exp(u_1 + ... + u_{2m}) = 1 + sum(omega)``."""
        return math.exp(self.log_Omega)


@dataclass(frozen=True)
class EquilibriumData:
    """Masses of the balayage measure: ``sigma_star`` inside ``rho1``, and the
    singular parts ``sigma1`` on ``|z| = rho1`` and ``sigma2`` on ``|z| = rho2``."""

    sigma_star: float
    sigma1: float
    sigma2: float


def _expm1_minus_x(y):
    if abs(y) < 1e-2:
        term, total, k = y * y / 2.0, 0.0, 2
        while abs(term) > 1e-18 * abs(total) or total == 0.0:
            total += term
            k += 1
            term *= y / k
            if k > 40:
                break
        return total
    return math.expm1(y) - y


def equilibrium(params: ModelParams) -> EquilibriumData:
    """Closed-form ``sigma_star``, ``sigma1`` and ``sigma2``.

    Written through ``y = 2 b L`` so that nearly coincident walls do not
    cancel catastrophically.

    >>> eq = equilibrium(ModelParams.scaled_reference(1.0))
    >>> round(eq.sigma_star, 6)
    0.486648
    """
    L = params.log_ratio
    y = 2.0 * params.b * L
    p1 = params.rho1 ** (2.0 * params.b)
    sigma_star = p1 * math.expm1(y) / (2.0 * L)
    em = _expm1_minus_x(y)
    sigma1 = p1 * em / (2.0 * L)
    sigma2 = p1 * (y * math.expm1(y) - em) / (2.0 * L)
    if not (sigma1 > 0 and sigma2 > 0):
        raise DomainError("equilibrium masses are not positive")
    return EquilibriumData(sigma_star, sigma1, sigma2)


def _quad(f, a, b):
    val, err = integrate.quad(f, a, b, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
    if not err < 1e-9:
        raise QuadratureError(f"quadrature error estimate {err:.2e}")
    return val


def _density(params):
    b = params.b
    return lambda r: 2.0 * b * b * r ** (2.0 * b - 1.0)


def balayage_integrals(params: ModelParams) -> tuple:
    """``(C1, C2) = (int ln(1/r) dmu, int dmu)`` over the annulus, by quadrature.

    ``C2`` has the closed form ``b (rho2**(2b) - rho1**(2b))``.
    """
    dens = _density(params)
    c1 = _quad(lambda r: dens(r) * math.log(1.0 / r), params.rho1, params.rho2)
    c2 = _quad(dens, params.rho1, params.rho2)
    return c1, c2


def balayage_radial(params: ModelParams) -> tuple:
    """Solve for the singular masses ``(sigma1, sigma2)`` by quadrature.

    The annular part of the equilibrium measure is swept onto the two wall
    circles; matching the logarithmic potential inside ``rho1`` and outside
    ``rho2`` gives a 2x2 system in the integrals of :func:`balayage_integrals`.
    """
    c1, c2 = balayage_integrals(params)
    L = params.log_ratio
    sigma1 = (c1 - c2 * math.log(1.0 / params.rho2)) / L
    sigma2 = (c2 * math.log(1.0 / params.rho1) - c1) / L
    return sigma1, sigma2


def radial_log_potentials(params: ModelParams, s: float, eq: EquilibriumData | None = None):
    """Log potentials at ``|z| = s`` of the annular mass and of its balayage.

    Uses ``int ln(1/|z - r e^{i theta}|) dtheta / 2pi = ln(1/max(|z|, r))``.
    The two agree for ``s <= rho1`` and ``s >= rho2``.
    """
    eq = eq or equilibrium(params)
    dens = _density(params)
    r1, r2 = params.rho1, params.rho2
    if s <= r1 or s >= r2:
        u_ann = _quad(lambda r: dens(r) * math.log(1.0 / max(s, r)), r1, r2)
    else:
        u_ann = _quad(lambda r: dens(r) * math.log(1.0 / s), r1, s) + _quad(
            lambda r: dens(r) * math.log(1.0 / r), s, r2
        )
    u_bal = eq.sigma1 * math.log(1.0 / max(s, r1)) + eq.sigma2 * math.log(1.0 / max(s, r2))
    return u_ann, u_bal


def mass_split(params: ModelParams, eq: EquilibriumData | None = None) -> tuple:
    """Masses of the equilibrium measure on ``|z| <= rho1`` and ``|z| >= rho2``."""
    eq = eq or equilibrium(params)
    dens = _density(params)
    edge = params.b ** (-1.0 / (2.0 * params.b))
    inner = _quad(dens, 0.0, params.rho1) + eq.sigma1
    outer = _quad(dens, params.rho2, edge) + eq.sigma2
    return inner, outer


def T_funcs(x, grid: ObservableGrid, params: ModelParams, j: int = 0):
    """Return ``(T_j(x), That_j(x))``.

    ``T_j(x) = sum_{l<=m} omega_l t_l**j exp(-(t_l/b)(x - x1))`` and
    ``That_j(x) = sum_{l>m} omega_l t_l**j exp(-(t_l/b)(x2 - x))``,
    with ``0**0 = 1``.
    """
    m = grid.m
    t = grid.t_array
    w = grid.omega * t**j
    x = np.asarray(x, dtype=float)
    b = params.b
    ein = np.exp(-np.multiply.outer(x - params.x1, t[:m]) / b)
    eout = np.exp(-np.multiply.outer(params.x2 - x, t[m:]) / b)
    T = ein @ w[:m]
    That = eout @ w[m:]
    if x.ndim == 0:
        return float(T), float(That)
    return T, That


def _logsumexp_rows(terms):
    top = terms.max(axis=1)
    return top + np.log(np.exp(terms - top[:, None]).sum(axis=1))


def log_denominators(x, grid: ObservableGrid, params: ModelParams):
    """Return ``(ln(1 + T0(x) + That0(x2)), ln(1 - That0(x) + That0(x2)))``.

    Summation by parts with ``omega_l = exp(s_l) - exp(s_{l+1})`` writes each
    denominator as ``sum_k exp(s_k) (c_k - c_{k-1})`` with nondecreasing
    ``c``, a sum of nonnegative terms, so both are positive. The direct form
    ``log1p(sum_l omega_l c_l)`` is used where it loses at most two bits;
    elsewhere, typically when some ``u_l`` are large and negative, the
    nonnegative sum is evaluated in log space.
    """
    m = grid.m
    t = grid.t_array
    s = grid.suffix_sums
    w = grid.omega
    x = np.asarray(x, dtype=float)
    xs = np.atleast_1d(x)
    b = params.b
    d_in = (xs - params.x1)[:, None] / b
    d_out = (params.x2 - xs)[:, None] / b
    c_in = np.exp(-t[:m] * d_in)
    c_out = -np.expm1(-t[m:] * d_out)
    parts_in = np.concatenate([w[:m] * c_in, np.broadcast_to(w[m:], (xs.size, m))], axis=1)
    parts_out = w[m:] * c_out
    sum_in, sum_out = parts_in.sum(axis=1), parts_out.sum(axis=1)
    good_in = 1.0 + sum_in > 0.25 * (1.0 + np.abs(parts_in).sum(axis=1))
    good_out = 1.0 + sum_out > 0.25 * (1.0 + np.abs(parts_out).sum(axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_in = np.log1p(sum_in)
        log_out = np.log1p(sum_out)
        if not np.all(good_in):
            d = d_in[~good_in]
            terms = np.full((d.shape[0], 2 * m + 1), -np.inf)
            terms[:, 0] = -t[0] * d[:, 0]
            terms[:, 1:m] = -t[1:m] * d + np.log(-np.expm1(-(t[: m - 1] - t[1:m]) * d))
            terms[:, m] = np.log(-np.expm1(-t[m - 1] * d[:, 0]))
            log_in[~good_in] = _logsumexp_rows(terms + s)
        if not np.all(good_out):
            d = d_out[~good_out]
            terms = np.full((d.shape[0], 2 * m + 1), -np.inf)
            terms[:, m] = np.log(-np.expm1(-t[m] * d[:, 0]))
            terms[:, m + 1:2 * m] = (-t[m:2 * m - 1] * d
                                     + np.log(-np.expm1(-(t[m + 1:] - t[m:2 * m - 1]) * d)))
            terms[:, 2 * m] = -t[2 * m - 1] * d[:, 0]
            log_out[~good_out] = _logsumexp_rows(terms + s)
    if x.ndim == 0:
        return float(log_in[0]), float(log_out[0])
    return log_in, log_out


def f_funcs(x, grid: ObservableGrid, params: ModelParams):
    """Return ``(f(x), fhat(x))`` for ``x`` strictly between the wall values.

    Raises
    ------
    DomainError
        If ``x`` is within ``1e-12`` of ``x1`` or ``x2``.
    """
    x = np.asarray(x, dtype=float)
    x1, x2, b, a = params.x1, params.x2, params.b, params.alpha
    if np.any(x - x1 < _ENDPOINT_GAP) or np.any(x2 - x < _ENDPOINT_GAP):
        raise DomainError("f_funcs needs x strictly inside (x1, x2)")
    T1, H1 = T_funcs(x, grid, params, 1)
    T2, H2 = T_funcs(x, grid, params, 2)
    log_in, log_out = log_denominators(x, grid, params)
    f = (-(x1 / (x - x1) + a / b) * T1 - x / (2.0 * b) * T2) / np.exp(log_in)
    fh = ((x2 / (x2 - x) - a / b) * H1 + x / (2.0 * b) * H2) / np.exp(log_out)
    if x.ndim == 0:
        return float(f), float(fh)
    return f, fh


def log_Q(grid: ObservableGrid, params: ModelParams, eq: EquilibriumData | None = None) -> float:
    """``ln Q`` with ``Q = (1 + T0(s) + That0(x2)) / (1 - That0(s) + That0(x2))``, ``s = sigma_star``."""
    eq = eq or equilibrium(params)
    log_in, log_out = log_denominators(eq.sigma_star, grid, params)
    return log_in - log_out


def mathsf_Q(grid: ObservableGrid, params: ModelParams, eq: EquilibriumData | None = None) -> float:
    """The positive ratio ``Q``; see :func:`log_Q`."""
    return math.exp(log_Q(grid, params, eq))


def radii(grid: ObservableGrid, params: ModelParams, n: int) -> np.ndarray:
    """Radii ``r_l = rho1 (1 - t_l/n)**(1/2b)`` (inner) and ``rho2 (1 + t_l/n)**(1/2b)`` (outer)."""
    t = grid.t_array
    if not n > np.max(t[: grid.m], initial=0.0):
        raise DomainError(f"n = {n} must exceed every inner t_l")
    e = 1.0 / (2.0 * params.b)
    inner = params.rho1 * (1.0 - t[: grid.m] / n) ** e
    outer = params.rho2 * (1.0 + t[grid.m:] / n) ** e
    return np.concatenate([inner, outer])
