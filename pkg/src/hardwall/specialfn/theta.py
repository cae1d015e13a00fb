"""Jacobi theta function on a purely imaginary period and the derived Weierstrass p.

The theta function used throughout is

    theta(z; tau) = sum_l exp(pi*i*l**2*tau + 2*pi*i*l*z),   tau = i*t,

so with ``q = exp(-pi*t)`` it reads ``1 + 2*sum_{l>=1} q**(l*l) cos(2*pi*l*z)``
on the real line. Three independent evaluators are offered: the Fourier
series (fast for large ``t``), its modular image (a Gaussian sum, fast for
small ``t``) and the Jacobi triple product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

__all__ = [
    "ThetaParams",
    "jacobi_theta",
    "jacobi_theta_modular",
    "jacobi_theta_product",
    "jacobi_theta_series",
    "log_jacobi_theta",
    "theta_log_derivatives",
    "weierstrass_c",
    "weierstrass_p",
]

_POLE_RADIUS = 1e-8


@dataclass(frozen=True)
class ThetaParams:
    """Modular parameter ``tau = i * tau_im`` and the series truncation tolerance.

    Attributes
    ----------
    tau_im : float
        Imaginary part of tau, strictly positive.
    truncation_tol : float
        Terms are summed until the next one drops below this size relative
        to the leading term.
    """

    tau_im: float
    truncation_tol: float = 1e-18

    def __post_init__(self):
        if not (math.isfinite(self.tau_im) and self.tau_im > 0):
            raise DomainError(f"tau_im must be finite and positive, got {self.tau_im}")
        if not (self.truncation_tol > 0):
            raise DomainError("truncation_tol must be positive")

    @classmethod
    def from_radii(cls, rho1: float, rho2: float, truncation_tol: float = 1e-18) -> "ThetaParams":
        """Parameters with ``tau = pi*i / ln(rho2/rho1)``."""
        if not 0 < rho1 < rho2:
            raise DomainError("need 0 < rho1 < rho2")
        return cls(math.pi / math.log(rho2 / rho1), truncation_tol)

    @property
    def tau(self) -> complex:
        return 1j * self.tau_im

    @property
    def nome(self) -> float:
        """``q = exp(-pi * tau_im)``."""
        return math.exp(-math.pi * self.tau_im)


def _n_terms(t, tol, shift=0.0):
    # smallest N with pi*t*N**2 - 2*pi*shift*N > -ln(tol)
    c = -math.log(tol) / math.pi
    return int(math.ceil((shift + math.sqrt(shift * shift + t * c)) / t)) + 1


def _series(z, t, tol):
    """theta, theta', theta'' by the Fourier series."""
    z = np.asarray(z)
    q = math.exp(-math.pi * t)
    if np.isrealobj(z):
        n = _n_terms(t, tol)
        ell = np.arange(1, n + 1, dtype=float)
        w = 2.0 * np.exp(-math.pi * t * ell * ell) if q > 0 else np.zeros(n)
        arg = 2.0 * math.pi * np.multiply.outer(z.astype(float), ell)
        cos, sin = np.cos(arg), np.sin(arg)
        s0 = (cos * w).sum(axis=-1)
        s1 = -(sin * (w * 2.0 * math.pi * ell)).sum(axis=-1)
        s2 = -(cos * (w * (2.0 * math.pi * ell) ** 2)).sum(axis=-1)
        return s0, s1, s2, True
    shift = float(np.max(np.abs(z.imag))) if z.size else 0.0
    n = _n_terms(t, tol, shift)
    ell = np.arange(-n, n + 1, dtype=float)
    e = np.exp(2j * math.pi * np.multiply.outer(z, ell) - math.pi * t * ell * ell)
    k = 2j * math.pi * ell
    th = e.sum(axis=-1)
    return th - 1.0, (e * k).sum(axis=-1), (e * k * k).sum(axis=-1), False


def _modular(z, t, tol):
    """theta, theta', theta'' by the Gaussian sum t**-1/2 sum_k exp(-pi (z-k)**2 / t)."""
    z = np.asarray(z)
    real = np.isrealobj(z)
    shift = np.floor(z.real)
    zr = z - shift
    imag = 0.0 if real else float(np.max(np.abs(zr.imag))) if zr.size else 0.0
    half_width = math.sqrt(t * (-math.log(tol) / math.pi + imag * imag / t)) + 2.0
    k = np.arange(-math.ceil(half_width), math.ceil(half_width) + 2, dtype=float)
    d = np.subtract.outer(zr, k)
    g = np.exp(-math.pi * d * d / t) / math.sqrt(t)
    g1 = -2.0 * math.pi * d / t * g
    g2 = ((2.0 * math.pi * d / t) ** 2 - 2.0 * math.pi / t) * g
    th = g.sum(axis=-1)
    return th, g1.sum(axis=-1), g2.sum(axis=-1)


def _scalar_out(x):
    x = np.asarray(x)
    return x if x.ndim else x[()]


def jacobi_theta_series(z, params: ThetaParams):
    """``theta(z; tau)`` by the Fourier series (complex ``z`` allowed)."""
    s0, _, _, _ = _series(z, params.tau_im, params.truncation_tol)
    return _scalar_out(1.0 + s0)


def jacobi_theta_modular(z, params: ThetaParams):
    """``theta(z; tau)`` through the modular transform ``tau -> -1/tau``.

    The Gaussian sum converges fastest when ``tau_im`` is small, the regime
    where the Fourier series is slow.
    """
    th, _, _ = _modular(z, params.tau_im, params.truncation_tol)
    return _scalar_out(th)


def jacobi_theta_product(z, params: ThetaParams):
    """``theta(z; tau)`` by the Jacobi triple product, for real ``z``."""
    z = np.asarray(z, dtype=float)
    q = params.nome
    c = np.cos(2.0 * math.pi * z)
    out = np.ones_like(z)
    m = 1
    while True:
        q2m = q ** (2 * m)
        q2m1 = q ** (2 * m - 1)
        out = out * (1.0 - q2m) * (1.0 + 2.0 * q2m1 * c + q2m1 * q2m1)
        if q2m1 < params.truncation_tol or m > 100000:
            break
        m += 1
    return _scalar_out(out)


def _use_series(params):
    return params.tau_im >= 1.0


def jacobi_theta(z, params: ThetaParams):
    """Evaluate ``theta(z; i*tau_im)``.

    The Fourier series is used for ``tau_im >= 1`` and the modular form
    below that. For real ``z`` the value is real and positive.

    Parameters
    ----------
    z : float, complex or array_like
    params : ThetaParams

    Returns
    -------
    float, complex or ndarray
    """
    if _use_series(params):
        return jacobi_theta_series(z, params)
    return jacobi_theta_modular(z, params)


def theta_log_derivatives(z, params: ThetaParams):
    """Return ``(ln theta, (ln theta)', (ln theta)'')`` at ``z``.

    On the series path ``ln theta`` is formed with ``log1p``, so it keeps
    full relative accuracy even when the oscillation is of size ``q``.
    """
    if _use_series(params):
        s0, s1, s2, _ = _series(z, params.tau_im, params.truncation_tol)
        th = 1.0 + s0
        log_th = np.log1p(s0) if np.isrealobj(s0) else np.log(th)
    else:
        th, s1, s2 = _modular(z, params.tau_im, params.truncation_tol)
        log_th = np.log(th)
    d1 = s1 / th
    d2 = s2 / th - d1 * d1
    return _scalar_out(log_th), _scalar_out(d1), _scalar_out(d2)


def log_jacobi_theta(z, params: ThetaParams):
    """``ln theta(z; tau)``; see :func:`theta_log_derivatives`."""
    return theta_log_derivatives(z, params)[0]


def _theta1_derivs_at_zero(t, tol):
    # theta1'(0) and theta1'''(0) from theta1 = 2 sum (-1)^n q^((n+1/2)^2) sin((2n+1) pi z)
    n = _n_terms(t, tol) + 1
    k = np.arange(n, dtype=float)
    w = 2.0 * (-1.0) ** k * np.exp(-math.pi * t * (k + 0.5) ** 2)
    f = (2.0 * k + 1.0) * math.pi
    return float((w * f).sum()), float(-(w * f**3).sum())


def weierstrass_c(params: ThetaParams) -> float:
    """The constant ``c = theta1'''(0) / (3 theta1'(0))`` for the lattice (1, tau).

    For ``tau_im < 1`` it is obtained from the value at ``i/tau_im`` through
    ``c(i t) = -c(i/t) / t**2 - 2 pi / t``.
    """
    t = params.tau_im
    if t < 1.0:
        inv = weierstrass_c(ThetaParams(1.0 / t, params.truncation_tol))
        return -inv / (t * t) - 2.0 * math.pi / t
    d1, d3 = _theta1_derivs_at_zero(t, params.truncation_tol)
    return d3 / (3.0 * d1)


def _wp_core(z, t, tol, c):
    # reduce to |Re z| <= 1/2, |Im z| <= t/2 (p is periodic in 1 and tau)
    z = np.asarray(z, dtype=complex)
    z = z - 1j * t * np.round(z.imag / t)
    z = z - np.round(z.real)
    if np.any(np.abs(z) < _POLE_RADIUS):
        raise DomainError("weierstrass_p evaluated at a lattice point")
    # theta1 terms decay like exp(-pi t (n+1/2)(n-1/2)) on the reduced cell
    n = int(math.ceil(math.sqrt(-math.log(tol) / (math.pi * t) + 0.25))) + 2
    k = np.arange(n, dtype=float)
    w = 2.0 * (-1.0) ** k * np.exp(-math.pi * t * (k + 0.5) ** 2)
    f = (2.0 * k + 1.0) * math.pi
    arg = np.multiply.outer(z, f)
    s, co = np.sin(arg), np.cos(arg)
    th = (w * s).sum(axis=-1)
    th1 = (w * f * co).sum(axis=-1)
    th2 = -(w * f * f * s).sum(axis=-1)
    d1 = th1 / th
    return c - (th2 / th - d1 * d1)


def weierstrass_p(z, params: ThetaParams):
    """Weierstrass ``p(z)`` for the lattice generated by 1 and ``tau``.

    Evaluated as ``c - (ln theta1)''(z)``. Real ``z`` gives a real result;
    complex input gives a complex result (real on the line ``Im z = tau_im/2``).
    For ``tau_im < 1`` the lattice is rescaled by ``tau`` first.

    Raises
    ------
    DomainError
        Within ``1e-8`` of a lattice point.
    """
    real_in = np.isrealobj(np.asarray(z))
    t = params.tau_im
    if t < 1.0:
        # p(z; 1, i t) = -p(-i z / t; 1, i / t) / t**2
        swapped = ThetaParams(1.0 / t, params.truncation_tol)
        zz = -1j * np.asarray(z, dtype=complex) / t
        out = -_wp_core(zz, 1.0 / t, params.truncation_tol, weierstrass_c(swapped)) / (t * t)
    else:
        out = _wp_core(z, t, params.truncation_tol, weierstrass_c(params))
    if real_in:
        out = out.real
    return _scalar_out(out)
