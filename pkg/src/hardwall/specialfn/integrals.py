"""Regularized integrals of the inverse scaled complementary error function.

With ``h(y) = 1 / (sqrt(pi) * erfcx(y))`` (so ``h(y) ~ y`` as ``y -> +inf`` and
``h(y) -> 0`` like a Gaussian as ``y -> -inf``) the constants are

    I  = int  y h(y)     - [y > 0] (y**2 + 1/2)               dy
    I1 = int  h(y)       - [y > 0] (y + y / (2 (1 + y**2)))   dy
    I2 = int  y**3 h(y)  - [y > 0] (y**4 + y**2/2 - 1/2)      dy
    I3 = int  h(y)**2    - [y > 0] (y**2 + 1)                 dy
    I4 = int  (y h(y))**2 - [y > 0] (y**4 + y**2 - 3/4)       dy

each over the real line. The finite part is done by adaptive quadrature on
``[-12, 0]`` and ``[0, Y_SPLIT]``; the piece beyond ``Y_SPLIT`` is integrated
term by term from the asymptotic expansion of ``erfcx``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

from scipy import integrate, special

from ..errors import QuadratureError

__all__ = ["ErfcIntegralConstants", "erfc_integral_constants"]

Y_LOW = -12.0
Y_SPLIT = 10.0
_TAIL_TERMS = 30
_QUAD_TOL = 1e-13


class ErfcIntegralConstants(NamedTuple):
    I: float
    I1: float
    I2: float
    I3: float
    I4: float


def _h(y):
    return 1.0 / (math.sqrt(math.pi) * special.erfcx(y))


# (power p of y, subtracted polynomial {power: coeff}, integrand in terms of h)
_SPECS = {
    "I": (1, 1, {2: Fraction(1), 0: Fraction(1, 2)}),
    "I2": (3, 1, {4: Fraction(1), 2: Fraction(1, 2), 0: Fraction(-1, 2)}),
    "I3": (0, 2, {2: Fraction(1), 0: Fraction(1)}),
    "I4": (2, 2, {4: Fraction(1), 2: Fraction(1), 0: Fraction(-3, 4)}),
}


def _series_mul(a, b, n):
    out = [Fraction(0)] * n
    for i, ai in enumerate(a[:n]):
        if ai:
            for j in range(n - i):
                out[i + j] += ai * b[j]
    return out


@lru_cache(maxsize=None)
def _g_series(n):
    """Coefficients g_k with h(y) ~ y * sum_k g_k y**(-2k) as y -> inf."""
    # sqrt(pi) y erfcx(y) ~ sum_k (-1)^k (2k-1)!! / 2^k * y^(-2k)
    s = [Fraction((-1) ** k * math.prod(range(1, 2 * k, 2)), 2**k) for k in range(n)]
    g = [Fraction(0)] * n
    g[0] = 1 / s[0]
    for k in range(1, n):
        g[k] = -sum(s[i] * g[k - i] for i in range(1, k + 1)) / s[0]
    return tuple(g)


def _tail(power, h_exp, poly, y0, n=_TAIL_TERMS):
    """int_{y0}^inf y**power h**h_exp - poly(y) dy from the asymptotic series."""
    g = list(_g_series(n))
    series = g if h_exp == 1 else _series_mul(g, g, n)
    top = power + h_exp  # leading power of y in the integrand
    coeffs = {top - 2 * k: c for k, c in enumerate(series)}
    for p, c in poly.items():
        coeffs[p] = coeffs.get(p, Fraction(0)) - c
    total = 0.0
    for p, c in coeffs.items():
        if c == 0:
            continue
        if p >= -1:
            raise ArithmeticError(f"non-integrable y**{p} term left in the tail")
        total += float(c) * y0 ** (p + 1) / (-(p + 1))
    return total


def _tail_i1(y0, n=_TAIL_TERMS):
    # h - y - y/(2(1+y^2)); the last piece is sum_k (-1)^k / 2 * y^(-1-2k)
    g = _g_series(n)
    coeffs = {1 - 2 * k: c for k, c in enumerate(g)}
    coeffs[1] -= 1
    for k in range(n):
        coeffs[-1 - 2 * k] = coeffs.get(-1 - 2 * k, Fraction(0)) - Fraction((-1) ** k, 2)
    total = 0.0
    for p, c in coeffs.items():
        if c == 0:
            continue
        if p >= -1:
            raise ArithmeticError(f"non-integrable y**{p} term left in the tail")
        total += float(c) * y0 ** (p + 1) / (-(p + 1))
    return total


def _quad(f, a, b):
    val, err = integrate.quad(f, a, b, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=400)
    if not err < 1e-10:
        raise QuadratureError(f"quadrature error estimate {err:.2e} on [{a}, {b}]")
    return val


def _constant(neg, pos, tail):
    return _quad(neg, Y_LOW, 0.0) + _quad(pos, 0.0, Y_SPLIT) + tail


@lru_cache(maxsize=1)
def erfc_integral_constants() -> ErfcIntegralConstants:
    """Return ``(I, I1, I2, I3, I4)`` to about ``1e-12`` absolute.

    The result is computed once and cached; it is an immutable tuple.

    Raises
    ------
    QuadratureError
        If an adaptive quadrature does not meet its error target.
    """
    vals = {}
    for name, (p, e, poly) in _SPECS.items():
        def raw(y, p=p, e=e):
            return y**p * _h(y) ** e

        def reg(y, p=p, e=e, poly=poly):
            return y**p * _h(y) ** e - sum(float(c) * y**k for k, c in poly.items())

        vals[name] = _constant(raw, reg, _tail(p, e, poly, Y_SPLIT))
    vals["I1"] = _constant(
        _h,
        lambda y: _h(y) - y - y / (2.0 * (1.0 + y * y)),
        _tail_i1(Y_SPLIT),
    )
    return ErfcIntegralConstants(**{k: vals[k] for k in ErfcIntegralConstants._fields})
