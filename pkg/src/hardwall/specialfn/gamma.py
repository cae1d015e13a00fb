"""Regularized incomplete gamma function P(a, z) = gamma(a, z) / Gamma(a).

The algorithm is picked from the shape parameter:

* ``a < A_MIN`` and ``z < a + 1``: power series for P,
* ``a < A_MIN`` and ``z >= a + 1``: Legendre continued fraction for Q = 1 - P,
* ``a >= A_MIN``: Temme's uniform expansion truncated after c2.

Every entry point can hand back both tails, so callers keep relative accuracy
in whichever of P, Q is small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special

from ..errors import DomainError, PrecisionError

__all__ = [
    "A_MIN",
    "GammaRegime",
    "TemmeDecomposition",
    "log_reg_inc_gamma_pq",
    "reg_inc_gamma",
    "reg_inc_gamma_pq",
    "reg_inc_gamma_temme",
    "reg_inc_gamma_tricomi",
    "temme_coefficients",
    "temme_eta",
]

# c2-truncated Temme error is ~ 0.4 * |c3| * a**-3.5 < 1e-13 from here on
A_MIN = 512.0

_MAX_ITER = 20000
_EPS = np.finfo(float).eps
_TINY = 1e-300

# |x| = |lambda - 1| below which x - log1p(x) is summed as a Taylor series
_XLOG_SERIES = 0.1
_XLOG_TERMS = 18

# |eta| below which c0, c1, c2 come from their Maclaurin series in eta
_ETA_SERIES = 0.5

# Maclaurin coefficients (ascending powers of eta), generated from the
# recursion c_j = (1/eta) dc_{j-1}/deta + gamma_j / (lambda - 1) in exact
# rational arithmetic.
_C0 = (
    -1 / 3, 1 / 12, -2 / 135, 1 / 864, 1 / 2835, -139 / 777600, 1 / 25515,
    -571 / 261273600, -281 / 151559100, 163879 / 197522841600,
    -5221 / 29554024500, 5246819 / 782190452736000, 5459 / 531972441000,
    -534703531 / 122021710626816000, 91207079 / 99704934754425000,
    -4483131259 / 175711263302615040000, -2650986803 / 45465450248017800000,
    432261921612371 / 17743323368298066739200000,
    -6171801683 / 1227567156696480600000,
)
_C1 = (
    -1 / 540, -1 / 288, 1 / 378, -77 / 77760, 1 / 4860, -1 / 2488320,
    -2743 / 151559100, 41969 / 5486745600, -11 / 6823440,
    47207 / 10158317568000, 3761 / 27280638000, -3599669 / 62575236218880,
    61903187 / 5179477130100000, -4193939 / 239062943268864000,
    -2570401 / 2547084047508000, 54310133948197 / 130465613002191667200000,
    -2459127719 / 28715021209274400000,
)
_C2 = (
    25 / 6048, -139 / 51840, 1 / 1296, 1 / 497664, -6199 / 57736800,
    5531 / 104509440, -1219 / 95528160, 19321 / 564350976000,
    121 / 88179840, -5118973 / 8126654054400, 834489499 / 5843512659600000,
    -12301049 / 60072226770124800, -1172077 / 83170091347200,
    108355589648549 / 17395415066958888960000,
    -4398301 / 3217369323168000,
)


@dataclass(frozen=True)
class GammaRegime:
    """Temme variables for a point (a, z): lam = z / a and the signed eta."""

    a: float
    lam: float
    eta: float

    @classmethod
    def from_az(cls, a: float, z: float) -> "GammaRegime":
        if not a > 0 or not z > 0:
            raise DomainError(f"need a > 0 and z > 0, got a={a}, z={z}")
        x = (z - a) / a
        return cls(a=float(a), lam=float(z / a), eta=float(temme_eta(1.0 + x, x=x)))


class TemmeDecomposition(NamedTuple):
    value: float
    erfc_part: float
    R_part: float
    temme: bool


def _poly(coeffs, x):
    acc = np.zeros_like(x)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _x_minus_log1p(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < _XLOG_SERIES
    xs = x[small]
    # sum_{k>=2} (-x)^k / k, Horner in x
    acc = np.zeros_like(xs)
    for k in range(_XLOG_TERMS, 1, -1):
        acc = acc * (-xs) + 1.0 / k
    out[small] = acc * xs * xs
    xl = x[~small]
    out[~small] = xl - np.log1p(xl)
    return out


def temme_eta(lam, x=None):
    """Signed Temme variable with eta**2 / 2 = lam - 1 - ln(lam).

    ``x = lam - 1`` may be passed separately when it is known more accurately
    than ``lam`` itself (for instance ``(z - a) / a``).
    """
    if x is None:
        x = np.asarray(lam, dtype=float) - 1.0
    x = np.asarray(x, dtype=float)
    if np.any(x <= -1.0):
        raise DomainError("temme_eta needs lam > 0")
    g = np.maximum(_x_minus_log1p(x), 0.0)
    eta = np.sign(x) * np.sqrt(2.0 * g)
    return eta if eta.ndim else float(eta)


def temme_coefficients(eta, x):
    """Return (c0, c1, c2) of the uniform expansion at eta, x = lam - 1."""
    eta = np.asarray(eta, dtype=float)
    x = np.asarray(x, dtype=float)
    eta, x = np.broadcast_arrays(eta, x)
    small = np.abs(eta) < _ETA_SERIES
    c0 = np.empty(eta.shape)
    c1 = np.empty(eta.shape)
    c2 = np.empty(eta.shape)
    es = eta[small]
    c0[small] = _poly(_C0, es)
    c1[small] = _poly(_C1, es)
    c2[small] = _poly(_C2, es)
    e = eta[~small]
    y = x[~small]
    c0[~small] = 1.0 / y - 1.0 / e
    c1[~small] = 1.0 / e**3 - 1.0 / y**3 - 1.0 / y**2 - 1.0 / (12.0 * y)
    c2[~small] = (
        -3.0 / e**5 + 3.0 / y**5 + 5.0 / y**4 + 25.0 / (12.0 * y**3)
        + 1.0 / (12.0 * y**2) + 1.0 / (288.0 * y)
    )
    return c0, c1, c2


def _temme(a, z):
    """Uniform expansion: ``(ln P, ln Q, erfc_part, R)``.

    The small tail is formed with the Gaussian factor pulled out,
    ``exp(-a eta**2 / 2) * (erfcx(|s|)/2 -+ Rtilde)``, so it never underflows
    before its logarithm is taken.
    """
    x = (z - a) / a
    eta = np.asarray(temme_eta(None, x=x), dtype=float)
    c0, c1, c2 = temme_coefficients(eta, x)
    s = eta * np.sqrt(a / 2.0)
    gauss = -0.5 * a * eta * eta
    rt = (c0 + (c1 + c2 / a) / a) / np.sqrt(2.0 * np.pi * a)
    lower = s < 0
    small = np.where(lower, 0.5 * special.erfcx(-s) - rt, 0.5 * special.erfcx(s) + rt)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_small = gauss + np.log(small)
    log_small = np.minimum(log_small, 0.0)
    log_big = np.log1p(-np.exp(log_small))
    log_p = np.where(lower, log_small, log_big)
    log_q = np.where(lower, log_big, log_small)
    return log_p, log_q, 0.5 * special.erfc(-s), np.exp(gauss) * rt


def _log_prefactor(a, z):
    return a * np.log(z) - z - special.gammaln(a)


def _series(a, z):
    """ln P(a, z) by its power series; meant for z < a + 1."""
    ap = a.copy()
    term = np.ones_like(a)
    total = np.ones_like(a)
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= z / ap
        total += term
        if np.all(term <= total * _EPS):
            break
    else:
        raise PrecisionError("incomplete gamma series did not converge")
    return _log_prefactor(a, z) - np.log(a) + np.log(total)


def _continued_fraction(a, z):
    """ln Q(a, z) by modified Lentz on the Legendre fraction; meant for z >= a + 1."""
    b = z + 1.0 - a
    c = np.full_like(a, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) <= 2.0 * _EPS):
            break
    else:
        raise PrecisionError("incomplete gamma continued fraction did not converge")
    return _log_prefactor(a, z) + np.log(h)


def _validate(a, z):
    a = np.asarray(a, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(~(a > 0)) or np.any(np.isinf(a)):
        raise DomainError("incomplete gamma needs finite a > 0")
    if np.any(~(z >= 0)):
        raise DomainError("incomplete gamma needs z >= 0")
    return np.broadcast_arrays(a, z)


def _log1mexp(x):
    # ln(1 - e^x) for x <= 0
    with np.errstate(divide="ignore"):
        return np.where(x > -math.log(2.0), np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def log_reg_inc_gamma_pq(a, z, method: str = "auto"):
    """Return ``(ln P(a, z), ln Q(a, z))``.

    Both logarithms are accurate far into the tails, where ``P`` or ``Q``
    underflows in double precision. See :func:`reg_inc_gamma_pq` for the
    meaning of ``method``.
    """
    if method not in ("auto", "direct", "temme"):
        raise ValueError(f"unknown method {method!r}")
    a, z = _validate(a, z)
    scalar = a.ndim == 0
    a = np.atleast_1d(a).astype(float)
    z = np.atleast_1d(z).astype(float)
    lp = np.empty(a.shape)
    lq = np.empty(a.shape)

    zero = z == 0.0
    inf = np.isinf(z)
    lp[zero], lq[zero] = -np.inf, 0.0
    lp[inf], lq[inf] = 0.0, -np.inf
    live = ~(zero | inf)

    if method == "auto":
        uniform = live & (a >= A_MIN)
    elif method == "temme":
        uniform = live
    else:
        uniform = np.zeros_like(live)
    if np.any(uniform):
        lp[uniform], lq[uniform], _, _ = _temme(a[uniform], z[uniform])

    direct = live & ~uniform
    lower = direct & (z < a + 1.0)
    upper = direct & ~lower
    if np.any(lower):
        lpl = np.minimum(_series(a[lower], z[lower]), 0.0)
        lp[lower] = lpl
        lq[lower] = _log1mexp(lpl)
    if np.any(upper):
        lqu = np.minimum(_continued_fraction(a[upper], z[upper]), 0.0)
        lq[upper] = lqu
        lp[upper] = _log1mexp(lqu)
    if scalar:
        return float(lp[0]), float(lq[0])
    return lp, lq


def reg_inc_gamma_pq(a, z, method: str = "auto"):
    """Return ``(P(a, z), Q(a, z))``, each accurate in its own small tail.

    Parameters
    ----------
    a : array_like
        Shape parameter, ``a > 0``.
    z : array_like
        Argument, ``z >= 0`` (``inf`` allowed).
    method : {"auto", "direct", "temme"}
        ``"auto"`` uses the uniform expansion for ``a >= A_MIN`` and the
        series / continued fraction below it. The other two force one path;
        they exist for cross-checking the regimes against each other.
    """
    lp, lq = log_reg_inc_gamma_pq(a, z, method)
    if isinstance(lp, float):
        return math.exp(lp), math.exp(lq)
    return np.exp(lp), np.exp(lq)


def reg_inc_gamma(a, z, method: str = "auto"):
    """Regularized lower incomplete gamma function ``P(a, z)``.

    >>> round(reg_inc_gamma(1.0, 1.0), 10)
    0.6321205588
    """
    return reg_inc_gamma_pq(a, z, method)[0]


def reg_inc_gamma_temme(a: float, lam: float, force: bool = False) -> TemmeDecomposition:
    """Split ``P(a, a*lam)`` as ``erfc(-eta*sqrt(a/2))/2 - R_a(eta)``.

    Below ``A_MIN`` the value comes from the direct algorithms (unless
    ``force``) and ``R_part`` is then the exact remainder
    ``erfc_part - value``; ``temme`` in the result tells which path ran.
    """
    if not a > 0 or not lam >= 0:
        raise DomainError(f"need a > 0 and lam >= 0, got a={a}, lam={lam}")
    z = a * lam
    if lam == 0.0:
        return TemmeDecomposition(0.0, 0.0, 0.0, a >= A_MIN or force)
    if a >= A_MIN or force:
        aa = np.array([a], dtype=float)
        lp, _, half, r = _temme(aa, np.array([z]))
        return TemmeDecomposition(float(np.exp(lp[0])), float(half[0]), float(r[0]), True)
    value = reg_inc_gamma(a, z, method="direct")
    eta = temme_eta(lam, x=(z - a) / a)
    half = 0.5 * math.erfc(-eta * math.sqrt(a / 2.0))
    return TemmeDecomposition(value, half, half - value, False)


# Singular parts of phi_j(lam) = (-1)^(j+1) (2j-1)!! / eta^(2j+1) at lam = 1,
# as polynomials in 1 / (lam - 1), lowest power first.
_SINGULAR_PARTS = (
    (-1.0,),
    (1.0 / 12.0, 1.0, 1.0),
    (-1.0 / 288.0, -1.0 / 12.0, -25.0 / 12.0, -5.0, -3.0),
)


def reg_inc_gamma_tricomi(a: float, lam: float, order: int = 2) -> float:
    """Tricomi form of ``P(a, a*lam)`` away from the transition ``lam = 1``.

    Valid for ``lam >= 1 + 1/sqrt(a)`` or ``lam <= 1 - 1/sqrt(a)``; the
    truncation error is O(a**-(order + 1/2)) relative to the prefactor.
    """
    if not 0 <= order <= len(_SINGULAR_PARTS):
        raise ValueError(f"order must be in [0, {len(_SINGULAR_PARTS)}]")
    x = lam - 1.0
    if abs(x) < 1.0 / math.sqrt(a):
        raise DomainError("Tricomi form needs |lam - 1| >= 1/sqrt(a)")
    eta = temme_eta(lam, x=x)
    total = 0.0
    for j in range(order):
        s = sum(c / x ** (k + 1) for k, c in enumerate(_SINGULAR_PARTS[j]))
        total += s / a ** (j + 0.5)
    tail = math.exp(-0.5 * a * eta * eta) / math.sqrt(2.0 * math.pi) * total
    return 1.0 + tail if x > 0 else tail
