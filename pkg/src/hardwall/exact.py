"""Exact finite-n counting statistics.

Because the ensemble is rotation invariant the moduli of the n points are
independent: mode ``j`` has squared-modulus law proportional to
``v**(a_j - 1) exp(-v)`` on ``v = n|z|**(2b)`` restricted to
``[0, n rho1**(2b)] U [n rho2**(2b), inf)``, with ``a_j = (j + alpha) / b``.
Every quantity below is a finite sum over these n modes of regularized
incomplete gamma functions.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import PrecisionError
from .model import EquilibriumData, ModelParams, ObservableGrid, equilibrium
from .specialfn import log_reg_inc_gamma_pq

__all__ = [
    "CountingDistribution",
    "DiscreteGaussian",
    "ModeProbabilities",
    "counting_pmf",
    "discrete_gaussian_pmf",
    "exact_moments",
    "log_mgf_exact",
    "log_mgf_mixture",
    "mode_probabilities",
    "total_variation",
]

_CHUNK = 4096
_TRIM = 1e-18


@dataclass(frozen=True)
class ModeProbabilities:
    """Per-mode inclusion probabilities.

    Attributes
    ----------
    n : int
    p : ndarray, shape (n, 2m)
        ``p[j-1, l-1] = P(|z_j| < r_l)``.
    q : ndarray, shape (n, 2m)
        The complements ``1 - p``, computed from the small tails directly.
    log_band : ndarray, shape (n, 2m + 1)
        Log-probability that mode ``j`` falls in ``[r_{k-1}, r_k)`` with
        ``r_0 = 0`` and ``r_{2m+1} = inf``.
    log_denom : ndarray, shape (n,)
        ``ln D_j`` with ``D_j = Q(a_j, n rho2**(2b)) + P(a_j, n rho1**(2b))``.
    """

    n: int
    p: np.ndarray
    q: np.ndarray
    log_band: np.ndarray
    log_denom: np.ndarray


@dataclass(frozen=True)
class CountingDistribution:
    """Law of a single counting variable ``N(r_l)`` as a Poisson binomial.

    ``pmf[k]`` is ``P(N = offset + k)``; modes that are certain to be inside
    contribute to ``offset`` and those certain to be outside are dropped.
    """

    pmf: np.ndarray
    offset: int
    mean: float
    variance: float

    @property
    def support(self) -> np.ndarray:
        return self.offset + np.arange(self.pmf.size)

    def full_pmf(self, n: int) -> np.ndarray:
        """The pmf padded to the full support ``0..n``."""
        out = np.zeros(n + 1)
        out[self.offset:self.offset + self.pmf.size] = self.pmf
        return out


@dataclass(frozen=True)
class DiscreteGaussian:
    """The law ``P(X = x)`` proportional to ``(rho1/rho2)**((x - frac)**2)`` on a window."""

    x: np.ndarray
    pmf: np.ndarray
    Lambda: float
    frac: float

    @property
    def floor(self) -> int:
        return int(math.floor(self.Lambda))


def scaled_wall_points(params: ModelParams, grid: ObservableGrid, n: int) -> np.ndarray:
    """``n r_l**(2b)`` for l = 1..2m followed by ``n rho1**(2b)`` and ``n rho2**(2b)``."""
    t = grid.t_array
    p1 = params.rho1 ** (2.0 * params.b)
    p2 = params.rho2 ** (2.0 * params.b)
    if np.any(t[: grid.m] >= n):
        raise PrecisionError(f"n = {n} must exceed every inner t_l")
    inner = p1 * (n - t[: grid.m])
    outer = p2 * (n + t[grid.m:])
    return np.concatenate([inner, outer, [p1 * n, p2 * n]])


def _log_diff(big, small):
    """``ln(e**big - e**small)``, or ``-inf`` when rounding has put ``big <= small``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        d = small - big
        out = big + np.where(d > -math.log(2.0), np.log(-np.expm1(d)), np.log1p(-np.exp(d)))
    out = np.where(big <= small, -np.inf, out)
    return np.where(np.isneginf(small), big, out)


def _log_interval(lp, lq, lo, hi):
    """``ln(P(z_hi) - P(z_lo))`` taken from whichever tail is small."""
    use_p = lp[:, hi] <= -math.log(2.0)
    return np.where(use_p, _log_diff(lp[:, hi], lp[:, lo]), _log_diff(lq[:, lo], lq[:, hi]))


def _chunk_probabilities(a, z, m):
    lp = np.empty((a.size, z.size))
    lq = np.empty((a.size, z.size))
    for i, zi in enumerate(z):
        lp[:, i], lq[:, i] = log_reg_inc_gamma_pq(a, np.full(a.shape, zi))
    w1, w2 = 2 * m, 2 * m + 1
    log_denom = np.logaddexp(lq[:, w2], lp[:, w1])
    if np.any(~np.isfinite(log_denom)):
        raise PrecisionError("mode normalization lost positivity")
    ld = log_denom[:, None]
    log_band = np.empty((a.size, 2 * m + 1))
    log_band[:, 0] = lp[:, 0]
    for k in range(1, m):
        log_band[:, k] = _log_interval(lp, lq, k - 1, k)
    log_band[:, m] = np.logaddexp(_log_interval(lp, lq, m - 1, w1), _log_interval(lp, lq, w2, m))
    for k in range(m + 1, 2 * m):
        log_band[:, k] = _log_interval(lp, lq, k - 1, k)
    log_band[:, 2 * m] = lq[:, 2 * m - 1]
    log_band -= ld
    # inner: p = P(z_l)/D, 1 - p = (Q(z2) + P(z1) - P(z_l))/D
    # outer: p = (P(z1) + P(z_l) - P(z2))/D, 1 - p = Q(z_l)/D
    log_p = np.empty((a.size, 2 * m))
    log_q = np.empty((a.size, 2 * m))
    for k in range(m):
        log_p[:, k] = lp[:, k]
        log_q[:, k] = np.logaddexp(lq[:, w2], _log_interval(lp, lq, k, w1))
    for k in range(m, 2 * m):
        log_p[:, k] = np.logaddexp(lp[:, w1], _log_interval(lp, lq, w2, k))
        log_q[:, k] = lq[:, k]
    p = np.exp(log_p - ld)
    q = np.exp(log_q - ld)
    return np.clip(p, 0.0, 1.0), np.clip(q, 0.0, 1.0), log_band, log_denom


def mode_probabilities(params: ModelParams, grid: ObservableGrid, n: int,
                       threads: int = 1) -> ModeProbabilities:
    """Inclusion probabilities ``P(|z_j| < r_l)`` for every mode and radius.

    Parameters
    ----------
    params : ModelParams
    grid : ObservableGrid
        Only ``t`` (and ``m``) matter here.
    n : int
        Number of points, ``n >= 1``.
    threads : int
        Modes are split into fixed chunks and evaluated on this many worker
        threads; the result does not depend on the thread count.

    Raises
    ------
    PrecisionError
        If a normalization ``D_j`` is not positive.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError(f"n must be a positive integer, got {n!r}")
    z = scaled_wall_points(params, grid, n)
    a = (np.arange(1, n + 1, dtype=float) + params.alpha) / params.b
    chunks = [a[i:i + _CHUNK] for i in range(0, n, _CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _chunk_probabilities(c, z, grid.m), chunks))
    else:
        parts = [_chunk_probabilities(c, z, grid.m) for c in chunks]
    p, q, log_band, log_denom = (np.concatenate([part[i] for part in parts]) for i in range(4))
    return ModeProbabilities(int(n), p, q, log_band, log_denom)


def _log_terms(mp: ModeProbabilities, grid: ObservableGrid) -> np.ndarray:
    s = mp.p @ grid.omega
    if np.any(~(s > -1.0)):
        raise PrecisionError("non-positive argument in the exact log-MGF")
    return np.log1p(s)


def log_mgf_exact(params: ModelParams, grid: ObservableGrid, n: int,
                  mp: ModeProbabilities | None = None, threads: int = 1) -> float:
    """``ln E[exp(sum_l u_l N(r_l))]`` at finite ``n``.

    Evaluated as ``sum_j ln(1 + sum_l omega_l p[j, l])`` with exactly
    rounded summation over modes.

    >>> p = ModelParams.scaled_reference()
    >>> log_mgf_exact(p, ObservableGrid.single(), 10)
    0.0
    """
    mp = mp or mode_probabilities(params, grid, n, threads)
    return math.fsum(_log_terms(mp, grid))


def log_mgf_mixture(params: ModelParams, grid: ObservableGrid, n: int,
                    mp: ModeProbabilities | None = None, threads: int = 1) -> float:
    """The same log-MGF assembled mode by mode as ``ln sum_k band_k exp(s_k)``.

    ``s_k = u_k + ... + u_{2m}`` is the exponent picked up by a point in band
    ``k``. This path shares no arithmetic with :func:`log_mgf_exact` beyond
    the incomplete gamma values.
    """
    mp = mp or mode_probabilities(params, grid, n, threads)
    terms = special.logsumexp(mp.log_band + grid.suffix_sums, axis=1)
    return math.fsum(terms)


def exact_moments(mp: ModeProbabilities, grid: ObservableGrid | None = None):
    """Means and covariance matrix of ``N(r_1), ..., N(r_2m)``.

    The events ``{|z_j| < r_l}`` are nested in ``l``, so for ``l <= k`` the
    covariance is ``sum_j p[j, l] (1 - p[j, k])``.

    Returns
    -------
    mean : ndarray, shape (2m,)
    cov : ndarray, shape (2m, 2m)
    """
    p = mp.p
    k = p.shape[1]
    mean = np.array([math.fsum(p[:, i]) for i in range(k)])
    tail = mp.q
    cov = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            cov[i, j] = cov[j, i] = math.fsum(p[:, i] * tail[:, j])
    return mean, cov


def counting_pmf(mp: ModeProbabilities, column: int) -> CountingDistribution:
    """Exact law of ``N(r_column)`` (1-based column) by dynamic programming.

    Modes with inclusion probability within 1e-18 of 0 or 1 are treated as
    deterministic; the rest are convolved one by one in probability space.
    """
    if not 1 <= column <= mp.p.shape[1]:
        raise ValueError(f"column must lie in 1..{mp.p.shape[1]}")
    p = mp.p[:, column - 1]
    q = mp.q[:, column - 1]
    sure = q < _TRIM
    live = ~sure & (p >= _TRIM)
    offset = int(np.count_nonzero(sure))
    pl, ql = p[live], q[live]
    pmf = np.zeros(pl.size + 1)
    pmf[0] = 1.0
    for i, (pi, qi) in enumerate(zip(pl, ql)):
        pmf[1:i + 2] = pmf[1:i + 2] * qi + pmf[0:i + 1] * pi
        pmf[0] *= qi
    total = pmf.sum()
    if abs(total - 1.0) > 1e-10:
        raise PrecisionError(f"Poisson-binomial pmf sums to {total!r}")
    mean = offset + math.fsum(pl)
    variance = math.fsum(pl * ql)
    return CountingDistribution(pmf / total, offset, mean, variance)


def lambda_n(params: ModelParams, n: int, eq: EquilibriumData | None = None) -> float:
    """Centering ``sigma_star n - 1/2 - alpha + ln(sigma2/sigma1) / (2L)``."""
    eq = eq or equilibrium(params)
    return (eq.sigma_star * n - 0.5 - params.alpha
            + math.log(eq.sigma2 / eq.sigma1) / (2.0 * params.log_ratio))


def discrete_gaussian_pmf(params: ModelParams, n: int,
                          eq: EquilibriumData | None = None) -> DiscreteGaussian:
    """Discrete Gaussian law centred at the fractional part of ``Lambda_n``.

    The window ``|x| <= K`` with ``K = ceil(sqrt(12 ln 10 / L)) + 2`` leaves
    less than 1e-12 of mass outside.
    """
    L = params.log_ratio
    lam = lambda_n(params, n, eq)
    frac = lam - math.floor(lam)
    K = math.ceil(math.sqrt(12.0 * math.log(10.0) / L)) + 2
    x = np.arange(-K, K + 1)
    logw = -L * (x - frac) ** 2
    w = np.exp(logw - logw.max())
    return DiscreteGaussian(x, w / w.sum(), lam, frac)


def total_variation(dist: CountingDistribution, dg: DiscreteGaussian) -> float:
    """Total variation distance between ``N(rho1)`` and ``floor(Lambda_n) + X``."""
    a = dict(zip(dist.support.tolist(), dist.pmf.tolist()))
    b = dict(zip((dg.floor + dg.x).tolist(), dg.pmf.tolist()))
    keys = set(a) | set(b)
    return 0.5 * math.fsum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)
