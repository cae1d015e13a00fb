"""Exact Monte Carlo sampling of the hard-wall ensemble.

The moduli ``R_1, ..., R_n`` are independent: after the substitution
``v = n R**(2b)`` the variable ``V_j`` is a Gamma(``a_j``) variable with
``a_j = (j + alpha) / b`` conditioned on ``[0, n rho1**(2b)]`` or
``[n rho2**(2b), inf)``. Angles are iid uniform.

Streams
-------
Every random quantity comes from ``PCG64(SeedSequence(seed, spawn_key=key))``
with a fixed key per purpose and per chunk of samples, so results depend only
on the seed and never on the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import PrecisionError
from .exact import mode_probabilities, scaled_wall_points
from .model import ModelParams, ObservableGrid
from .specialfn import log_reg_inc_gamma_pq

__all__ = [
    "SampleBatch",
    "export_point_cloud",
    "sample_counts",
    "sample_moduli",
]

_CHUNK = 2048
_MODULI_CHUNK = 256
_MAX_ITER = 200
_Y_TOL = 1e-14
# modes whose inclusion probabilities are all within this of 0 or 1 are fixed
_SURE = 2.0**-60

_KEY_MODULI = 0
_KEY_ANGLES = 1
_KEY_COUNTS = 2


@dataclass(frozen=True)
class SampleBatch:
    """Counts ``N(r_1), ..., N(r_2m)`` for independent draws of the ensemble.

    Attributes
    ----------
    n, num_samples, seed : int
    counts : ndarray of int64, shape (num_samples, 2m)
        Nondecreasing along each row.
    points : ndarray, shape (n, 2), optional
        One point cloud, kept only when requested.
    """

    n: int
    num_samples: int
    seed: int
    counts: np.ndarray
    points: np.ndarray | None = field(default=None)


def _generator(seed, *key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _check_seed(seed):
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def _invert_lower(a, log_target, z_hi):
    """Solve ``ln P(a, v) = log_target`` on ``(0, z_hi]`` by safeguarded Newton in ``ln v``."""
    lga = special.gammaln(a)
    hi = np.log(z_hi)
    # P(a, v) <= v**a / Gamma(a + 1), so this end has ln P below the target
    lo = np.minimum((log_target + special.gammaln(a + 1.0)) / a - 1.0, hi)
    y = hi.copy()
    return _newton(a, lga, log_target, y, lo, hi, lower=True)


def _invert_upper(a, log_target, z_lo):
    """Solve ``ln Q(a, v) = log_target`` on ``[z_lo, inf)``."""
    lga = special.gammaln(a)
    lo = np.log(z_lo)
    hi = lo + 1.0
    for _ in range(_MAX_ITER):
        lq = log_reg_inc_gamma_pq(a, np.exp(hi))[1]
        short = lq > log_target
        if not np.any(short):
            break
        hi = np.where(short, hi + (hi - lo), hi)
    else:
        raise PrecisionError("could not bracket the upper-tail inverse")
    y = lo.copy()
    return _newton(a, lga, log_target, y, lo, hi, lower=False)


def _newton(a, lga, log_target, y, lo, hi, lower):
    lo, hi, y = lo.copy(), hi.copy(), y.copy()
    active = np.ones(y.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return np.exp(y)
        ya = y[idx]
        v = np.exp(ya)
        lp, lq = log_reg_inc_gamma_pq(a[idx], v)
        lv = lp if lower else lq
        g = lv - log_target[idx]
        # d ln P / d ln v = v**a e**-v / (Gamma(a) P)
        slope = np.exp(a[idx] * ya - v - lga[idx] - lv)
        if lower:
            below = g < 0
        else:
            slope = -slope
            below = g > 0
        lo[idx] = np.where(below, ya, lo[idx])
        hi[idx] = np.where(below, hi[idx], ya)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            step = ya - g / slope
        bad = ~np.isfinite(step) | (step <= lo[idx]) | (step >= hi[idx])
        new = np.where(bad, 0.5 * (lo[idx] + hi[idx]), step)
        # an exact hit collapses the bracket onto ya, which would read as out of range
        new = np.where(g == 0, ya, new)
        done = (np.abs(new - ya) <= _Y_TOL * np.maximum(1.0, np.abs(ya))) | (g == 0) | (
            hi[idx] - lo[idx] <= _Y_TOL * np.maximum(1.0, np.abs(ya)))
        y[idx] = new
        active[idx[done]] = False
    raise PrecisionError("incomplete gamma inversion did not converge")


def _draw_scaled_moduli(params: ModelParams, n: int, rng: np.random.Generator,
                        size: int = 1) -> np.ndarray:
    """``size`` independent rows of ``V_1, ..., V_n``."""
    a1 = (np.arange(1, n + 1, dtype=float) + params.alpha) / params.b
    z1 = n * params.rho1 ** (2.0 * params.b)
    z2 = n * params.rho2 ** (2.0 * params.b)
    lp1 = log_reg_inc_gamma_pq(a1, np.full(n, z1))[0]
    lq2 = log_reg_inc_gamma_pq(a1, np.full(n, z2))[1]
    log_inner = np.tile(lp1 - np.logaddexp(lp1, lq2), size)
    a = np.tile(a1, size)
    lp1, lq2 = np.tile(lp1, size), np.tile(lq2, size)
    branch = np.log(1.0 - rng.random(n * size))
    level = np.log(1.0 - rng.random(n * size))
    inner = branch < log_inner
    out = ~inner
    v = np.empty(n * size)
    if np.any(inner):
        v[inner] = np.minimum(
            _invert_lower(a[inner], level[inner] + lp1[inner], np.full(inner.sum(), z1)), z1)
    if np.any(out):
        v[out] = np.maximum(
            _invert_upper(a[out], level[out] + lq2[out], np.full(out.sum(), z2)), z2)
    return v.reshape(size, n)


def sample_moduli(params: ModelParams, n: int, seed: int) -> np.ndarray:
    """Draw the ``n`` moduli ``R_1, ..., R_n`` (in mode order).

    Each ``V_j = n R_j**(2b)`` picks the inner branch with probability
    ``P(a_j, z1) / D_j`` and is then drawn by inverting the truncated
    incomplete gamma function in log space, which stays accurate when
    ``P(a_j, z1)`` or ``Q(a_j, z2)`` underflows.

    Raises
    ------
    PrecisionError
        If an inversion fails to converge.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValueError(f"n must be a positive integer, got {n!r}")
    rng = _generator(_check_seed(seed), _KEY_MODULI)
    v = _draw_scaled_moduli(params, int(n), rng)[0]
    return (v / n) ** (1.0 / (2.0 * params.b))


def export_point_cloud(params: ModelParams, n: int, seed: int) -> np.ndarray:
    """One sample of the ensemble as an ``(n, 2)`` array of ``(x, y)``.

    Angles are uniform on ``(-pi, pi]`` from a stream separate from the moduli.
    """
    r = sample_moduli(params, n, seed)
    theta = math.pi - 2.0 * math.pi * _generator(int(seed), _KEY_ANGLES).random(r.size)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _counts_from_bands(p, sure_in, seed, chunk_index, size):
    rng = _generator(seed, _KEY_COUNTS, chunk_index)
    u = rng.random((size, p.shape[0]))
    out = np.empty((size, p.shape[1]), dtype=np.int64)
    for ell in range(p.shape[1]):
        out[:, ell] = (u < p[:, ell]).sum(axis=1)
    return out + sure_in


def _counts_from_moduli(params, z, n, seed, chunk_index, size):
    rng = _generator(seed, _KEY_COUNTS, chunk_index)
    v = _draw_scaled_moduli(params, n, rng, size)
    return (v[:, :, None] < z[None, None, :]).sum(axis=1).astype(np.int64)


def sample_counts(params: ModelParams, grid: ObservableGrid, n: int, num_samples: int,
                  seed: int, method: str = "modes", threads: int = 1) -> SampleBatch:
    """Sample ``counts[s, l] = #{j : R_j < r_l}`` for ``num_samples`` draws.

    Parameters
    ----------
    method : {"modes", "moduli"}
        ``"modes"`` uses the indicators ``R_j < r_l`` directly: one uniform
        per mode is compared with the inclusion probabilities
        ``P(R_j < r_l)``, which are nondecreasing in ``l``, so the counts nest
        by construction. Modes whose probabilities are all within ``2**-60``
        of 0 or 1 are treated as fixed. ``"moduli"`` draws every modulus and
        is much slower; it serves as a check of the first.
    threads : int
        Worker threads over chunks of samples; does not change the result.
    """
    seed = _check_seed(seed)
    if not (isinstance(num_samples, (int, np.integer)) and num_samples >= 1):
        raise ValueError("num_samples must be a positive integer")
    if method not in ("modes", "moduli"):
        raise ValueError(f"unknown method {method!r}")
    n = int(n)
    chunk = _CHUNK if method == "modes" else _MODULI_CHUNK
    sizes = [min(chunk, num_samples - i) for i in range(0, num_samples, chunk)]
    if method == "modes":
        mp = mode_probabilities(params, grid, n, threads=threads)
        p = np.maximum.accumulate(mp.p, axis=1)
        fixed = np.all((mp.p < _SURE) | (mp.q < _SURE), axis=1)
        sure_in = (p[fixed] >= 0.5).sum(axis=0).astype(np.int64)
        live = p[~fixed]

        def work(i):
            return _counts_from_bands(live, sure_in, seed, i, sizes[i])
    else:
        z = scaled_wall_points(params, grid, n)[: 2 * grid.m]

        def work(i):
            return _counts_from_moduli(params, z, n, seed, i, sizes[i])

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(i) for i in range(len(sizes))]
    return SampleBatch(n, int(num_samples), seed, np.concatenate(parts))
