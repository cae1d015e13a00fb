"""Logarithm of the complementary error function without underflow."""

from __future__ import annotations

import numpy as np
from scipy import special

__all__ = ["log_erfc"]


def log_erfc(x):
    """Return ``ln erfc(x)`` for any finite real ``x``.

    For ``x > 0`` the value is assembled as ``ln erfcx(x) - x**2`` from the
    scaled function, so it stays finite and accurate far beyond the point
    where ``erfc`` itself underflows.

    Parameters
    ----------
    x : float or array_like

    Returns
    -------
    float or ndarray
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    # near 0 the result is ~ -2x/sqrt(pi); log1p keeps it relatively accurate
    mid = np.abs(x) < 0.5
    pos = (x > 0) & ~mid
    neg = (x <= 0) & ~mid
    out[mid] = np.log1p(-special.erf(x[mid]))
    xp = x[pos]
    out[pos] = np.log(special.erfcx(xp)) - xp * xp
    out[neg] = np.log(special.erfc(x[neg]))
    return out if out.ndim else float(out)
