"""Standard-normal special functions that stay accurate deep in the tails.

Everything downstream raises Phi to powers as large as 1e9, so the log-domain
entry points (:func:`log_std_normal_cdf`, :func:`log_std_normal_sf`,
:func:`log_ndtr_diff`) are the ones the integrators actually use.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_pdf(x):
    """Standard normal density (2*pi)^(-1/2) * exp(-x^2/2)."""
    x = np.asarray(x, dtype=float)
    out = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


def log_std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = -0.5 * x * x - LOG_SQRT_2PI
    return out if out.ndim else float(out)


def std_normal_cdf(x):
    out = _sp.ndtr(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def std_normal_sf(x):
    """Upper tail 1 - Phi(x), computed without cancellation."""
    out = _sp.ndtr(-np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def log_std_normal_cdf(x):
    """log Phi(x).

    For large positive ``x`` this is ``log1p(-Q(x))`` so that
    ``n * log_std_normal_cdf(x)`` keeps full relative accuracy even when
    Phi(x) rounds to 1; for very negative ``x`` an asymptotic series is used
    instead of ``log(erfc(.))``, which would underflow.
    """
    out = _sp.log_ndtr(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def log_std_normal_sf(x):
    out = _sp.log_ndtr(-np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def log_ndtr_diff(hi, lo):
    """log(Phi(hi) - Phi(lo)) for ``hi >= lo``, stable in every regime.

    Returns ``-inf`` where the interval is empty.
    """
    hi, lo = np.broadcast_arrays(np.asarray(hi, dtype=float), np.asarray(lo, dtype=float))
    out = np.full(hi.shape, -np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        # both endpoints in the upper half: Q(lo) - Q(hi)
        upper = lo >= 0.0
        a = _sp.log_ndtr(-lo[upper])
        b = _sp.log_ndtr(-hi[upper])
        out[upper] = a + np.log1p(-np.exp(b - a))
        # both endpoints in the lower half: Phi(hi) - Phi(lo)
        lower = hi <= 0.0
        a = _sp.log_ndtr(hi[lower])
        b = _sp.log_ndtr(lo[lower])
        out[lower] = a + np.log1p(-np.exp(b - a))
        # straddling zero: 1 - Phi(lo) - Q(hi), both pieces at most 1/2
        mid = ~(upper | lower)
        out[mid] = np.log1p(-(_sp.ndtr(lo[mid]) + _sp.ndtr(-hi[mid])))
        # narrow intervals cancel catastrophically; expand about the midpoint
        w = hi - lo
        m = 0.5 * (hi + lo)
        narrow = (w > 0.0) & (w * np.maximum(1.0, np.abs(m)) < 1e-3)
        wn, mn = w[narrow], m[narrow]
        out[narrow] = (np.log(wn) - LOG_SQRT_2PI - 0.5 * mn * mn
                       + np.log1p(wn * wn * (mn * mn - 1.0) / 24.0))
    out[hi <= lo] = -np.inf
    return out if out.ndim else float(out)


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open unit interval.

    Raises ``ValueError`` for probabilities outside (0, 1).
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("std_normal_quantile requires 0 < p < 1")
    out = _sp.ndtri(arr)
    return out if out.ndim else float(out)


def mills_upper(x):
    """phi(x)/x, an upper bound on 1 - Phi(x) for x > 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("mills_upper requires x > 0")
    out = std_normal_pdf(arr) / arr
    return out if np.ndim(out) else float(out)


def log_mills_upper(x):
    """log(phi(x)/x), finite where phi(x) itself underflows."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("log_mills_upper requires x > 0")
    out = log_std_normal_pdf(arr) - np.log(arr)
    return out if np.ndim(out) else float(out)


def mills_lower(x):
    """(1/x - 1/x^3) * phi(x), clipped at 0; a lower bound on 1 - Phi(x)."""
    arr = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (1.0 / arr - 1.0 / arr**3) * std_normal_pdf(arr)
    out = np.where(arr > 1.0, np.maximum(val, 0.0), 0.0)
    return out if out.ndim else float(out)


def loglog_n(n) -> float:
    """log(log(max(n, 3)))."""
    if n < 1:
        raise ValueError("loglog_n requires n >= 1")
    return math.log(math.log(max(n, 3)))
