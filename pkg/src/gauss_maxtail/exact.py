"""Quadrature-grade probabilities and moments for the equicorrelated model.

With shared factor Z0 and independent Z1..Zn, the equicorrelated vector is
X_i = sqrt(rho) Z0 + sqrt(1 - rho) Z_i, hence

    M_n(X) = sqrt(rho) Z0 + sqrt(1 - rho) max_i Z_i

and conditioning on Z0 = s reduces every probability here to a
one-dimensional integral against phi(s).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import quadrature
from .special import (
    log_ndtr_diff,
    log_std_normal_cdf,
    log_std_normal_pdf,
    log_std_normal_sf,
    log_mills_upper,
    std_normal_cdf,
)

TAIL_TOL = 1e-13
ABS_TOL = 1e-10
REL_TOL = 1e-8
_S_MAX = 40.0


class AccuracyNotReached(RuntimeError):
    """Raised when a result is needed but quadrature did not converge."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_bound: float
    truncation_bound: float
    evaluations: int
    converged: bool = True
    message: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ThresholdSpec:
    """Either ``t`` directly, or the level delta0*sqrt(2(1-rho0) log n)."""

    t: float | None = None
    n: int | None = None
    delta0: float | None = None
    rho0: float | None = None

    def resolve(self) -> float:
        if self.t is not None:
            return float(self.t)
        return threshold(self.n, self.delta0, self.rho0)

    @property
    def epsilon0(self) -> float | None:
        """The equivalent epsilon0 in t = epsilon0 * sqrt(2 log n)."""
        if self.t is not None:
            return None
        return self.delta0 * math.sqrt(1.0 - self.rho0)


def _check_unit(name, value, lo_open=True, hi_open=True):
    lo_ok = value > 0.0 if lo_open else value >= 0.0
    hi_ok = value < 1.0 if hi_open else value <= 1.0
    if not (lo_ok and hi_ok and math.isfinite(value)):
        lo = "(" if lo_open else "["
        hi = ")" if hi_open else "]"
        raise ValueError(f"{name}={value} outside {lo}0, 1{hi}")


def _check_n(n, minimum=1):
    if int(n) != n or n < minimum:
        raise ValueError(f"n must be an integer >= {minimum}, got {n!r}")


def threshold(n: int, delta0: float, rho0: float) -> float:
    """delta0 * sqrt(2 (1 - rho0) log n)."""
    _check_n(n, 2)
    _check_unit("delta0", delta0)
    _check_unit("rho0", rho0)
    return delta0 * math.sqrt(2.0 * (1.0 - rho0) * math.log(n))


def log_integrand_psi(n, rho, t, s):
    u = (t - math.sqrt(rho) * np.asarray(s, dtype=float)) / math.sqrt(1.0 - rho)
    return log_std_normal_pdf(s) + n * log_std_normal_cdf(u)


def integrand_psi(n, rho, t, s):
    """phi(s) * Phi(u)^n with u = (t - sqrt(rho) s) / sqrt(1 - rho)."""
    _check_n(n)
    _check_unit("rho", rho)
    out = np.exp(log_integrand_psi(n, rho, t, s))
    return out if np.ndim(out) else float(out)


def _log_small_ball_integrand(n, rho, t, s):
    s = np.asarray(s, dtype=float)
    scale = math.sqrt(1.0 - rho)
    hi = (t - math.sqrt(rho) * s) / scale
    lo = (-t - math.sqrt(rho) * s) / scale
    return log_std_normal_pdf(s) + n * log_ndtr_diff(hi, lo)


def _tail_cut(log_envelope, start: float, step: float, tol: float) -> float:
    """First point outward from ``start`` where the certified tail bound <= tol."""
    s = start
    while abs(s) < _S_MAX:
        if log_envelope(s) <= math.log(tol):
            return s
        s += step
    return math.copysign(_S_MAX, step)


def _integrate_truncated(log_f, left_tail, right_tail, mode: float, abs_tol, rel_tol,
                         tail_tol=TAIL_TOL, max_panels=4000) -> QuadratureResult:
    """Integrate exp(log_f) on R via [L, R] with certified tail bounds.

    ``left_tail(L)`` / ``right_tail(R)`` return the log of a bound on the
    discarded mass. The cut is widened once if the truncation would dominate
    the relative error target.
    """
    def f(x):
        return np.exp(log_f(x))

    total_evals = 0
    for _ in range(2):
        L = _tail_cut(left_tail, min(mode, 0.0) - 0.5, -0.25, tail_tol)
        R = _tail_cut(right_tail, max(mode, 0.0) + 0.5, 0.25, tail_tol)
        trunc = math.exp(left_tail(L)) + math.exp(right_tail(R))
        est = quadrature.integrate(f, L, R, abs_tol=abs_tol, rel_tol=rel_tol,
                                   max_panels=max_panels)
        total_evals += est.evaluations
        value = est.value
        if trunc <= max(rel_tol * abs(value), 1e-300) or tail_tol <= 1e-300:
            break
        tail_tol = max(0.1 * rel_tol * abs(value), 1e-300)
    value = min(max(value, 0.0), 1.0)
    msg = "" if est.converged else "accuracy not reached within the panel budget"
    return QuadratureResult(value, est.error + trunc, trunc, total_evals, est.converged, msg)


def _lower_tail_mode(n, rho, t):
    # Z0 location where Phi^n(u(s)) switches on; the integrand's mass lies near it
    # or near s = 0, whichever is smaller.
    level = math.sqrt(2.0 * math.log(n)) if n > 1 else 0.0
    s_switch = (t - math.sqrt(1.0 - rho) * level) / math.sqrt(rho)
    return min(0.0, s_switch)


def lower_tail_exact(n: int, rho: float, t: float, abs_tol: float = ABS_TOL,
                     rel_tol: float = REL_TOL) -> QuadratureResult:
    """P(M_n(X) <= t) for the equicorrelated model with correlation ``rho``."""
    _check_n(n)
    _check_unit("rho", rho, lo_open=False, hi_open=False)
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    if n == 1 or rho == 1.0:
        v = std_normal_cdf(t)
        return QuadratureResult(v, 4e-16 * v, 0.0, 1)
    if rho == 0.0:
        v = math.exp(n * log_std_normal_cdf(t))
        return QuadratureResult(v, 1e-15 * n * v, 0.0, 1)
    sr, sc = math.sqrt(rho), math.sqrt(1.0 - rho)

    def log_f(s):
        return log_integrand_psi(n, rho, t, s)

    def left_tail(L):
        # psi <= phi on (-inf, L]
        return log_mills_upper(-L) if L < -1.0 else log_std_normal_cdf(L)

    def right_tail(R):
        # Phi^n(u(s)) is decreasing in s, so the tail is at most Phi^n(u(R)) * Q(R)
        tail = log_mills_upper(R) if R > 1.0 else log_std_normal_sf(R)
        return tail + n * log_std_normal_cdf((t - sr * R) / sc)

    return _integrate_truncated(log_f, left_tail, right_tail, _lower_tail_mode(n, rho, t),
                                abs_tol, rel_tol)


def small_ball_exact(n: int, rho: float, t: float, abs_tol: float = ABS_TOL,
                     rel_tol: float = REL_TOL) -> QuadratureResult:
    """P(max_i |X_i| <= t) for the equicorrelated model."""
    _check_n(n)
    _check_unit("rho", rho, lo_open=False, hi_open=False)
    t = float(t)
    if t <= 0.0:
        return QuadratureResult(0.0, 0.0, 0.0, 0)
    if rho == 1.0:
        v = float(math.exp(log_ndtr_diff(t, -t)))
        return QuadratureResult(v, 4e-16, 0.0, 1)
    if n == 1 or rho == 0.0:
        v = math.exp(n * log_ndtr_diff(t, -t))
        return QuadratureResult(v, 1e-15 * n * v, 0.0, 1)
    sr, sc = math.sqrt(rho), math.sqrt(1.0 - rho)

    def log_f(s):
        return _log_small_ball_integrand(n, rho, t, s)

    def bracket(s):
        return n * float(log_ndtr_diff((t - sr * s) / sc, (-t - sr * s) / sc))

    # the bracket is maximal at s = 0 and decreasing in |s|
    def left_tail(L):
        base = log_mills_upper(-L) if L < -1.0 else log_std_normal_cdf(L)
        return base + bracket(L)

    def right_tail(R):
        base = log_mills_upper(R) if R > 1.0 else log_std_normal_sf(R)
        return base + bracket(R)

    return _integrate_truncated(log_f, left_tail, right_tail, 0.0, abs_tol, rel_tol)


def _bisect_cdf(cdf, lo: float, hi: float, target: float, p_tol: float,
                max_iter: int = 200) -> float:
    p_lo, p_hi = cdf(lo), cdf(hi)
    if not (p_lo <= target <= p_hi):
        width = hi - lo
        lo, hi = lo - width, hi + width
        p_lo, p_hi = cdf(lo), cdf(hi)
        if not (p_lo <= target <= p_hi):
            raise ValueError(f"could not bracket the {target}-quantile in [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        p = cdf(mid)
        if abs(p - target) <= p_tol:
            return mid
        if p < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            return mid
    return 0.5 * (lo + hi)


def _value_or_raise(res: QuadratureResult) -> float:
    if not res.converged:
        raise AccuracyNotReached(res.message, res)
    return res.value


def median_exact(n: int, rho: float, p_tol: float = 1e-9) -> float:
    """Median of M_n(X), by bisection on :func:`lower_tail_exact`."""
    _check_n(n)
    hi = math.sqrt(2.0 * math.log(n)) + 10.0
    return _bisect_cdf(lambda t: _value_or_raise(lower_tail_exact(n, rho, t)),
                       -10.0, hi, 0.5, p_tol)


def absmax_median_exact(n: int, rho: float, p_tol: float = 1e-9) -> float:
    """Median of max_i |X_i|, by bisection on :func:`small_ball_exact`."""
    _check_n(n)
    hi = math.sqrt(2.0 * math.log(2 * n)) + 10.0
    return _bisect_cdf(lambda t: _value_or_raise(small_ball_exact(n, rho, t)),
                       0.0, hi, 0.5, p_tol)


def iid_max_moments(n: int, tol: float = 1e-11) -> tuple[float, float]:
    """E[max Z] and E[(max Z)^2] for n i.i.d. standard normals.

    Integrates x^k * n * phi(x) * Phi(x)^(n-1); the discarded tails are bounded
    by n * Phi(a)^(n-1) * int_{-inf}^a |x|^k phi on the left and
    n * int_b^inf x^k phi on the right, both in closed form.
    """
    _check_n(n)
    if n == 1:
        return 0.0, 1.0
    log_n = math.log(n)

    def log_density(x):
        return log_n + log_std_normal_pdf(x) + (n - 1) * log_std_normal_cdf(x)

    def right_bound(b):
        # int_b^inf x phi = phi(b); int_b^inf x^2 phi = b phi(b) + Q(b)
        return n * (max(b, 1.0) * 2.0 * math.exp(log_std_normal_pdf(b)) + std_normal_cdf(-b))

    def left_bound(a):
        c = abs(a)
        moment = 2.0 * c * math.exp(log_std_normal_pdf(a)) + std_normal_cdf(a)
        return math.exp(log_n + (n - 1) * log_std_normal_cdf(a)) * moment

    b = 1.0
    while right_bound(b) > 1e-14 and b < _S_MAX:
        b += 0.25
    a = -1.0
    while left_bound(a) > 1e-14 and a > -_S_MAX:
        a -= 0.25
    moments = []
    for k in (1, 2):
        est = quadrature.integrate(lambda x, k=k: x**k * np.exp(log_density(x)), a, b,
                                   abs_tol=tol, rel_tol=1e-12, max_panels=4000)
        if not est.converged:
            raise AccuracyNotReached(f"moment {k} of the i.i.d. maximum did not converge")
        moments.append(est.value)
    return moments[0], moments[1]


def moments_exact(n: int, rho: float) -> tuple[float, float]:
    """(mean, variance) of M_n(X) for the equicorrelated model.

    mean = sqrt(1 - rho) E[max Z], var = rho + (1 - rho) var[max Z].
    """
    _check_n(n)
    _check_unit("rho", rho, lo_open=False, hi_open=False)
    m1, m2 = iid_max_moments(n)
    var_z = max(m2 - m1 * m1, 0.0)
    return math.sqrt(1.0 - rho) * m1, rho + (1.0 - rho) * var_z
