"""Lower-tail and small-ball bounds for Gaussian maxima.

Bounds that carry an unspecified constant (C, c, c0, c1) are reported with
``kind="rate-no-constant"``: their value is the rate alone and can only be
checked through ratio stability, never by absolute domination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .special import loglog_n, std_normal_quantile

PROBABILITY = "probability-bound"
RATE = "rate-no-constant"
REFERENCE = "reference-level"


@dataclass(frozen=True)
class RateParameters:
    alpha0: float
    beta0: float


@dataclass
class BoundEvaluation:
    name: str
    threshold: float
    log_value: float
    kind: str
    applicable: bool = True
    reason: str = ""
    inputs: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        if math.isnan(self.log_value):
            return math.nan
        return math.exp(self.log_value)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "threshold": self.threshold,
            "value": self.value,
            "log_value": self.log_value,
            "kind": self.kind,
            "applicable": self.applicable,
            "reason": self.reason,
            "inputs": dict(self.inputs),
        }


def _unit(name, x):
    if not (0.0 < x < 1.0):
        raise ValueError(f"{name}={x} must lie in (0, 1)")


def not_applicable(name: str, reason: str, kind: str = PROBABILITY, **inputs) -> BoundEvaluation:
    return BoundEvaluation(name, math.nan, math.nan, kind, False, reason, inputs)


def rate_params(delta0: float, rho0: float) -> RateParameters:
    _unit("delta0", delta0)
    _unit("rho0", rho0)
    beta0 = (1.0 - rho0) * (1.0 - delta0) / rho0
    return RateParameters(alpha0=beta0 * (1.0 - delta0), beta0=beta0)


def log_main_rate(n, delta0: float, rho0: float) -> float:
    """log of n^(-alpha0) * log(n)^((beta0 - 1)/2)."""
    p = rate_params(delta0, rho0)
    log_n = math.log(n)
    return -p.alpha0 * log_n + 0.5 * (p.beta0 - 1.0) * math.log(log_n)


def main_rate(n: int, delta0: float, rho0: float) -> BoundEvaluation:
    """Rate of the sharp lower-tail bound at delta0*sqrt(2(1-rho0) log n)."""
    if n < 3:
        raise ValueError("main_rate requires n >= 3")
    p = rate_params(delta0, rho0)
    t = delta0 * math.sqrt(2.0 * (1.0 - rho0) * math.log(n))
    return BoundEvaluation("main_rate", t, log_main_rate(n, delta0, rho0), RATE, inputs={
        "n": n, "delta0": delta0, "rho0": rho0, "alpha0": p.alpha0, "beta0": p.beta0})


def borell_tis(median: float, s: float) -> BoundEvaluation:
    """P(M <= med - s) <= exp(-s^2/2)."""
    if not s > 0.0:
        raise ValueError("borell_tis requires s > 0")
    return BoundEvaluation("borell_tis", median - s, -0.5 * s * s, PROBABILITY,
                           inputs={"median": median, "s": s})


def paouris_valettas(median: float, variance: float, s: float) -> BoundEvaluation:
    """P(M <= med - s) <= 1/2 exp(-pi s^2 / (1024 var))."""
    if not (variance > 0.0 and s > 0.0):
        raise ValueError("paouris_valettas requires variance > 0 and s > 0")
    log_value = math.log(0.5) - math.pi * s * s / (1024.0 * variance)
    return BoundEvaluation("paouris_valettas", median - s, log_value, PROBABILITY,
                           inputs={"median": median, "variance": variance, "s": s})


def pv_fixed_ratio(median: float, variance: float, delta0: float) -> BoundEvaluation:
    """The Paouris-Valettas bound at delta0 * med, i.e. with s = (1 - delta0) med."""
    _unit("delta0", delta0)
    if not median > 0.0:
        return not_applicable("pv_fixed_ratio", "median must be positive",
                              median=median, variance=variance, delta0=delta0)
    ev = paouris_valettas(median, variance, (1.0 - delta0) * median)
    ev.name = "pv_fixed_ratio"
    ev.inputs = {"median": median, "variance": variance, "delta0": delta0}
    return ev


def hartigan_kappa(n: int, epsilon: float) -> float:
    return 2.0 * math.log(n / math.sqrt(2.0 * math.pi)) - 2.0 * math.log(math.log(1.0 / epsilon))


def hartigan(n: int, epsilon: float, sigma_n_sq: float) -> BoundEvaluation:
    """P(M <= sigma sqrt(kappa - log kappa) - sqrt(1 - sigma^2)|Phi^-1(eps)|) <= 2 eps.

    Requires kappa(n, eps) >= 6; eps is restricted to (0, 1/e) so that
    log log(1/eps) is defined and positive.
    """
    if not (0.0 < epsilon < math.exp(-1.0)):
        raise ValueError("hartigan requires epsilon in (0, 1/e)")
    if not (0.0 < sigma_n_sq <= 1.0):
        raise ValueError("hartigan requires sigma_n_sq in (0, 1]")
    inputs = {"n": n, "epsilon": epsilon, "sigma_n_sq": sigma_n_sq}
    if n < 2:
        return not_applicable("hartigan", "needs n >= 2", **inputs)
    kappa = hartigan_kappa(n, epsilon)
    inputs["kappa"] = kappa
    if kappa < 6.0:
        return not_applicable("hartigan", f"kappa(n, epsilon) = {kappa:.6g} < 6", **inputs)
    sigma = math.sqrt(sigma_n_sq)
    t = (sigma * math.sqrt(kappa - math.log(kappa))
         - math.sqrt(1.0 - sigma_n_sq) * abs(std_normal_quantile(epsilon)))
    return BoundEvaluation("hartigan", t, math.log(2.0 * epsilon), PROBABILITY, inputs=inputs)


def worstcase_exponents(n: int, delta0: float, rho0: float) -> tuple[float, float]:
    """(best asymptotic exponent of the fixed-ratio PV bound, main exponent -alpha0 log n)."""
    p = rate_params(delta0, rho0)
    log_n = math.log(n)
    pv = -(2.0 * math.pi / 1024.0) * ((1.0 - rho0) / rho0) * (1.0 - delta0) ** 2 * log_n
    return pv, -p.alpha0 * log_n


def reference_level(n: int, rho0: float, c0: float = 4.0) -> tuple[float, float]:
    """(sqrt(2(1-rho0) log n) - c0 sqrt(loglog n), sqrt(2(1-rho0) log n)).

    The upper level is only a bound for the equicorrelated model.
    """
    if n < 2:
        raise ValueError("reference_level requires n >= 2")
    _unit("rho0", rho0)
    if c0 < 0.0:
        raise ValueError("c0 must be nonnegative")
    upper = math.sqrt(2.0 * (1.0 - rho0) * math.log(n))
    return upper - c0 * math.sqrt(loglog_n(n)), upper


def reference_level_row(n: int, rho0: float, c0: float = 4.0) -> BoundEvaluation:
    lower, upper = reference_level(n, rho0, c0)
    return BoundEvaluation("reference_level", upper, math.log(upper), REFERENCE,
                           reason="upper level holds for the equicorrelated model only",
                           inputs={"n": n, "rho0": rho0, "c0": c0, "lower": lower,
                                   "upper": upper})


def subset_rate(n_tilde: int, delta0: float, rho_tilde: float) -> BoundEvaluation:
    """Main rate re-used on an index subset whose correlations are <= rho_tilde."""
    if n_tilde < 2:
        raise ValueError("subset_rate requires n_tilde >= 2")
    p = rate_params(delta0, rho_tilde)
    t = delta0 * math.sqrt(2.0 * (1.0 - rho_tilde) * math.log(n_tilde))
    return BoundEvaluation("subset_rate", t, log_main_rate(n_tilde, delta0, rho_tilde), RATE,
                           inputs={"n_tilde": n_tilde, "delta0": delta0,
                                   "rho_tilde": rho_tilde, "alpha0": p.alpha0,
                                   "beta0": p.beta0})


def small_ball_rates(n: int, delta0: float, rho0: float):
    """Rates for P(||X||_inf <= t).

    ``abs_case`` assumes max |R_ij| <= rho0 and is the main rate at 2n.
    ``nonneg_case`` assumes R_ij in [0, rho0] and is the squared main rate at n;
    its unknown constant is squared as well.
    """
    rate2n = log_main_rate(2 * n, delta0, rho0)
    abs_case = BoundEvaluation(
        "small_ball_abs", delta0 * math.sqrt(2.0 * (1.0 - rho0) * math.log(2 * n)), rate2n, RATE,
        reason="requires max |R_ij| <= rho0",
        inputs={"n": n, "delta0": delta0, "rho0": rho0})
    nonneg_case = BoundEvaluation(
        "small_ball_nonneg", delta0 * math.sqrt(2.0 * (1.0 - rho0) * math.log(n)),
        2.0 * log_main_rate(n, delta0, rho0), RATE,
        reason="requires R_ij in [0, rho0]; constant is C^2",
        inputs={"n": n, "delta0": delta0, "rho0": rho0})
    return abs_case, nonneg_case


def latala_oleszkiewicz(median_absmax: float, delta0: float) -> BoundEvaluation:
    """P(||X||_inf <= delta0 m) <= 1/2 exp(-m^2 log(1/(2 delta0)) / 4), delta0 < 1/2."""
    inputs = {"median_absmax": median_absmax, "delta0": delta0}
    if not median_absmax > 0.0:
        raise ValueError("median_absmax must be positive")
    if not (0.0 < delta0 < 0.5):
        return not_applicable("latala_oleszkiewicz", "requires delta0 in (0, 1/2)", **inputs)
    log_value = math.log(0.5) - 0.25 * median_absmax**2 * math.log(1.0 / (2.0 * delta0))
    return BoundEvaluation("latala_oleszkiewicz", delta0 * median_absmax, log_value,
                           PROBABILITY, inputs=inputs)


def pv_small_ball(median_absmax: float, var_absmax: float, delta0: float,
                  c: float | None = None) -> BoundEvaluation:
    """1/2 exp(-c (m^2/var) log(1/delta0)); c defaults to 1, which is not a known value."""
    if not (median_absmax > 0.0 and var_absmax > 0.0):
        raise ValueError("pv_small_ball requires positive median and variance")
    _unit("delta0", delta0)
    asserted = c is not None
    c_val = 1.0 if c is None else float(c)
    if c_val <= 0.0:
        raise ValueError("c must be positive")
    log_value = math.log(0.5) - c_val * median_absmax**2 / var_absmax * math.log(1.0 / delta0)
    return BoundEvaluation(
        "pv_small_ball", delta0 * median_absmax, log_value,
        PROBABILITY if asserted else RATE,
        reason="" if asserted else "universal constant c unknown; c = 1 used",
        inputs={"median_absmax": median_absmax, "var_absmax": var_absmax,
                "delta0": delta0, "c": c_val})


def variance_ratio_floor(n: int, rho0: float, c1: float = 1.0) -> float:
    """c1 / (rho0 + 1/log n), the claimed floor on 1/var."""
    if n < 3:
        raise ValueError("variance_ratio_floor requires n >= 3")
    _unit("rho0", rho0)
    if c1 <= 0.0:
        raise ValueError("c1 must be positive")
    return c1 / (rho0 + 1.0 / math.log(n))


@dataclass
class SharpnessRow:
    n: int
    threshold: float
    exact: float
    exact_error: float
    log_rate: float
    c_hat: float
    included: bool

    @property
    def rate(self) -> float:
        return math.exp(self.log_rate)


@dataclass
class SharpnessStudy:
    delta0: float
    rho0: float
    rows: list
    c_min: float
    c_max: float
    band_ratio: float
    loglog_slope: float

    def to_dict(self) -> dict:
        return {
            "delta0": self.delta0,
            "rho0": self.rho0,
            "rows": [dict(r.__dict__, rate=r.rate) for r in self.rows],
            "c_min": self.c_min,
            "c_max": self.c_max,
            "band_ratio": self.band_ratio,
            "loglog_slope": self.loglog_slope,
        }


def empirical_constant(n_grid, delta0: float, rho0: float) -> SharpnessStudy:
    """C_hat(n) = P(M_n <= t_n) / rate(n) for the equicorrelated model.

    A point whose exact probability is 0 (underflow) is kept but excluded from
    the band summary.
    """
    from .exact import AccuracyNotReached, lower_tail_exact, threshold

    grid = [int(n) for n in n_grid]
    if any(n < 3 for n in grid) or grid != sorted(grid):
        raise ValueError("n_grid must be ascending with every n >= 3")
    rows = []
    for n in grid:
        t = threshold(n, delta0, rho0)
        res = lower_tail_exact(n, rho0, t)
        if not res.converged:
            raise AccuracyNotReached(f"lower_tail_exact did not converge at n={n}", res)
        log_rate = log_main_rate(n, delta0, rho0)
        ok = res.value > 0.0
        c_hat = math.exp(math.log(res.value) - log_rate) if ok else 0.0
        rows.append(SharpnessRow(n, t, res.value, res.abs_error_bound, log_rate, c_hat, ok))
    used = [r for r in rows if r.included]
    if used:
        cs = np.array([r.c_hat for r in used])
        c_min, c_max = float(cs.min()), float(cs.max())
        band = c_max / c_min
        if len(used) >= 2:
            x = np.array([math.log(math.log(r.n)) for r in used])
            slope = float(np.polyfit(x, np.log(cs), 1)[0])
        else:
            slope = 0.0
    else:
        c_min = c_max = band = slope = math.nan
    return SharpnessStudy(delta0, rho0, rows, c_min, c_max, band, slope)
