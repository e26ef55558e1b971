"""Seeded Monte Carlo estimates for M_n(X) and ||X||_inf.

Samples are produced in fixed chunks of 2**16. Chunk ``k`` draws from a
Philox stream keyed by ``(seed, k)``, and chunk results are merged in chunk
order, so estimates are bit-identical for any number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special as _sp
from scipy import stats

from .corrmodel import CorrelationModel, Equicorrelated, sampling_factor

CHUNK_SIZE = 2**16
Z95 = 1.959963984540054
# bound on floats held per sub-block of a chunk
_BLOCK_FLOATS = 2**22

METHODS = ("auto", "dense", "coordinates", "order-statistic")


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    stderr: float
    ci_low: float
    ci_high: float
    n_samples: int
    seed: int
    ci_method: str

    def to_dict(self) -> dict:
        return asdict(self)


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Counter-based generator for one chunk; independent of scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(chunk)])))


def _resolve_method(model: CorrelationModel, method: str, need_absmax: bool) -> str:
    if method not in METHODS:
        raise ValueError(f"unknown sampling method {method!r}; expected one of {METHODS}")
    if method == "auto":
        return "order-statistic" if isinstance(model, Equicorrelated) else "dense"
    if method in ("coordinates", "order-statistic") and not isinstance(model, Equicorrelated):
        raise ValueError(f"method {method!r} needs an equicorrelated model")
    return method


def _iid_max(rng, n: int, size: int):
    """Max of n iid normals via Phi(max) = U^(1/n); returns (max, 1 - Phi(max))."""
    u = np.maximum(rng.random(size), 2.0**-60)
    tail = -np.expm1(np.log1p(-u) / n)
    return -_sp.ndtri(tail), tail


def _iid_min_given_max(rng, n: int, upper_tail: np.ndarray) -> np.ndarray:
    # the other n-1 draws are iid N(0,1) truncated to (-inf, max]
    v = np.maximum(rng.random(upper_tail.size), 2.0**-60)
    frac = -np.expm1(np.log1p(-v) / (n - 1))
    p = (1.0 - upper_tail) * frac
    return _sp.ndtri(np.maximum(p, np.finfo(float).tiny))


def _sample_chunk(model, method: str, factor, seed: int, chunk: int, size: int,
                  need_absmax: bool):
    rng = chunk_rng(seed, chunk)
    if method == "order-statistic":
        n, rho = model.n, model.rho
        z0 = math.sqrt(rho) * rng.standard_normal(size)
        zmax, tail = _iid_max(rng, n, size)
        mx = z0 + math.sqrt(1.0 - rho) * zmax
        if not need_absmax:
            return mx, None
        zmin = _iid_min_given_max(rng, n, tail) if n > 1 else zmax
        lo = z0 + math.sqrt(1.0 - rho) * zmin
        return mx, np.maximum(np.abs(mx), np.abs(lo))
    if method == "coordinates":
        n, rho = model.n, model.rho
        block = max(1, _BLOCK_FLOATS // n)
        mx = np.empty(size)
        ab = np.empty(size) if need_absmax else None
        for start in range(0, size, block):
            stop = min(size, start + block)
            z0 = math.sqrt(rho) * rng.standard_normal(stop - start)
            z = rng.standard_normal((stop - start, n))
            zmax = z.max(axis=1)
            mx[start:stop] = z0 + math.sqrt(1.0 - rho) * zmax
            if need_absmax:
                zmin = z.min(axis=1)
                lo = z0 + math.sqrt(1.0 - rho) * zmin
                ab[start:stop] = np.maximum(np.abs(mx[start:stop]), np.abs(lo))
        return mx, ab
    n, k = factor.shape
    block = max(1, _BLOCK_FLOATS // max(n, k))
    mx = np.empty(size)
    ab = np.empty(size) if need_absmax else None
    for start in range(0, size, block):
        stop = min(size, start + block)
        x = rng.standard_normal((stop - start, k)) @ factor.T
        mx[start:stop] = x.max(axis=1)
        if need_absmax:
            ab[start:stop] = np.abs(x).max(axis=1)
    return mx, ab


def sample_batch(model: CorrelationModel, count: int, seed: int = 0, method: str = "auto",
                 need_absmax: bool = True, threads: int = 1):
    """Draw ``count`` samples of (max, absmax).

    ``method`` picks the sampler: ``dense`` (X = A Z from the eigen factor),
    ``coordinates`` (shared factor plus n draws per sample, equicorrelated
    only) or ``order-statistic`` (O(1) per sample: the i.i.d. maximum by
    inverse CDF, then the minimum of the remaining n-1 given the maximum). Returns ``(max, absmax)``; ``absmax`` is None
    when not requested.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    method = _resolve_method(model, method, need_absmax)
    factor = sampling_factor(model) if method == "dense" else None
    n_chunks = -(-count // CHUNK_SIZE)
    sizes = [min(CHUNK_SIZE, count - k * CHUNK_SIZE) for k in range(n_chunks)]

    def work(k):
        return _sample_chunk(model, method, factor, seed, k, sizes[k], need_absmax)

    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(n_chunks)))
    else:
        parts = [work(k) for k in range(n_chunks)]
    mx = np.concatenate([p[0] for p in parts])
    ab = np.concatenate([p[1] for p in parts]) if need_absmax else None
    return mx, ab


def wilson_interval(successes: int, trials: int, z: float = Z95):
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    # roundoff can push the limits past p at k = 0 or k = trials
    return min(max(0.0, centre - half), p), max(min(1.0, centre + half), p)


def clopper_pearson_upper(trials: int, alpha: float = 0.05) -> float:
    """One-sided upper limit for zero successes: 1 - alpha^(1/trials)."""
    return -math.expm1(math.log(alpha) / trials)


def proportion_estimate(successes: int, trials: int, seed: int) -> MonteCarloEstimate:
    """Binomial proportion with a Wilson 95% interval, or Clopper-Pearson at zero hits."""
    p = successes / trials
    stderr = math.sqrt(p * (1.0 - p) / trials)
    if successes == 0:
        return MonteCarloEstimate(0.0, 0.0, 0.0, clopper_pearson_upper(trials), trials, seed,
                                  "clopper-pearson-upper")
    lo, hi = wilson_interval(successes, trials)
    return MonteCarloEstimate(p, stderr, lo, hi, trials, seed, "wilson")


def _check_samples(n_samples, minimum):
    if int(n_samples) != n_samples or n_samples < minimum:
        raise ValueError(f"n_samples must be an integer >= {minimum}")


def estimate_lower_tail(model: CorrelationModel, t: float, n_samples: int = 10**6,
                        seed: int = 0, method: str = "auto", threads: int = 1
                        ) -> MonteCarloEstimate:
    """Estimate P(M_n(X) <= t)."""
    _check_samples(n_samples, 100)
    mx, _ = sample_batch(model, n_samples, seed, method, need_absmax=False, threads=threads)
    return proportion_estimate(int(np.count_nonzero(mx <= t)), n_samples, seed)


def estimate_small_ball(model: CorrelationModel, t: float, n_samples: int = 10**6,
                        seed: int = 0, method: str = "auto", threads: int = 1
                        ) -> MonteCarloEstimate:
    """Estimate P(max_i |X_i| <= t)."""
    _check_samples(n_samples, 100)
    _, ab = sample_batch(model, n_samples, seed, method, need_absmax=True, threads=threads)
    return proportion_estimate(int(np.count_nonzero(ab <= t)), n_samples, seed)


def estimate_both(model: CorrelationModel, t: float, n_samples: int = 10**6, seed: int = 0,
                  method: str = "auto", threads: int = 1):
    """Lower-tail and small-ball estimates from one sample pass."""
    _check_samples(n_samples, 100)
    mx, ab = sample_batch(model, n_samples, seed, method, need_absmax=True, threads=threads)
    return (proportion_estimate(int(np.count_nonzero(mx <= t)), n_samples, seed),
            proportion_estimate(int(np.count_nonzero(ab <= t)), n_samples, seed))


def summarize(samples: np.ndarray, seed: int) -> dict:
    """Median, mean and variance estimates from one sample array.

    The median interval uses binomial order-statistic ranks; mean and
    variance use normal approximations (the variance one via the fourth
    central moment).
    """
    x = np.sort(np.asarray(samples, dtype=float))
    N = x.size
    if N < 2:
        raise ValueError("need at least two samples")
    med = float(np.median(x))
    half = Z95 * math.sqrt(N) / 2.0
    lo_rank = max(0, int(math.floor(N / 2.0 - half)) - 1)
    hi_rank = min(N - 1, int(math.ceil(N / 2.0 + half)))
    m_lo, m_hi = float(x[lo_rank]), float(x[hi_rank])
    median = MonteCarloEstimate(med, (m_hi - m_lo) / (2.0 * Z95), min(m_lo, med),
                                max(m_hi, med), N, seed, "binomial-rank")
    mean_v = float(np.mean(x))
    dev = x - mean_v
    var_v = float(np.sum(dev * dev) / (N - 1))
    se_mean = math.sqrt(var_v / N)
    mean = MonteCarloEstimate(mean_v, se_mean, mean_v - Z95 * se_mean, mean_v + Z95 * se_mean,
                              N, seed, "normal")
    m4 = float(np.mean(dev**4))
    se_var = math.sqrt(max(m4 - var_v * var_v, 0.0) / N)
    variance = MonteCarloEstimate(var_v, se_var, var_v - Z95 * se_var, var_v + Z95 * se_var,
                                  N, seed, "normal")
    return {"median": median, "mean": mean, "variance": variance}


def estimate_statistics(model: CorrelationModel, n_samples: int = 10**6, seed: int = 0,
                        method: str = "auto", threads: int = 1, target: str = "max") -> dict:
    """Median, mean and variance of M_n(X) (``target="max"``) or of ||X||_inf."""
    _check_samples(n_samples, 1000)
    if target not in ("max", "absmax"):
        raise ValueError("target must be 'max' or 'absmax'")
    need_ab = target == "absmax"
    mx, ab = sample_batch(model, n_samples, seed, method, need_absmax=need_ab, threads=threads)
    return summarize(ab if need_ab else mx, seed)


def ks_compare(a: np.ndarray, b: np.ndarray):
    """Two-sample Kolmogorov-Smirnov test (statistic, p-value)."""
    res = stats.ks_2samp(a, b)
    return float(res.statistic), float(res.pvalue)
