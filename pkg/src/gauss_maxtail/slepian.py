"""Entrywise correlation domination and numerical Slepian comparisons."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import montecarlo
from .corrmodel import (
    CorrelationModel,
    DenseCorrelation,
    Equicorrelated,
    build_equicorrelated,
    reflected,
)
from .exact import lower_tail_exact

DOMINATION_TOL = 1e-12
SLACK_SE = 4.0


class HypothesisError(ValueError):
    """A comparison hypothesis (domination, sign pattern) does not hold."""


@dataclass
class DominationReport:
    dominates: bool
    violating_pairs: list = field(default_factory=list)
    max_violation: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def dominates(model_a: CorrelationModel, model_b: CorrelationModel) -> DominationReport:
    """Check R_A[i, j] <= R_B[i, j] for all i != j (tolerance 1e-12).

    Violating pairs are listed as ordered (i, j, lhs, rhs), so a symmetric
    violation appears twice.
    """
    if model_a.n != model_b.n:
        raise ValueError(f"dimension mismatch: {model_a.n} vs {model_b.n}")
    n = model_a.n
    if isinstance(model_a, Equicorrelated) and isinstance(model_b, Equicorrelated):
        gap = model_a.rho - model_b.rho
        if n == 1 or gap <= DOMINATION_TOL:
            return DominationReport(True)
        if n > 2000:
            # pairs are all identical; do not enumerate n^2/2 of them
            return DominationReport(False, [(0, 1, model_a.rho, model_b.rho),
                                            (1, 0, model_a.rho, model_b.rho)], gap)
    A = model_a.matrix()
    B = model_b.matrix()
    diff = A - B
    np.fill_diagonal(diff, -np.inf)
    iu, ju = np.nonzero(diff > DOMINATION_TOL)
    pairs = [(int(i), int(j), float(A[i, j]), float(B[i, j])) for i, j in zip(iu, ju)]
    worst = float(np.max(diff)) if n > 1 else 0.0
    return DominationReport(not pairs, pairs, max(worst, 0.0) if pairs else 0.0)


@dataclass
class ComparisonReport:
    hypothesis_holds: bool
    verdict: str
    t: float
    p_a: float | None = None
    p_b: float | None = None
    se_a: float = 0.0
    se_b: float = 0.0
    slack: float = 0.0
    equal_within_tolerance: bool = False
    sources: tuple = ()
    domination: DominationReport | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sources"] = list(self.sources)
        return d


def _probability(model: CorrelationModel, t: float, mode: str, budget: int, seed: int,
                 threads: int):
    """(p, standard error, source, informative)."""
    if mode == "exact" and isinstance(model, Equicorrelated) and model.rho >= 0.0:
        res = lower_tail_exact(model.n, model.rho, t)
        return res.value, res.abs_error_bound, "exact", res.converged
    if mode == "exact" and not isinstance(model, Equicorrelated) and model.n == 1:
        res = lower_tail_exact(1, 0.0, t)
        return res.value, res.abs_error_bound, "exact", True
    est = montecarlo.estimate_lower_tail(model, t, budget, seed, threads=threads)
    if est.ci_method == "clopper-pearson-upper":
        # no hits: the upper limit is the only usable scale
        return 0.0, est.ci_high / montecarlo.Z95, "mc", False
    return est.value, est.stderr, "mc", True


def check_comparison(model_a: CorrelationModel, model_b: CorrelationModel, t: float,
                     mode: str = "exact", budget: int = 10**6, seed: int = 0,
                     threads: int = 1) -> ComparisonReport:
    """Numerically check P(M(A) <= t) <= P(M(B) <= t) when B dominates A.

    ``mode="exact"`` uses quadrature for equicorrelated sides and Monte Carlo
    otherwise; ``mode="mc"`` forces Monte Carlo on both sides. The slack is 4
    combined standard errors. Verdicts: consistent, violation, inconclusive,
    or ``hypothesis-fails`` (no claim made).
    """
    if mode not in ("exact", "mc"):
        raise ValueError("mode must be 'exact' or 'mc'")
    dom = dominates(model_a, model_b)
    if not dom.dominates:
        return ComparisonReport(False, "hypothesis-fails", float(t), domination=dom)
    pa, sa, src_a, ok_a = _probability(model_a, t, mode, budget, seed, threads)
    pb, sb, src_b, ok_b = _probability(model_b, t, mode, budget, seed + 1, threads)
    slack = SLACK_SE * math.hypot(sa, sb)
    diff = pa - pb
    if diff > slack:
        verdict = "violation"
    elif ok_a or ok_b:
        verdict = "consistent"
    else:
        verdict = "inconclusive"
    return ComparisonReport(True, verdict, float(t), pa, pb, sa, sb, slack,
                            abs(diff) <= slack, (src_a, src_b), dom)


@dataclass
class BlockEmbedding:
    cor_y: DenseCorrelation
    cor_y_prime: DenseCorrelation
    report: DominationReport


def block_embedding(model: CorrelationModel, rho0: float) -> BlockEmbedding:
    """Compare cor(X, -X) = [[R, -R], [-R, R]] with [[R', 0], [0, R']].

    R' is equicorrelated at ``rho0``. Requires every off-diagonal R_ij to lie
    in [0, rho0]; the first offending entry is named otherwise.
    """
    if not 0.0 < rho0 < 1.0:
        raise ValueError("rho0 must lie in (0, 1)")
    R = model.matrix()
    n = model.n
    for i in range(n):
        for j in range(i + 1, n):
            if not (-DOMINATION_TOL <= R[i, j] <= rho0 + DOMINATION_TOL):
                raise HypothesisError(
                    f"R[{i}, {j}] = {R[i, j]:.6g} is outside [0, rho0={rho0}]"
                )
    cor_y = reflected(model)
    Rp = build_equicorrelated(n, rho0).matrix()
    zero = np.zeros_like(Rp)
    cor_y_prime = DenseCorrelation(np.block([[Rp, zero], [zero, Rp]]))
    return BlockEmbedding(cor_y, cor_y_prime, dominates(cor_y, cor_y_prime))
