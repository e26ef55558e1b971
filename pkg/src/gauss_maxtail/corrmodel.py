"""Correlation structures for centered, unit-variance Gaussian vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SYMMETRY_TOL = 1e-12
FACTOR_TOL = 1e-8
NOT_PSD_TOL = 1e-6


class CorrelationError(ValueError):
    """Raised for invalid correlation inputs."""


class CorrelationModel:
    """Base class; use :class:`Equicorrelated` or :class:`DenseCorrelation`."""

    n: int

    def matrix(self) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Equicorrelated(CorrelationModel):
    """All off-diagonal correlations equal to ``rho``.

    Nothing of size n x n is stored, so n can be astronomically large.
    """

    n: int
    rho: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise CorrelationError(f"dimension must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        rho = float(self.rho)
        if self.n == 1:
            rho = 0.0
        elif not (-1.0 / (self.n - 1) < rho <= 1.0):
            raise CorrelationError(
                f"rho={rho} outside (-1/(n-1), 1] for n={self.n}"
            )
        object.__setattr__(self, "rho", rho)

    def matrix(self) -> np.ndarray:
        R = np.full((self.n, self.n), self.rho)
        np.fill_diagonal(R, 1.0)
        return R

    def eigenvalues(self) -> np.ndarray:
        """Closed form: 1 + (n-1)rho once, 1 - rho with multiplicity n-1."""
        if self.n == 1:
            return np.array([1.0])
        return np.array([1.0 + (self.n - 1) * self.rho] + [1.0 - self.rho] * (self.n - 1))

    def to_dict(self) -> dict:
        return {"kind": "equicorrelated", "n": self.n, "rho": self.rho}


@dataclass(frozen=True, eq=False)
class DenseCorrelation(CorrelationModel):
    """An explicit n x n correlation matrix.

    ``reflection_of`` is set by :func:`reflected` for the law of ``(X, -X)``,
    so that sampling never has to factorize the singular block matrix.
    """

    R: np.ndarray
    reflection_of: CorrelationModel | None = field(default=None, repr=False)

    def __post_init__(self):
        R = np.array(self.R, dtype=float, copy=True)
        _validate_matrix(R)
        R.setflags(write=False)
        object.__setattr__(self, "R", R)

    @property
    def n(self) -> int:
        return self.R.shape[0]

    def matrix(self) -> np.ndarray:
        return self.R

    def to_dict(self) -> dict:
        return {"kind": "dense", "n": self.n, "matrix": self.R.tolist()}


def _validate_matrix(R: np.ndarray) -> None:
    if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] < 1:
        raise CorrelationError(f"correlation matrix must be square, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise CorrelationError("correlation matrix has non-finite entries")
    n = R.shape[0]
    if np.max(np.abs(np.diag(R) - 1.0)) > SYMMETRY_TOL:
        raise CorrelationError("correlation matrix must have unit diagonal")
    if np.max(np.abs(R - R.T)) > SYMMETRY_TOL:
        raise CorrelationError("correlation matrix must be symmetric")
    if np.max(np.abs(R)) > 1.0 + SYMMETRY_TOL:
        raise CorrelationError("correlation entries must lie in [-1, 1]")
    lam_min = float(np.linalg.eigvalsh(R)[0])
    if lam_min < -1e-10 * n:
        raise CorrelationError(
            f"correlation matrix is not positive semidefinite (min eigenvalue {lam_min:.3e})"
        )


def build_equicorrelated(n: int, rho: float) -> Equicorrelated:
    return Equicorrelated(n, rho)


def identity(n: int) -> Equicorrelated:
    return Equicorrelated(n, 0.0)


def from_matrix(R) -> DenseCorrelation:
    return DenseCorrelation(np.asarray(R, dtype=float))


def load_csv(path) -> DenseCorrelation:
    """Read a header-free CSV of n rows with n comma-separated reals.

    Parse errors name the offending (1-based) row and column.
    """
    rows = []
    text = Path(path).read_text()
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        row = []
        for j, cell in enumerate(line.split(","), start=1):
            try:
                row.append(float(cell))
            except ValueError:
                raise CorrelationError(
                    f"{path}: row {i}, column {j}: cannot parse {cell.strip()!r} as a number"
                ) from None
        rows.append(row)
    if not rows:
        raise CorrelationError(f"{path}: empty matrix file")
    n = len(rows)
    for i, row in enumerate(rows, start=1):
        if len(row) != n:
            raise CorrelationError(f"{path}: row {i} has {len(row)} columns, expected {n}")
    return DenseCorrelation(np.array(rows))


def reflected(model: CorrelationModel) -> DenseCorrelation:
    """Law of Y = (X, -X); sampled through the factor of X, never factorized itself."""
    R = model.matrix()
    return DenseCorrelation(np.block([[R, -R], [-R, R]]), reflection_of=model)


def max_offdiag(model: CorrelationModel, absolute: bool = False) -> float:
    """Largest off-diagonal entry (signed, or in absolute value).

    Returns ``-inf`` when ``n == 1``, where there are no off-diagonal entries.
    """
    if model.n == 1:
        return -math.inf
    if isinstance(model, Equicorrelated):
        return abs(model.rho) if absolute else model.rho
    R = model.matrix()
    off = R[~np.eye(model.n, dtype=bool)]
    return float(np.max(np.abs(off)) if absolute else np.max(off))


def min_offdiag(model: CorrelationModel) -> float:
    """Smallest off-diagonal entry; ``inf`` when ``n == 1``."""
    if model.n == 1:
        return math.inf
    if isinstance(model, Equicorrelated):
        return model.rho
    R = model.matrix()
    return float(np.min(R[~np.eye(model.n, dtype=bool)]))


def sampling_factor(model: CorrelationModel) -> np.ndarray:
    """Return A (n x k) with A @ A.T == R, dropping null directions.

    Eigenvalues within ``1e-10 * n`` below zero are clipped; anything below
    ``-1e-6`` means the matrix is not PSD.
    """
    if isinstance(model, DenseCorrelation) and model.reflection_of is not None:
        A = sampling_factor(model.reflection_of)
        return np.vstack([A, -A])
    R = model.matrix()
    n = model.n
    lam, V = np.linalg.eigh(R)
    if lam[0] < -NOT_PSD_TOL:
        raise CorrelationError(f"matrix is not PSD (min eigenvalue {lam[0]:.3e})")
    keep = lam > 1e-10 * n
    A = V[:, keep] * np.sqrt(lam[keep])
    err = np.max(np.abs(A @ A.T - R))
    if err > FACTOR_TOL:
        raise CorrelationError(f"factor reconstruction error {err:.3e} exceeds {FACTOR_TOL}")
    return A


def residual_variances(model: CorrelationModel) -> np.ndarray:
    """var(X_i - E[X_i | X_1..X_{i-1}]) for each i, in the given order.

    These are the squared diagonal entries of the un-pivoted Cholesky factor.
    A residual that is (numerically) zero is reported as 0 and the index is
    skipped when conditioning later variables.
    """
    if isinstance(model, Equicorrelated):
        return _equicorrelated_residuals(model.n, model.rho)
    R = np.array(model.matrix(), dtype=float)
    n = model.n
    L = np.zeros_like(R)
    out = np.zeros(n)
    tol = 1e-12 * n
    for i in range(n):
        v = R[i, i] - L[i, :i] @ L[i, :i]
        if v <= tol:
            out[i] = 0.0
            continue
        out[i] = v
        L[i, i] = math.sqrt(v)
        L[i + 1:, i] = (R[i + 1:, i] - L[i + 1:, :i] @ L[i, :i]) / L[i, i]
    return out


def _equicorrelated_residuals(n: int, rho: float) -> np.ndarray:
    # conditioning the i-th coordinate on i-1 exchangeable ones
    i = np.arange(1, n + 1, dtype=float)
    out = np.ones(n)
    if n > 1:
        k = i[1:] - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            out[1:] = (1.0 - rho) * (1.0 + k * rho) / (1.0 + (k - 1.0) * rho)
        if rho == 1.0:
            out[1:] = 0.0
    return np.maximum(out, 0.0)


def min_residual_variance(model: CorrelationModel) -> float:
    return float(np.min(residual_variances(model)))


def find_low_correlation_subset(model: CorrelationModel, rho_tilde: float) -> list[int]:
    """Greedy index set J with R_ij <= rho_tilde for all distinct i, j in J.

    Candidates are visited in order of ascending row maximum (ties by index),
    so the result is deterministic.
    """
    if not 0.0 < rho_tilde < 1.0:
        raise CorrelationError("rho_tilde must lie in (0, 1)")
    if isinstance(model, Equicorrelated):
        if model.n == 1 or model.rho <= rho_tilde:
            return list(range(model.n))
        return [0]
    R = np.array(model.matrix())
    n = model.n
    off = R.copy()
    np.fill_diagonal(off, -np.inf)
    row_max = off.max(axis=1) if n > 1 else np.array([-np.inf])
    order = sorted(range(n), key=lambda i: (row_max[i], i))
    chosen: list[int] = []
    for i in order:
        if all(R[i, j] <= rho_tilde for j in chosen):
            chosen.append(i)
    return sorted(chosen)
