"""Immutable domain types shared by the samplers, the fitters and the CLI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr

from .errors import DataError

_UINT64_MAX = 2**64 - 1

# Relative threshold on the R diagonal of a pivoted QR below which a design
# column is declared linearly dependent on the columns before it.
RANK_TOL = 1e-10


def check_full_rank(design: np.ndarray, names: list[str]) -> None:
    """Raise :class:`DataError` naming the collinear columns, if any.

    Uses column-pivoted QR: columns whose pivoted R diagonal falls below
    ``RANK_TOL`` relative to the largest one are linear combinations of the
    columns pivoted before them.
    """
    _, r, piv = qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag[0] == 0.0:
        raise DataError("design matrix is identically zero")
    dependent = np.flatnonzero(diag < RANK_TOL * diag[0])
    if design.shape[1] > design.shape[0]:
        dependent = np.union1d(dependent, np.arange(design.shape[0], design.shape[1]))
    if dependent.size:
        cols = ", ".join(names[piv[j]] for j in dependent)
        raise DataError(f"design matrix is rank deficient; collinear columns: {cols}")


def _validate_design(design: np.ndarray, names: list[str]) -> None:
    if design.ndim != 2:
        raise DataError("design must be a 2-d matrix")
    n, k1 = design.shape
    if len(names) != k1:
        raise DataError(f"expected {k1} predictor names, got {len(names)}")
    if names[0] != "Intercept":
        raise DataError("first predictor must be named 'Intercept'")
    if not np.all(design[:, 0] == 1.0):
        raise DataError("first design column must be identically one")
    if not np.all(np.isfinite(design)):
        raise DataError("design matrix contains non-finite values")
    if n < k1:
        raise DataError(f"need at least {k1} rows for {k1} columns, got {n}")
    check_full_rank(design, names)


@dataclass(frozen=True)
class Dataset:
    """Design matrix with a leading intercept column and a binary response."""

    design: np.ndarray
    response: np.ndarray
    predictor_names: list[str]

    def __post_init__(self):
        design = np.ascontiguousarray(self.design, dtype=np.float64)
        response = np.ascontiguousarray(self.response, dtype=np.int64)
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", response)
        _validate_design(design, self.predictor_names)
        if response.shape != (design.shape[0],):
            raise DataError("response length must match the design row count")
        if not np.all((response == 0) | (response == 1)):
            raise DataError("response entries must be 0 or 1")

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def n_coef(self) -> int:
        return self.design.shape[1]


@dataclass(frozen=True)
class ContinuousDataset:
    """Design matrix plus a real-valued response, for the continuous
    quantile-regression mode."""

    design: np.ndarray
    response: np.ndarray
    predictor_names: list[str]

    def __post_init__(self):
        design = np.ascontiguousarray(self.design, dtype=np.float64)
        response = np.ascontiguousarray(self.response, dtype=np.float64)
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", response)
        _validate_design(design, self.predictor_names)
        if response.shape != (design.shape[0],):
            raise DataError("response length must match the design row count")
        if not np.all(np.isfinite(response)):
            raise DataError("response contains non-finite values")

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def n_coef(self) -> int:
        return self.design.shape[1]


@dataclass(frozen=True)
class GaussianPrior:
    """Gaussian prior on the regression coefficients."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.ascontiguousarray(self.mean, dtype=np.float64)
        cov = np.ascontiguousarray(self.covariance, dtype=np.float64)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        d = mean.size
        if mean.ndim != 1:
            raise ValueError("prior mean must be a vector")
        if cov.shape != (d, d):
            raise ValueError(f"prior covariance must be {d}x{d}, got {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise ValueError("prior covariance must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("prior covariance must be positive definite") from exc

    @classmethod
    def default(cls, n_coef: int) -> "GaussianPrior":
        """Weakly informative default: zero mean, covariance 100*I."""
        return cls(np.zeros(n_coef), 100.0 * np.eye(n_coef))


@dataclass(frozen=True)
class McmcConfig:
    """Sweep counts, thinning and seed of one MCMC run."""

    burn_in: int = 1000
    draws: int = 10000
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.draws < 1:
            raise ValueError("draws must be positive")
        if self.thin < 1:
            raise ValueError("thin must be positive")
        if not 0 <= self.seed <= _UINT64_MAX:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def kept(self) -> int:
        """Number of stored draws: every thin-th post-burn-in sweep."""
        return self.draws // self.thin


@dataclass(frozen=True)
class PosteriorDraws:
    """Stored post-burn-in coefficient draws of one chain."""

    draws: np.ndarray
    tau: float
    predictor_names: list[str]
    config: McmcConfig

    def __post_init__(self):
        draws = np.ascontiguousarray(self.draws, dtype=np.float64)
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)
        if draws.ndim != 2 or draws.shape[1] != len(self.predictor_names):
            raise ValueError(
                f"draws must be M x {len(self.predictor_names)}, got {draws.shape}"
            )
        if not np.all(np.isfinite(draws)):
            raise ValueError("draws contain non-finite values")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"quantile level must lie in (0, 1), got {self.tau}")

    def column(self, predictor: str) -> np.ndarray:
        if predictor not in self.predictor_names:
            raise ValueError(f"unknown predictor {predictor!r}")
        return self.draws[:, self.predictor_names.index(predictor)]


@dataclass(frozen=True)
class Contrast:
    """A named sum of coefficient columns, summarized like a coefficient."""

    name: str
    terms: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if len(self.terms) < 1:
            raise ValueError("a contrast needs at least one term")

    def draws_from(self, draws: np.ndarray, predictor_names: list[str]) -> np.ndarray:
        cols = []
        for term in self.terms:
            if term not in predictor_names:
                raise ValueError(f"contrast {self.name!r}: unknown predictor {term!r}")
            cols.append(predictor_names.index(term))
        return draws[:, cols].sum(axis=1)
