"""Observable-factor regression and the two covariance estimators.

Data are laid out with variables in rows and observations in columns:
a factor panel ``X`` is ``K x n`` and a return panel ``Y`` is ``p x n``.
The factor-based estimator is

    Sigma_hat = B_hat cov_f B_hat' + diag(resid_var)

with ``B_hat = Y X' (X X')^{-1}``, and it stays invertible for ``p > n``
through the Woodbury identity, which only needs ``K x K`` inversions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import (
    DataError,
    DimensionMismatch,
    SingularFactorCov,
    SingularFactorGram,
    SingularMatrix,
    TooFewObservations,
    ZeroResidualVariance,
)

RCOND_FLOOR = 1e-12
RESID_VAR_FLOOR = 1e-12

Method = Literal["factor", "sample", "oracle"]


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def reciprocal_condition(M: np.ndarray) -> float:
    """Reciprocal 2-norm condition number; 0.0 for an exactly singular matrix."""
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


def _check_finite(a: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(a)):
        raise DataError(f"{name} contains non-finite entries")


@dataclass(frozen=True)
class FactorPanel:
    """K x n matrix of factor observations (row i holds factor i)."""

    data: np.ndarray
    labels: Sequence | None = None

    def __post_init__(self):
        data = np.atleast_2d(np.array(self.data, dtype=float))
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise DimensionMismatch(f"factor panel must be a non-empty K x n matrix, got shape {data.shape}")
        _check_finite(data, "factor panel")
        if self.labels is not None and len(self.labels) != data.shape[1]:
            raise DimensionMismatch(f"{len(self.labels)} labels for {data.shape[1]} observations")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def K(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ReturnPanel:
    """p x n matrix of excess returns (row i holds asset i)."""

    data: np.ndarray
    labels: Sequence | None = None

    def __post_init__(self):
        data = np.atleast_2d(np.array(self.data, dtype=float))
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise DimensionMismatch(f"return panel must be a non-empty p x n matrix, got shape {data.shape}")
        _check_finite(data, "return panel")
        if self.labels is not None and len(self.labels) != data.shape[1]:
            raise DimensionMismatch(f"{len(self.labels)} labels for {data.shape[1]} observations")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]


def _factor_data(X) -> np.ndarray:
    return X.data if isinstance(X, FactorPanel) else FactorPanel(X).data


def _return_data(Y) -> np.ndarray:
    return Y.data if isinstance(Y, ReturnPanel) else ReturnPanel(Y).data


@dataclass(frozen=True)
class FactorModelFit:
    """Result of regressing a return panel on observed factors.

    Attributes
    ----------
    loadings : (p, K) estimated regression coefficients ``B_hat``.
    factor_cov : (K, K) unbiased sample covariance of the factors.
    resid_diag : (p,) residual variances, the diagonal of ``E E' / n``.
    residuals : (p, n) residual matrix ``Y - B_hat X``.
    mean : (p,) plug-in mean ``B_hat f_bar``.
    n : number of observations.
    factor_mean : (K,) factor sample mean ``f_bar``.
    """

    loadings: np.ndarray
    factor_cov: np.ndarray
    resid_diag: np.ndarray
    residuals: np.ndarray
    mean: np.ndarray
    n: int
    factor_mean: np.ndarray

    @property
    def p(self) -> int:
        return self.loadings.shape[0]

    @property
    def K(self) -> int:
        return self.loadings.shape[1]


@dataclass(frozen=True)
class CovarianceEstimate:
    matrix: np.ndarray
    method: Method = "oracle"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatch(f"covariance must be square, got shape {M.shape}")
        _check_finite(M, "covariance")
        if self.method not in ("factor", "sample", "oracle"):
            raise DataError(f"unknown method {self.method!r}")
        object.__setattr__(self, "matrix", M)

    @property
    def p(self) -> int:
        return self.matrix.shape[0]


def as_matrix(S) -> np.ndarray:
    """Return the underlying array of a CovarianceEstimate or array-like."""
    if isinstance(S, CovarianceEstimate):
        return S.matrix
    return np.atleast_2d(np.asarray(S, dtype=float))


def _gram_inverse(X: np.ndarray) -> np.ndarray:
    G = X @ X.T
    rc = reciprocal_condition(G)
    if rc < RCOND_FLOOR:
        raise SingularFactorGram("factor Gram matrix X X' is singular", 1.0 / rc if rc > 0 else np.inf)
    return np.linalg.inv(G)


def fit_factor_model(X, Y, *, resid_ddof: int = 0) -> FactorModelFit:
    """Least-squares fit of ``Y = B X + E`` without intercept.

    Parameters
    ----------
    X : FactorPanel or array (K, n)
    Y : ReturnPanel or array (p, n)
    resid_ddof : int
        Residual variances use divisor ``n - resid_ddof``. The default 0 keeps
        the plain ``1/n`` normalisation; pass ``K`` for a degrees-of-freedom
        correction.
    """
    Xd = _factor_data(X)
    Yd = _return_data(Y)
    K, n = Xd.shape
    if Yd.shape[1] != n:
        raise DimensionMismatch(f"factor panel has {n} observations, return panel has {Yd.shape[1]}")
    if n < K:
        raise TooFewObservations(f"need n >= K, got n={n}, K={K}")
    if n - resid_ddof <= 0:
        raise TooFewObservations(f"residual divisor n - ddof = {n - resid_ddof} must be positive")

    gram_inv = _gram_inverse(Xd)
    loadings = Yd @ Xd.T @ gram_inv
    residuals = Yd - loadings @ Xd
    resid_diag = np.einsum("ij,ij->i", residuals, residuals) / (n - resid_ddof)

    factor_mean = Xd.mean(axis=1)
    if n > 1:
        Xc = Xd - factor_mean[:, None]
        factor_cov = symmetrize(Xc @ Xc.T / (n - 1))
    else:
        factor_cov = np.zeros((K, K))

    return FactorModelFit(
        loadings=loadings,
        factor_cov=factor_cov,
        resid_diag=resid_diag,
        residuals=residuals,
        mean=loadings @ factor_mean,
        n=n,
        factor_mean=factor_mean,
    )


def covariance_factor(fit: FactorModelFit) -> CovarianceEstimate:
    B = fit.loadings
    M = B @ fit.factor_cov @ B.T
    M[np.diag_indices_from(M)] += fit.resid_diag
    return CovarianceEstimate(symmetrize(M), "factor")


def covariance_sample(Y) -> CovarianceEstimate:
    """Unbiased sample covariance ``(n-1)^{-1} Y Y' - [n(n-1)]^{-1} Y 1 1' Y'``."""
    Yd = _return_data(Y)
    n = Yd.shape[1]
    if n < 2:
        raise TooFewObservations(f"sample covariance needs n >= 2, got n={n}")
    # centre first; algebraically identical and loses less precision
    Yc = Yd - Yd.mean(axis=1, keepdims=True)
    return CovarianceEstimate(symmetrize(Yc @ Yc.T / (n - 1)), "sample")


def sample_mean(Y) -> np.ndarray:
    return _return_data(Y).mean(axis=1)


def woodbury_inverse(loadings, factor_cov, resid_diag, *, resid_floor: float = RESID_VAR_FLOOR) -> np.ndarray:
    """Inverse of ``B C B' + diag(d)`` using only ``K x K`` dense inversions."""
    d = np.asarray(resid_diag, dtype=float)
    if np.any(d <= resid_floor):
        i = int(np.argmin(d))
        raise ZeroResidualVariance(f"residual variance of asset {i} is {d[i]:.3e}, not above floor {resid_floor:g}")
    C = np.atleast_2d(np.asarray(factor_cov, dtype=float))
    rc = reciprocal_condition(C)
    if rc < RCOND_FLOOR:
        raise SingularFactorCov("factor covariance is singular", 1.0 / rc if rc > 0 else np.inf)

    B = np.asarray(loadings, dtype=float)
    dinv = 1.0 / d
    DinvB = B * dinv[:, None]
    core = np.linalg.inv(C) + B.T @ DinvB
    out = -DinvB @ np.linalg.solve(core, DinvB.T)
    out[np.diag_indices_from(out)] += dinv
    return symmetrize(out)


def inverse_factor(fit: FactorModelFit, *, resid_floor: float = RESID_VAR_FLOOR) -> np.ndarray:
    """Inverse of the factor covariance estimate via Sherman-Morrison-Woodbury.

    Only ``K x K`` systems are solved, so the result exists for ``p > n``.
    """
    return woodbury_inverse(fit.loadings, fit.factor_cov, fit.resid_diag, resid_floor=resid_floor)


def inverse_generic(S) -> np.ndarray:
    M = as_matrix(S)
    rc = reciprocal_condition(M)
    if rc < RCOND_FLOOR:
        raise SingularMatrix("covariance matrix is numerically singular", 1.0 / rc if rc > 0 else np.inf)
    return symmetrize(np.linalg.inv(M))


def hat_matrix(X) -> np.ndarray:
    """Projection ``X' (X X')^{-1} X`` onto the row space of the factors (n x n)."""
    Xd = _factor_data(X)
    K, n = Xd.shape
    if n < K:
        raise SingularFactorGram(f"X X' is singular when n={n} < K={K}")
    return symmetrize(Xd.T @ _gram_inverse(Xd) @ Xd)
