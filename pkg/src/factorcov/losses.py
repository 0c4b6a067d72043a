"""Discrepancy measures between a covariance estimate and a reference matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch, NotPositiveDefinite, NotSymmetric
from .estimators import as_matrix, symmetrize

EIG_FLOOR = 1e-12
SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class LossReport:
    frobenius: float
    sigma_norm: float
    quadratic: float
    entropy: float
    max_eigen_dev: float

    def as_dict(self) -> dict[str, float]:
        return dict(
            frobenius=self.frobenius,
            sigma_norm=self.sigma_norm,
            quadratic=self.quadratic,
            entropy=self.entropy,
            max_eigen_dev=self.max_eigen_dev,
        )


def _check_symmetric(A: np.ndarray, name: str = "matrix") -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    scale = max(np.abs(A).max(initial=0.0), 1.0)
    if np.abs(A - A.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
        raise NotSymmetric(f"{name} is not symmetric")


def _same_shape(A: np.ndarray, B: np.ndarray) -> None:
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")


def frobenius_norm(A) -> float:
    return float(np.sqrt(np.sum(np.square(np.asarray(A, dtype=float)))))


def eigenvalues_desc(A) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, largest first."""
    A = as_matrix(A)
    _check_symmetric(A)
    return np.linalg.eigvalsh(symmetrize(A))[::-1]


def _cholesky(S: np.ndarray, name: str) -> np.ndarray:
    _check_symmetric(S, name)
    try:
        L = linalg.cholesky(symmetrize(S), lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{name} is not positive definite") from exc
    d = np.diag(L)
    if d.min() ** 2 <= EIG_FLOOR * np.max(d) ** 2:
        raise NotPositiveDefinite(f"{name} is numerically singular")
    return L


class ReferenceCovariance:
    """A positive definite reference matrix with its factorizations cached.

    Comparing several estimates against the same truth only pays for one
    eigendecomposition and one Cholesky factorization.
    """

    def __init__(self, Sigma):
        S = as_matrix(Sigma)
        _check_symmetric(S, "reference covariance")
        self.matrix = symmetrize(S)
        self.p = S.shape[0]
        self._inv_sqrt = None
        self._chol = None

    @property
    def inv_sqrt(self) -> np.ndarray:
        if self._inv_sqrt is None:
            w, V = np.linalg.eigh(self.matrix)
            if w[-1] <= 0 or w[0] <= EIG_FLOOR * w[-1]:
                raise NotPositiveDefinite(f"reference covariance has eigenvalue {w[0]:.3e} (largest {w[-1]:.3e})")
            self._inv_sqrt = symmetrize((V / np.sqrt(w)) @ V.T)
        return self._inv_sqrt

    @property
    def cholesky(self) -> np.ndarray:
        if self._chol is None:
            self._chol = _cholesky(self.matrix, "reference covariance")
        return self._chol

    def _check(self, A: np.ndarray) -> None:
        if A.shape != (self.p, self.p):
            raise DimensionMismatch(f"shapes {A.shape} and {(self.p, self.p)} differ")

    def sigma_norm(self, A) -> float:
        A = as_matrix(A)
        self._check(A)
        R = self.inv_sqrt
        return frobenius_norm(R @ A @ R) / np.sqrt(self.p)

    def whiten(self, Shat) -> np.ndarray:
        """``L^{-1} Shat L^{-T}`` with ``Sigma = L L'``; similar to ``Shat Sigma^{-1}``."""
        Shat = as_matrix(Shat)
        self._check(Shat)
        L = self.cholesky
        W = linalg.solve_triangular(L, Shat, lower=True)
        W = linalg.solve_triangular(L, W.T, lower=True)
        return symmetrize(W)

    def quadratic_loss(self, Shat) -> float:
        W = self.whiten(Shat)
        W[np.diag_indices_from(W)] -= 1.0
        return frobenius_norm(W)

    def entropy_loss(self, Shat) -> float:
        Shat = as_matrix(Shat)
        _check_symmetric(Shat, "estimate")
        W = self.whiten(Shat)
        Lw = _cholesky(W, "estimate")
        logdet = 2.0 * np.sum(np.log(np.diag(Lw)))
        return float(np.trace(W) - logdet - self.p)


def _ref(Sigma) -> ReferenceCovariance:
    return Sigma if isinstance(Sigma, ReferenceCovariance) else ReferenceCovariance(Sigma)


def inverse_sqrt(Sigma) -> np.ndarray:
    """Symmetric PD inverse square root ``Sigma^{-1/2}``.

    Raises NotPositiveDefinite when the smallest eigenvalue is at or below
    ``EIG_FLOOR`` times the largest.
    """
    return _ref(Sigma).inv_sqrt


def sigma_norm(A, Sigma) -> float:
    """``p^{-1/2} || Sigma^{-1/2} A Sigma^{-1/2} ||_F``."""
    return _ref(Sigma).sigma_norm(A)


def quadratic_loss(Shat, Sigma) -> float:
    """``{tr[(Shat Sigma^{-1} - I)^2]}^{1/2}``."""
    return _ref(Sigma).quadratic_loss(Shat)


def entropy_loss(Shat, Sigma) -> float:
    """Stein loss ``tr(Shat Sigma^{-1}) - log|Shat Sigma^{-1}| - p``.

    Evaluated on the congruent symmetric matrix ``L^{-1} Shat L^{-T}`` so the
    log-determinant comes from a Cholesky factor.
    """
    return _ref(Sigma).entropy_loss(Shat)


def max_eigen_deviation(Shat, Sigma) -> float:
    a = as_matrix(Shat)
    b = as_matrix(Sigma)
    _same_shape(a, b)
    return float(np.max(np.abs(eigenvalues_desc(a) - eigenvalues_desc(b)), initial=0.0))


def loss_report(Shat, Sigma) -> LossReport:
    """All losses at once; entries that are undefined come back as NaN."""
    Shat = as_matrix(Shat)
    ref = _ref(Sigma)
    Sigma = ref.matrix
    _same_shape(Shat, Sigma)

    def guarded(fn, *args):
        try:
            return fn(*args)
        except NotPositiveDefinite:
            return float("nan")

    return LossReport(
        frobenius=frobenius_norm(Shat - Sigma),
        sigma_norm=guarded(ref.sigma_norm, Shat - Sigma),
        quadratic=guarded(ref.quadratic_loss, Shat),
        entropy=guarded(ref.entropy_loss, Shat),
        max_eigen_dev=max_eigen_deviation(Shat, Sigma),
    )
