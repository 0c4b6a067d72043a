"""vec/vech algebra and the limiting covariance of the projected estimator.

For a factor covariance estimate the statistic

    T = sqrt(n) vech[ p^{-2} B' (Sigma_hat - Sigma) B ]

is asymptotically normal with covariance

    G = P_D (A kron A) D H D' (A kron A) P_D'

where ``A`` is the limit of ``B'B / p``, ``D`` the duplication matrix and
``H = cov[vech(U)]`` the covariance of the centred factor outer products.
``clt_check`` compares a Monte Carlo estimate of cov(T) with ``G``.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, MissingMoment, NotSymmetric, UsageError
from .estimators import as_matrix, covariance_factor, fit_factor_model, symmetrize

SYMMETRY_RTOL = 1e-10


def vec(A) -> np.ndarray:
    """Stack the columns of ``A`` left to right."""
    return np.asarray(A, dtype=float).reshape(-1, order="F")


def _lower_index(d: int) -> tuple[np.ndarray, np.ndarray]:
    # column-major lower triangle: (0,0),(1,0),...,(d-1,0),(1,1),...
    cols, rows = np.triu_indices(d)
    return rows, cols


def vech_pairs(d: int) -> list[tuple[int, int]]:
    """(row, col) index of each vech coordinate, in order."""
    rows, cols = _lower_index(d)
    return list(zip(rows.tolist(), cols.tolist()))


def vech(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"vech needs a square matrix, got shape {A.shape}")
    scale = max(np.abs(A).max(initial=0.0), 1.0)
    if np.abs(A - A.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
        raise NotSymmetric("vech argument is not symmetric")
    rows, cols = _lower_index(A.shape[0])
    return A[rows, cols]


def unvech(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    d = int(round((np.sqrt(8 * v.size + 1) - 1) / 2))
    if d * (d + 1) // 2 != v.size:
        raise DimensionMismatch(f"length {v.size} is not triangular")
    A = np.zeros((d, d))
    rows, cols = _lower_index(d)
    A[rows, cols] = v
    A[cols, rows] = v
    return A


@dataclass(frozen=True)
class DuplicationMatrix:
    order: int
    matrix: np.ndarray

    @cached_property
    def pseudo_inverse(self) -> np.ndarray:
        """``P_D = (D'D)^{-1} D'``, mapping vec(A) to vech(A) for symmetric A."""
        D = self.matrix
        # D'D is diagonal: 1 on diagonal vech coordinates, 2 off the diagonal
        return D.T / np.diag(D.T @ D)[:, None]


def duplication_matrix(d: int) -> DuplicationMatrix:
    if d < 1:
        raise UsageError(f"duplication matrix order must be >= 1, got {d}")
    m = d * (d + 1) // 2
    D = np.zeros((d * d, m))
    for k, (i, j) in enumerate(vech_pairs(d)):
        # vec index of (i, j) in column-major order is j*d + i
        D[j * d + i, k] = 1.0
        D[i * d + j, k] = 1.0
    return DuplicationMatrix(d, D)


def kronecker(A, B) -> np.ndarray:
    return np.kron(np.atleast_2d(A), np.atleast_2d(B))


def _check_cov(cov_f) -> np.ndarray:
    S = np.atleast_2d(np.asarray(cov_f, dtype=float))
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"factor covariance must be square, got {S.shape}")
    scale = max(np.abs(S).max(initial=0.0), 1.0)
    if np.abs(S - S.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
        raise NotSymmetric("factor covariance is not symmetric")
    return S


def gaussian_H(cov_f) -> np.ndarray:
    """cov[vech(U)] for Gaussian factors: ``s_ik s_jl + s_il s_jk``."""
    S = _check_cov(cov_f)
    pairs = vech_pairs(S.shape[0])
    m = len(pairs)
    H = np.empty((m, m))
    for a, (i, j) in enumerate(pairs):
        for b, (k, l) in enumerate(pairs):
            H[a, b] = S[i, k] * S[j, l] + S[i, l] * S[j, k]
    return symmetrize(H)


def gaussian_fourth_moments(cov_f) -> Callable[[int, int, int, int], float]:
    """Central fourth moments of a Gaussian vector (Isserlis)."""
    S = _check_cov(cov_f)

    def moment(i, j, k, l):
        return S[i, j] * S[k, l] + S[i, k] * S[j, l] + S[i, l] * S[j, k]

    return moment


def _moment_accessor(fourth_moments) -> Callable[[int, int, int, int], float]:
    if callable(fourth_moments):
        def get(i, j, k, l):
            try:
                return float(fourth_moments(i, j, k, l))
            except (KeyError, IndexError) as exc:
                raise MissingMoment(f"no central moment for index {(i, j, k, l)}") from exc
        return get
    if isinstance(fourth_moments, Mapping):
        def get(i, j, k, l):
            key = (i, j, k, l)
            # central moments are symmetric in their indices
            for cand in (key, tuple(sorted(key))):
                if cand in fourth_moments:
                    return float(fourth_moments[cand])
            raise MissingMoment(f"no central moment for index {key}")
        return get
    arr = np.asarray(fourth_moments, dtype=float)
    if arr.ndim != 4:
        raise MissingMoment(f"moment array must be 4-dimensional, got {arr.ndim}")

    def get(i, j, k, l):
        try:
            return float(arr[i, j, k, l])
        except IndexError as exc:
            raise MissingMoment(f"no central moment for index {(i, j, k, l)}") from exc
    return get


def general_H(fourth_moments, cov_f) -> np.ndarray:
    """cov[vech(U)] from central fourth moments of the factors.

    ``fourth_moments`` is a callable ``(i, j, k, l) -> E[(f_i-Ef_i)...(f_l-Ef_l)]``,
    a mapping keyed by index tuples, or a ``K x K x K x K`` array. Each entry is
    ``cov(u_ij, u_kl) = m_ijkl - s_ij s_kl``, which equals
    ``c_ijkl + s_ik s_jl + s_il s_jk`` in terms of the fourth cumulant ``c``.
    """
    S = _check_cov(cov_f)
    get = _moment_accessor(fourth_moments)
    pairs = vech_pairs(S.shape[0])
    m = len(pairs)
    H = np.empty((m, m))
    for a, (i, j) in enumerate(pairs):
        for b, (k, l) in enumerate(pairs):
            H[a, b] = get(i, j, k, l) - S[i, j] * S[k, l]
    return symmetrize(H)


def asymptotic_G(A, H) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    K = A.shape[0]
    if A.shape != (K, K):
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    m = K * (K + 1) // 2
    if H.shape != (m, m):
        raise DimensionMismatch(f"H must be {m} x {m} for K={K}, got {H.shape}")
    Dm = duplication_matrix(K)
    AA = np.kron(A, A)
    L = Dm.pseudo_inverse @ AA @ Dm.matrix
    return symmetrize(L @ H @ L.T)


def clt_statistic(B, Sigma_hat, Sigma, n: int) -> np.ndarray:
    """``sqrt(n) vech[p^{-2} B' (Sigma_hat - Sigma) B]``."""
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    S1 = as_matrix(Sigma_hat)
    S0 = as_matrix(Sigma)
    p = B.shape[0]
    if S1.shape != (p, p) or S0.shape != (p, p):
        raise DimensionMismatch(f"loadings have {p} rows, covariances are {S1.shape} and {S0.shape}")
    M = B.T @ (S1 - S0) @ B / p**2
    return np.sqrt(n) * vech(symmetrize(M))


@dataclass(frozen=True)
class CltCheckReport:
    empirical_cov: np.ndarray
    analytic_G: np.ndarray
    max_rel_dev: float
    replications: int
    statistics: np.ndarray | None = None


def clt_check(
    K: int = 1,
    p: int = 20,
    n: int = 400,
    reps: int = 2000,
    seed: int = 0,
    *,
    factor_var: float = 4.0,
    loadings=None,
    keep_statistics: bool = False,
) -> CltCheckReport:
    """Monte Carlo check of the limiting covariance for Gaussian factors.

    Factors are ``N(0, factor_var * I_K)`` and the idiosyncratic covariance is
    the identity. With ``K == 1`` the loadings default to a column of ones;
    otherwise they are drawn once from ``N(1, 1)`` with the given seed. The
    analytic ``G`` uses the finite-``p`` value ``A = B'B / p``.

    ``max_rel_dev`` is the largest absolute deviation between empirical and
    analytic covariance divided by the largest absolute entry of ``G``.
    """
    if K < 1 or p < 1 or n < 2 or reps < 2:
        raise UsageError(f"need K >= 1, p >= 1, n >= 2, reps >= 2 (got K={K}, p={p}, n={n}, reps={reps})")
    if K > p:
        raise UsageError(f"number of factors K={K} exceeds dimension p={p}")
    if n <= K:
        raise UsageError(f"need n > K, got n={n}, K={K}")
    if factor_var <= 0:
        raise UsageError("factor_var must be positive")

    seq = np.random.SeedSequence(seed)
    load_seq, draw_seq = seq.spawn(2)
    if loadings is None:
        if K == 1:
            B = np.ones((p, 1))
        else:
            B = np.random.default_rng(load_seq).normal(1.0, 1.0, size=(p, K))
    else:
        B = np.atleast_2d(np.asarray(loadings, dtype=float))
        if B.shape != (p, K):
            raise DimensionMismatch(f"loadings must be {p} x {K}, got {B.shape}")

    cov_f = factor_var * np.eye(K)
    Sigma = B @ cov_f @ B.T + np.eye(p)
    rng = np.random.default_rng(draw_seq)
    m = K * (K + 1) // 2
    stats = np.empty((reps, m))
    sd = np.sqrt(factor_var)
    for r in range(reps):
        X = sd * rng.standard_normal((K, n))
        E = rng.standard_normal((p, n))
        fit = fit_factor_model(X, B @ X + E)
        stats[r] = clt_statistic(B, covariance_factor(fit), Sigma, n)

    emp = np.atleast_2d(np.cov(stats, rowvar=False))
    G = asymptotic_G(B.T @ B / p, gaussian_H(cov_f))
    dev = float(np.abs(emp - G).max() / np.abs(G).max())
    return CltCheckReport(emp, G, dev, reps, stats if keep_statistics else None)
