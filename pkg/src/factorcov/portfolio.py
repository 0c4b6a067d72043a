"""Mean-variance portfolio formulas driven by an inverse covariance.

All weights come from the closed-form solution of

    min  w' Sigma w   subject to  w'1 = 1,  w'mu = gamma

so nothing here calls an optimiser. Short positions are allowed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrontier, DegenerateInverse, DimensionMismatch, ShortPosition
from .estimators import (
    CovarianceEstimate,
    FactorModelFit,
    as_matrix,
    covariance_factor,
    inverse_factor,
    inverse_generic,
)

FRONTIER_RTOL = 1e-10
VARPHI_FLOOR = 1e-300


@dataclass(frozen=True)
class PortfolioScalars:
    """The three quadratic forms of the efficient frontier.

    varphi = 1' S^{-1} 1,  psi = 1' S^{-1} mu,  phi = mu' S^{-1} mu
    """

    varphi: float
    psi: float
    phi: float

    @property
    def determinant(self) -> float:
        return self.varphi * self.phi - self.psi**2

    def check_frontier(self) -> float:
        det = self.determinant
        if not det > FRONTIER_RTOL * abs(self.varphi * self.phi):
            raise DegenerateFrontier(
                f"varphi*phi - psi^2 = {det:.3e} is degenerate (mean vector proportional to ones?)"
            )
        return det


@dataclass(frozen=True)
class PortfolioWeights:
    weights: np.ndarray
    target_return: float | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if not np.all(np.isfinite(w)):
            raise DegenerateInverse("portfolio weights are not finite")
        object.__setattr__(self, "weights", w)

    @property
    def budget(self) -> float:
        return float(self.weights.sum())

    def require_long_only(self, tol: float = 0.0) -> "PortfolioWeights":
        if np.any(self.weights < -tol):
            i = int(np.argmin(self.weights))
            raise ShortPosition(f"weight {i} is {self.weights[i]:.3e} < 0")
        return self


def _vec(mu, p: int, name: str = "mean vector") -> np.ndarray:
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.shape != (p,):
        raise DimensionMismatch(f"{name} has length {mu.size}, expected {p}")
    return mu


def _weights_of(xi) -> np.ndarray:
    return xi.weights if isinstance(xi, PortfolioWeights) else np.asarray(xi, dtype=float).ravel()


def portfolio_scalars(Sigma_inv, mu) -> PortfolioScalars:
    P = as_matrix(Sigma_inv)
    p = P.shape[0]
    if P.shape != (p, p):
        raise DimensionMismatch(f"inverse covariance must be square, got {P.shape}")
    mu = _vec(mu, p)
    a = P.sum(axis=1)  # S^{-1} 1
    return PortfolioScalars(varphi=float(a.sum()), psi=float(a @ mu), phi=float(mu @ P @ mu))


def markowitz_weights(Sigma_inv, mu, gamma: float, *, no_short: bool = False) -> PortfolioWeights:
    P = as_matrix(Sigma_inv)
    mu = _vec(mu, P.shape[0])
    sc = portfolio_scalars(P, mu)
    det = sc.check_frontier()
    w = ((sc.phi - gamma * sc.psi) / det) * P.sum(axis=1) + ((gamma * sc.varphi - sc.psi) / det) * (P @ mu)
    out = PortfolioWeights(w, float(gamma))
    return out.require_long_only() if no_short else out


def portfolio_variance(Sigma, xi) -> float:
    S = as_matrix(Sigma)
    w = _vec(_weights_of(xi), S.shape[0], "weight vector")
    return float(w @ S @ w)


def minimum_variance_closed_form(scalars: PortfolioScalars, gamma: float) -> float:
    """Frontier variance ``(varphi g^2 - 2 psi g + phi) / (varphi phi - psi^2)``."""
    det = scalars.check_frontier()
    return (scalars.varphi * gamma**2 - 2.0 * scalars.psi * gamma + scalars.phi) / det


def global_min_variance_weights(Sigma_inv, *, no_short: bool = False) -> PortfolioWeights:
    P = as_matrix(Sigma_inv)
    a = P.sum(axis=1)
    varphi = float(a.sum())
    if not varphi > VARPHI_FLOOR:
        raise DegenerateInverse(f"1' S^-1 1 = {varphi:.3e} is not positive")
    out = PortfolioWeights(a / varphi)
    return out.require_long_only() if no_short else out


def equal_weights(p: int) -> PortfolioWeights:
    return PortfolioWeights(np.full(p, 1.0 / p))


def plug_in_portfolio(source, gamma: float | None = None, *, no_short: bool = False):
    """Estimated optimal portfolio and its estimated variance.

    Parameters
    ----------
    source : FactorModelFit or (CovarianceEstimate, mean vector)
        A factor fit uses its Woodbury inverse and plug-in mean; a pair uses a
        dense inverse of the given covariance with the given mean.
    gamma : float, optional
        Target return. When omitted the global minimum-variance portfolio is
        returned.

    Returns
    -------
    (PortfolioWeights, float)
        The weights and ``w' Sigma_hat w``.
    """
    if isinstance(source, FactorModelFit):
        S = covariance_factor(source).matrix
        P = inverse_factor(source)
        mu = source.mean
    else:
        cov, mu = source
        S = as_matrix(cov)
        P = inverse_generic(cov if isinstance(cov, CovarianceEstimate) else S)
    if gamma is None:
        w = global_min_variance_weights(P, no_short=no_short)
    else:
        w = markowitz_weights(P, mu, gamma, no_short=no_short)
    return w, portfolio_variance(S, w)
