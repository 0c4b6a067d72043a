"""Covariance estimation with observed factors.

Factor-model and sample covariance estimators, a Woodbury inverse that
stays valid when assets outnumber observations, loss functions, closed-form
mean-variance portfolios, vech/duplication algebra for the limiting law of
the projected estimator, and a seeded Monte Carlo harness.
"""

__version__ = "0.1.0"

from .errors import (
    DataError,
    DegenerateFrontier,
    DegenerateInverse,
    DimensionMismatch,
    FactorCovError,
    NotPositiveDefinite,
    NumericalError,
    SingularMatrix,
    UsageError,
)
from .estimators import (
    CovarianceEstimate,
    FactorModelFit,
    FactorPanel,
    ReturnPanel,
    covariance_factor,
    covariance_sample,
    fit_factor_model,
    hat_matrix,
    inverse_factor,
    inverse_generic,
    sample_mean,
    woodbury_inverse,
)
from .losses import (
    LossReport,
    ReferenceCovariance,
    eigenvalues_desc,
    entropy_loss,
    frobenius_norm,
    loss_report,
    max_eigen_deviation,
    quadratic_loss,
    sigma_norm,
)
from .portfolio import (
    PortfolioScalars,
    PortfolioWeights,
    equal_weights,
    global_min_variance_weights,
    markowitz_weights,
    minimum_variance_closed_form,
    plug_in_portfolio,
    portfolio_scalars,
    portfolio_variance,
)
from .asymptotics import (
    asymptotic_G,
    clt_check,
    clt_statistic,
    duplication_matrix,
    gaussian_H,
    general_H,
    kronecker,
    vec,
    vech,
)
from .simulation import (
    CalibrationParams,
    SimulationConfig,
    SimulationResult,
    calibrate_truncated_gamma,
    default_calibration,
    emit_figure_tables,
    run_experiment,
    run_replication,
)
