"""
Mean-variance portfolios from an estimated covariance
=====================================================
"""

import numpy as np

from factorcov import (
    fit_factor_model,
    global_min_variance_weights,
    markowitz_weights,
    minimum_variance_closed_form,
    plug_in_portfolio,
    portfolio_scalars,
    portfolio_variance,
    SimulationConfig,
)
from factorcov.estimators import covariance_sample, sample_mean
from factorcov.simulation import draw_panel

# %% two assets by hand
P = np.eye(2)
mu = np.array([1.0, 2.0])
w = markowitz_weights(P, mu, gamma=1.5)
print("weights", w.weights, "variance", portfolio_variance(np.eye(2), w))
print("scalars", portfolio_scalars(P, mu))

g = global_min_variance_weights(np.linalg.inv(np.diag([1.0, 4.0])))
print("global minimum for diag(1, 4):", g.weights)

# %% the frontier: variance as a function of the target return
sc = portfolio_scalars(P, mu)
for gamma in np.linspace(0.5, 2.5, 5):
    print(f"  target {gamma:4.2f} -> variance {minimum_variance_closed_form(sc, gamma):.4f}")
print("  minimum at psi/varphi =", sc.psi / sc.varphi, "with variance 1/varphi =", 1 / sc.varphi)

# %% plug-in estimates on a simulated panel
rng = np.random.default_rng(1)
cfg = SimulationConfig(n=250, p_grid=(60,), replications=1)
draw = draw_panel(cfg, 60, rng)
fit = fit_factor_model(draw.X, draw.Y)

true_var = 1 / portfolio_scalars(draw.Sigma_inv, draw.mu).varphi
_, v_factor = plug_in_portfolio(fit)
_, v_sample = plug_in_portfolio((covariance_sample(draw.Y), sample_mean(draw.Y)))
print("\nglobal minimum variance")
print("  truth  ", true_var)
print("  factor ", v_factor)
print("  sample ", v_sample)
