"""
Factor covariance versus sample covariance
==========================================

Simulate a three-factor panel, fit both estimators and look at how they
differ once the number of assets passes the number of observations.
"""

import numpy as np

from factorcov import (
    covariance_factor,
    covariance_sample,
    fit_factor_model,
    frobenius_norm,
    inverse_factor,
    inverse_generic,
    SimulationConfig,
)
from factorcov.errors import SingularMatrix
from factorcov.simulation import draw_panel

rng = np.random.default_rng(0)

# %% a panel with fewer assets than days
cfg = SimulationConfig(n=120, p_grid=(40,), replications=1)
draw = draw_panel(cfg, 40, rng)
fit = fit_factor_model(draw.X, draw.Y)

S_factor = covariance_factor(fit).matrix
S_sample = covariance_sample(draw.Y).matrix
Sigma = draw.Sigma

print("p=40, n=120")
print("  Frobenius error, factor :", round(frobenius_norm(S_factor - Sigma), 3))
print("  Frobenius error, sample :", round(frobenius_norm(S_sample - Sigma), 3))

# both inverses exist here, the factor one is much closer to the truth
P_true = draw.Sigma_inv
print("  inverse error, factor   :", round(frobenius_norm(inverse_factor(fit) - P_true), 3))
print("  inverse error, sample   :", round(frobenius_norm(inverse_generic(S_sample) - P_true), 3))

# %% more assets than days
cfg = SimulationConfig(n=60, p_grid=(150,), replications=1)
draw = draw_panel(cfg, 150, rng)
fit = fit_factor_model(draw.X, draw.Y)

w_factor = np.linalg.eigvalsh(covariance_factor(fit).matrix)
w_sample = np.linalg.eigvalsh(covariance_sample(draw.Y).matrix)
print("\np=150, n=60")
print("  smallest eigenvalue, factor:", w_factor[0])
print("  smallest eigenvalue, sample:", w_sample[0])
print("  zero eigenvalues of sample :", int(np.sum(w_sample < 1e-10 * w_sample[-1])))

# Woodbury only inverts 3 x 3 matrices, so this works for any p
P = inverse_factor(fit)
print("  max |S P - I|              :", np.abs(covariance_factor(fit).matrix @ P - np.eye(150)).max())

try:
    inverse_generic(covariance_sample(draw.Y))
except SingularMatrix as exc:
    print("  sample inverse             :", exc)
