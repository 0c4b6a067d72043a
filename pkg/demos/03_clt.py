"""
Limiting covariance of the projected estimator
==============================================

With one factor of variance s, unit loadings and identity idiosyncratic
covariance, sqrt(n) p^-2 B'(S_hat - S)B has limiting variance 2 a^4 s^2
with a = B'B/p = 1. The finite-p bias shrinks as the factor variance
grows relative to the idiosyncratic noise.
"""

from factorcov import clt_check
from factorcov.asymptotics import duplication_matrix, gaussian_H

print(duplication_matrix(2).matrix)
print(gaussian_H([[1.0, 0.3], [0.3, 2.0]]))

for s in (1.0, 4.0, 16.0):
    rep = clt_check(K=1, p=20, n=400, reps=2000, seed=0, factor_var=s)
    print(f"s={s:5.1f}: empirical {rep.empirical_cov[0, 0]:9.2f}  analytic {rep.analytic_G[0, 0]:9.2f}"
          f"  deviation {rep.max_rel_dev:.3f}")

rep = clt_check(K=2, p=30, n=400, reps=1000, seed=1)
print("\nK=2 empirical\n", rep.empirical_cov.round(1))
print("K=2 analytic\n", rep.analytic_G.round(1))
