"""
From Fama-French style CSV files to weights
===========================================

Real files come from the Fama-French data library (daily three factors and
30 industry portfolios). Here two files in that layout are synthesised so
the script runs offline; point the loaders at downloaded files instead.
"""

import tempfile
from pathlib import Path

import numpy as np

from factorcov import covariance_factor, fit_factor_model, plug_in_portfolio
from factorcov.data_io import align_and_excess, load_factor_csv, load_returns_csv, write_matrix_csv
from factorcov.simulation import default_calibration, sample_mvn

rng = np.random.default_rng(2)
cal = default_calibration()
n, p = 300, 30
dates = [int(d.strftime("%Y%m%d")) for d in np.arange("2002-05-01", "2004-01-01", dtype="datetime64[D]").astype(object)
         if d.weekday() < 5][:n]

F = sample_mvn(cal.mu_f, cal.cov_f, n, rng)
B = sample_mvn(cal.mu_b, cal.cov_b, p, rng).T
rf = np.full(n, 0.006)
R = B @ F + 0.7 * rng.standard_normal((p, n)) + rf

tmp = Path(tempfile.mkdtemp())
with open(tmp / "F-F_Research_Data_Factors_daily.CSV", "w") as fh:
    fh.write("This file was created using a synthetic factor draw\n\n")
    fh.write(",Mkt-RF,SMB,HML,RF\n")
    for t, d in enumerate(dates):
        fh.write(f"{d},{F[0, t]:.2f},{F[1, t]:.2f},{F[2, t]:.2f},{rf[t]:.3f}\n")
    fh.write("\nCopyright synthetic\n")
with open(tmp / "30_Industry_Portfolios_Daily.CSV", "w") as fh:
    fh.write("  Average Value Weighted Returns -- Daily\n")
    fh.write("," + ",".join(f"Ind{i:02d}" for i in range(p)) + "\n")
    for t, d in enumerate(dates[5:]):  # a few days missing on purpose
        fh.write(f"{d}," + ",".join(f"{x:.2f}" for x in R[:, t + 5]) + "\n")

factors = load_factor_csv(tmp / "F-F_Research_Data_Factors_daily.CSV")
returns = load_returns_csv(tmp / "30_Industry_Portfolios_Daily.CSV")
panels = align_and_excess(factors, returns)
print("dates kept:", panels.factors.n, "dropped from factor file:", panels.dropped_factor_dates)

fit = fit_factor_model(panels.factors, panels.returns)
print("mean loadings", fit.loadings.mean(axis=0).round(3), "(generated around", cal.mu_b, ")")
print("factor covariance\n", fit.factor_cov.round(4))

w, v = plug_in_portfolio(fit)
print("global minimum-variance weights, largest five:", np.sort(w.weights)[-5:].round(3), "variance", round(v, 4))

write_matrix_csv(covariance_factor(fit).matrix, tmp / "sigma.csv")
print("wrote", tmp / "sigma.csv")
print("same fit from the shell:")
print(f"  factorcov fit --factors {tmp}/F-F_Research_Data_Factors_daily.CSV "
      f"--returns {tmp}/30_Industry_Portfolios_Daily.CSV --out {tmp}/fit")
