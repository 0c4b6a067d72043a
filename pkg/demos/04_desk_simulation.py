"""
A small Monte Carlo run
=======================

The full study (n=756, 500 replications, p from 16 to 996) takes hours; this
runs the same pipeline at n=200 with 50 replications in a few seconds.
The same thing from the shell:

    factorcov simulate --n 200 --p-grid 20,60,100 --reps 50 --seed 7 --out desk/
    factorcov simulate --config demos/full_scale.cfg --out full/   # hours
"""

from factorcov import SimulationConfig, run_experiment

cfg = SimulationConfig(n=200, p_grid=(20, 60, 100, 180, 260), replications=50, seed=7)
res = run_experiment(cfg)

rows = [
    ("frobenius", "mean"),
    ("sigma_norm", "mean"),
    ("entropy", "mean"),
    ("inverse_frobenius", "mean"),
    ("optimal_variance", "mse"),
    ("global_min_variance", "mse"),
    ("equal_weight_variance", "mse"),
]
print(f"{'metric':>24} {'p':>4} {'factor':>12} {'sample':>12}")
for metric, stat in rows:
    t = res.table(metric, stat)
    for i, p in enumerate(cfg.p_grid):
        print(f"{metric + ' ' + stat:>24} {p:4d} {t['factor'][i]:12.5g} {t['sample'][i]:12.5g}")

# once p >= n the sample covariance is singular and those cells are undefined
print("\nundefined sample entropy at p=260:", res.aggregate(260, "entropy", "sample").n_undefined, "of 50")
