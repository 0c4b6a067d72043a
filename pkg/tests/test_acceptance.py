"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]`` or ``[FAIL]`` line with the measured
quantity. Run with ``pytest tests/test_acceptance.py -v -s`` to see them in
order, or ``python3 tests/test_acceptance.py`` for the lines alone.
"""

import math
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np

from factorcov.asymptotics import clt_check, duplication_matrix, vec, vech
from factorcov.cli import main as cli_main
from factorcov.estimators import covariance_factor, covariance_sample, fit_factor_model, hat_matrix, inverse_factor
from factorcov.losses import entropy_loss, quadratic_loss, sigma_norm
from factorcov.portfolio import (
    global_min_variance_weights,
    markowitz_weights,
    minimum_variance_closed_form,
    portfolio_scalars,
    portfolio_variance,
)
from factorcov.simulation import SimulationConfig, calibrate_truncated_gamma, draw_panel, run_experiment

DESK = dict(n=200, K=3, replications=50, p_grid=(20, 60, 100))

# collected for the terminal summary (see conftest.py)
RESULTS: list[str] = []


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}: {detail}"
    RESULTS.append(line)
    print(line, flush=True)
    assert ok, f"criterion {number} failed: {detail}"


def random_spd(rng, p):
    A = rng.standard_normal((p, p))
    return A @ A.T + 0.1 * np.eye(p)


@lru_cache(maxsize=1)
def desk_result():
    return run_experiment(SimulationConfig(**DESK))


def desk_means(metric, stat="mean"):
    t = desk_result().table(metric, stat)
    return np.array(t["factor"]), np.array(t["sample"])


def test_criterion_01_calibration():
    t0 = time.perf_counter()
    a, b = calibrate_truncated_gamma(0.66081, 0.3275, 0.1950)
    dt = time.perf_counter() - t0
    ok = 3.34 <= a <= 3.38 and 0.186 <= b <= 0.189 and dt < 1.0
    report(1, "truncated gamma calibration", ok, f"alpha={a:.5f} beta={b:.5f} in {dt * 1e3:.1f} ms")


def test_criterion_02_untruncated_match():
    t0 = time.perf_counter()
    a, b = calibrate_truncated_gamma(0.66081, 0.3275, 0.0)
    dt = time.perf_counter() - t0
    ra, rb = abs(a / 4.0713 - 1), abs(b / 0.1623 - 1)
    ok = ra < 1e-3 and rb < 1e-3 and dt < 1.0
    report(2, "untruncated moment match", ok, f"alpha={a:.5f} beta={b:.5f} rel.dev=({ra:.1e}, {rb:.1e})")


def test_criterion_03_norm_identities():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst = [0.0, 0.0, 0.0]
    for _ in range(100):
        p = int(rng.integers(1, 21))
        S, Sh = random_spd(rng, p), random_spd(rng, p)
        worst[0] = max(worst[0], abs(sigma_norm(S, S) - 1))
        q, s = quadratic_loss(Sh, S), math.sqrt(p) * sigma_norm(Sh - S, S)
        worst[1] = max(worst[1], abs(q - s) / max(1.0, abs(s)))
        worst[2] = max(worst[2], abs(entropy_loss(S, S)))
    dt = time.perf_counter() - t0
    ok = max(worst) < 1e-10 and dt < 5
    report(3, "norm identity suite", ok, f"max deviations {worst[0]:.1e}, {worst[1]:.1e}, {worst[2]:.1e} in {dt:.2f} s")


def test_criterion_04_woodbury():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst = 0.0
    cases = [(10, 100), (50, 100), (200, 300), (200, 50), (50, 20)]
    for i in range(50):
        p, n = cases[i % len(cases)]
        draw = draw_panel(SimulationConfig(n=n, p_grid=(p,), replications=1), p, rng)
        fit = fit_factor_model(draw.X, draw.Y)
        R = covariance_factor(fit).matrix @ inverse_factor(fit) - np.eye(p)
        worst = max(worst, float(np.abs(R).max()))
    dt = time.perf_counter() - t0
    report(4, "Woodbury inverse", worst < 1e-8 and dt < 30, f"max |S P - I| = {worst:.2e} over 50 fits in {dt:.2f} s")


def test_criterion_05_invertible_when_p_exceeds_n():
    rng = np.random.default_rng(5)
    cfg = SimulationConfig(n=50, p_grid=(100,), replications=1)
    pd_factor = singular_sample = 0
    for _ in range(100):
        draw = draw_panel(cfg, 100, rng)
        fit = fit_factor_model(draw.X, draw.Y)
        pd_factor += np.linalg.eigvalsh(covariance_factor(fit).matrix)[0] > 0
        singular_sample += np.linalg.eigvalsh(covariance_sample(draw.Y).matrix)[0] <= 1e-10
    ok = pd_factor == 100 and singular_sample == 100
    report(5, "p > n invertibility", ok, f"factor PD {pd_factor}/100, sample singular {singular_sample}/100")


def test_criterion_06_sigma_norm_trend():
    f, s = desk_means("sigma_norm")
    rf, rs = f[-1] / f[0], s[-1] / s[0]
    ok = rs >= 1.8 and rf <= 1.3
    report(6, "Sigma-norm error growth p=100 vs p=20", ok, f"sample ratio {rs:.3f} (>=1.8), factor ratio {rf:.3f} (<=1.3)")


def test_criterion_07_inverse_ordering():
    f, s = desk_means("inverse_frobenius")
    gap = s / f
    ok = bool(np.all(f < s) and np.all(np.diff(gap) > 0))
    report(7, "inverse Frobenius ordering", ok, "gap ratios " + ", ".join(f"{g:.3f}" for g in gap))


def test_criterion_08_frobenius_parity():
    f, s = desk_means("frobenius")
    rel = np.abs(f - s) / s
    report(8, "Frobenius near-parity", bool(np.all(rel < 0.15)), "relative differences " + ", ".join(f"{r:.3f}" for r in rel))


def test_criterion_09_portfolio_mse_ordering():
    of, os_ = desk_means("optimal_variance", "mse")
    gf, gs = desk_means("global_min_variance", "mse")
    ok = bool(np.all(of < os_) and np.all(gf < gs))
    detail = ("optimal " + ", ".join(f"{a:.4g}<{b:.4g}" for a, b in zip(of, os_))
              + "; global " + ", ".join(f"{a:.3g}<{b:.3g}" for a, b in zip(gf, gs)))
    report(9, "portfolio variance MSE ordering", ok, detail)


def test_criterion_10_equal_weight_parity():
    f, s = desk_means("equal_weight_variance", "mse")
    rel = np.abs(f - s) / np.maximum(f, s)
    report(10, "equal-weight MSE parity", bool(np.all(rel < 0.15)), "relative differences " + ", ".join(f"{r:.4f}" for r in rel))


def test_criterion_11_clt():
    t0 = time.perf_counter()
    rep = clt_check(K=1, p=20, n=400, reps=2000, seed=0, factor_var=4.0, loadings=np.ones((20, 1)))
    dt = time.perf_counter() - t0
    G = rep.analytic_G[0, 0]
    ok = abs(G - 2 * 1.0**4 * 4.0**2) < 1e-12 and rep.max_rel_dev < 0.15 and dt < 120
    report(11, "CLT variance check", ok,
           f"empirical {rep.empirical_cov[0, 0]:.3f} vs G={G:.3f}, deviation {rep.max_rel_dev:.3f} in {dt:.1f} s")


def test_criterion_12_hat_matrix():
    rng = np.random.default_rng(12)
    worst_tr = worst_idem = 0.0
    bound_ok = True
    for i in range(100):
        K = (1, 3, 10)[i % 3]
        H = hat_matrix(rng.standard_normal((K, 50)))
        worst_tr = max(worst_tr, abs(np.trace(H) - K))
        worst_idem = max(worst_idem, float(np.abs(H @ H - H).max()))
        s = H.sum()
        bound_ok &= -1e-10 <= s <= math.sqrt(K) * 50
    ok = worst_tr < 1e-8 and worst_idem < 1e-8 and bound_ok
    report(12, "hat-matrix identities", ok, f"|tr H - K| {worst_tr:.1e}, |H^2 - H| {worst_idem:.1e}, bound held {bound_ok}")


def test_criterion_13_markowitz():
    rng = np.random.default_rng(13)
    worst_c = worst_v = worst_g = 0.0
    beaten = 0
    for _ in range(20):
        p = int(rng.integers(3, 15))
        S = random_spd(rng, p)
        P = np.linalg.inv(S)
        mu = rng.normal(0.5, 0.5, p)
        gamma = float(rng.normal(0.5, 0.5))
        w = markowitz_weights(P, mu, gamma)
        worst_c = max(worst_c, abs(w.budget - 1), abs(w.weights @ mu - gamma))
        v = portfolio_variance(S, w)
        sc = portfolio_scalars(P, mu)
        worst_v = max(worst_v, abs(v / minimum_variance_closed_form(sc, gamma) - 1))
        # feasible probes: add directions orthogonal to both constraints
        N = np.linalg.svd(np.vstack([np.ones(p), mu]))[2][2:].T
        for _ in range(100):
            x = w.weights + N @ rng.standard_normal(N.shape[1])
            beaten += portfolio_variance(S, x) < v * (1 - 1e-12)
        g = global_min_variance_weights(P)
        worst_g = max(worst_g, abs(portfolio_variance(S, g) * sc.varphi - 1))
    ok = worst_c < 1e-10 and worst_v < 1e-10 and beaten == 0 and worst_g < 1e-10
    report(13, "Markowitz suite", ok,
           f"constraints {worst_c:.1e}, variance consistency {worst_v:.1e}, probes beating optimum {beaten}, "
           f"global-min vs 1/varphi {worst_g:.1e}")


def test_criterion_14_duplication():
    rng = np.random.default_rng(14)
    ok = True
    for d in range(1, 7):
        D = duplication_matrix(d)
        ok &= np.array_equal(D.pseudo_inverse @ D.matrix, np.eye(d * (d + 1) // 2))
        for _ in range(50):
            A = rng.standard_normal((d, d))
            A = A + A.T
            ok &= np.array_equal(D.matrix @ vech(A), vec(A))
    report(14, "duplication matrix", bool(ok), "D vech(A) == vec(A) and P_D D == I exactly for d = 1..6")


def test_criterion_15_determinism(tmp_path):
    args = ["simulate", "--n", "80", "--p-grid", "10,40,90", "--reps", "6", "--seed", "15", "--quiet"]
    dirs = []
    for workers in (1, 3):
        out = tmp_path / f"w{workers}"
        assert cli_main(args + ["--workers", str(workers), "--out", str(out)]) == 0
        dirs.append(out)
    files = sorted(f.name for f in dirs[0].glob("*.csv"))
    same = all((dirs[0] / f).read_bytes() == (dirs[1] / f).read_bytes() for f in files)
    ok = same and files == sorted(f.name for f in dirs[1].glob("*.csv")) and len(files) > 0
    report(15, "determinism across worker counts", ok, f"{len(files)} CSV files byte-identical: {same}")


if __name__ == "__main__":
    import tempfile

    failed = 0
    for name, fn in sorted((k, v) for k, v in dict(globals()).items() if k.startswith("test_criterion_")):
        try:
            if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
