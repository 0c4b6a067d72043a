"""Monte Carlo comparison of the factor and sample covariance estimators.

Each replication draws factor returns from a normal law, loadings from a
second normal law and idiosyncratic volatilities from a gamma law truncated
below, builds ``Y = B X + E`` and scores both estimators against the known
truth. Defaults are calibrated to a daily three-factor fit on 30 industry
portfolios (n = 756).

Random streams are keyed by ``(seed, replication)`` for the factor draw,
which is shared by every dimension in a replication, and by
``(seed, replication, p)`` for everything else. Results therefore do not
depend on how replications are scheduled across worker processes.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from scipy import stats

from .errors import (
    DegenerateFrontier,
    DegenerateInverse,
    DimensionMismatch,
    InvalidTarget,
    NoConvergence,
    NotPositiveDefinite,
    NotPSD,
    RejectionStall,
    SingularMatrix,
    UsageError,
)
from .estimators import (
    covariance_factor,
    covariance_sample,
    fit_factor_model,
    inverse_factor,
    inverse_generic,
    sample_mean,
    woodbury_inverse,
)
from .losses import ReferenceCovariance, frobenius_norm
from .portfolio import minimum_variance_closed_form, portfolio_scalars

logger = logging.getLogger(__name__)

METHODS = ("factor", "sample")
LOSS_METRICS = ("frobenius", "sigma_norm", "entropy", "inverse_frobenius")
VARIANCE_METRICS = ("optimal_variance", "global_min_variance", "equal_weight_variance")
ALL_METRICS = LOSS_METRICS + VARIANCE_METRICS

# (file stem, metric, statistic)
FIGURE_PANELS = (
    ("fig1a", "frobenius", "mean"),
    ("fig1b", "frobenius", "sd"),
    ("fig1c", "sigma_norm", "mean"),
    ("fig1d", "sigma_norm", "sd"),
    ("fig1e", "entropy", "mean"),
    ("fig1f", "entropy", "sd"),
    ("fig2a", "inverse_frobenius", "mean"),
    ("fig2b", "inverse_frobenius", "sd"),
    ("fig3a", "optimal_variance", "mse"),
    ("fig3b", "global_min_variance", "mse"),
    ("fig4", "equal_weight_variance", "mse"),
)

WORKERS_ENV = "FACTORCOV_WORKERS"

# Mean vector fed to the optimal-portfolio metric:
#   sample  - sample mean for both methods, so only the covariance differs
#   matched - factor plug-in mean B_hat f_bar for the factor method, sample mean otherwise
#   true    - the simulated mean B mu_f for both
PORTFOLIO_MEANS = ("sample", "matched", "true")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class CalibrationParams:
    mu_f: np.ndarray
    cov_f: np.ndarray
    mu_b: np.ndarray
    cov_b: np.ndarray
    gamma_shape: float
    gamma_scale: float
    sd_floor: float
    target_mean: float
    target_sd: float

    def __post_init__(self):
        for name in ("mu_f", "mu_b"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        for name in ("cov_f", "cov_b"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        K = self.mu_f.size
        if self.cov_f.shape != (K, K):
            raise DimensionMismatch(f"cov_f must be {K} x {K}, got {self.cov_f.shape}")
        if self.mu_b.size != K or self.cov_b.shape != (K, K):
            raise DimensionMismatch(f"loading parameters must have dimension {K}")
        for name in ("cov_f", "cov_b"):
            C = getattr(self, name)
            if not np.allclose(C, C.T) or np.linalg.eigvalsh(C).min() < -1e-12 * max(1.0, np.abs(C).max()):
                raise NotPSD(f"{name} is not symmetric positive semidefinite")
        if not (self.gamma_shape > 0 and self.gamma_scale > 0):
            raise UsageError("gamma shape and scale must be positive")
        if not self.sd_floor > 0:
            raise UsageError("sd_floor must be positive")

    @property
    def K(self) -> int:
        return self.mu_f.size

    def __eq__(self, other):
        if not isinstance(other, CalibrationParams):
            return NotImplemented
        return all(np.array_equal(getattr(self, f.name), getattr(other, f.name)) for f in fields(self))


def default_calibration() -> CalibrationParams:
    """Parameters of the three-factor fit used throughout the study."""
    return CalibrationParams(
        mu_f=[0.023558, 0.012989, 0.020714],
        cov_f=[
            [1.2507, -0.034999, -0.20419],
            [-0.034999, 0.31564, -0.0022526],
            [-0.20419, -0.0022526, 0.19303],
        ],
        mu_b=[0.78282, 0.51803, 0.41003],
        cov_b=[
            [0.029145, 0.023873, 0.010184],
            [0.023873, 0.053951, -0.006967],
            [0.010184, -0.006967, 0.086856],
        ],
        gamma_shape=3.3586,
        gamma_scale=0.1876,
        sd_floor=0.1950,
        target_mean=0.66081,
        target_sd=0.3275,
    )


def default_p_grid() -> tuple[int, ...]:
    return tuple(range(16, 1000, 20))


@dataclass(frozen=True)
class SimulationConfig:
    n: int = 756
    p_grid: tuple[int, ...] = field(default_factory=default_p_grid)
    K: int = 3
    replications: int = 500
    gamma_target: float = 0.10
    seed: int = 20080101
    calibration: CalibrationParams = field(default_factory=default_calibration)
    metrics: tuple[str, ...] = ALL_METRICS
    portfolio_mean: str = "sample"

    def __post_init__(self):
        object.__setattr__(self, "p_grid", tuple(int(p) for p in self.p_grid))
        if self.portfolio_mean not in PORTFOLIO_MEANS:
            raise UsageError(f"portfolio_mean must be one of {list(PORTFOLIO_MEANS)}, got {self.portfolio_mean!r}")
        bad = sorted(set(self.metrics) - set(ALL_METRICS))
        if bad:
            raise UsageError(f"unknown metrics {bad}; choose from {list(ALL_METRICS)}")
        # canonical order keeps raw arrays and output files stable
        object.__setattr__(self, "metrics", tuple(m for m in ALL_METRICS if m in set(self.metrics)))
        if self.K < 1:
            raise UsageError(f"K must be >= 1, got {self.K}")
        if self.n < self.K or self.n < 2:
            raise UsageError(f"need n >= max(K, 2), got n={self.n}, K={self.K}")
        if not self.p_grid:
            raise UsageError("p_grid is empty")
        if any(p < 1 for p in self.p_grid):
            raise UsageError(f"p_grid entries must be positive, got {list(self.p_grid)}")
        if any(b <= a for a, b in zip(self.p_grid, self.p_grid[1:])):
            raise UsageError("p_grid must be strictly ascending")
        if self.replications < 1:
            raise UsageError(f"replications must be >= 1, got {self.replications}")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        if self.calibration.K != self.K:
            raise UsageError(f"calibration has {self.calibration.K} factors but K={self.K}")
        if not self.metrics:
            raise UsageError("no metrics enabled")


# ---------------------------------------------------------------------------
# calibration of the truncated gamma law


def _approx_partial_moments(alpha, beta, floor):
    q = stats.gamma.cdf(floor, alpha, scale=beta)
    return q, 0.5 * floor * q, 0.5 * floor**2 * q


def _exact_partial_moments(alpha, beta, floor):
    # E[X 1{X<c}] = a b P(G(a+1) < c),  E[X^2 1{X<c}] = a (a+1) b^2 P(G(a+2) < c)
    q = stats.gamma.cdf(floor, alpha, scale=beta)
    m1 = alpha * beta * stats.gamma.cdf(floor, alpha + 1, scale=beta)
    m2 = alpha * (alpha + 1) * beta**2 * stats.gamma.cdf(floor, alpha + 2, scale=beta)
    return q, m1, m2


def calibrate_truncated_gamma(
    target_mean: float,
    target_sd: float,
    floor: float,
    *,
    exact: bool = False,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> tuple[float, float]:
    """Gamma shape and scale whose law conditioned on ``X >= floor`` has the target moments.

    Starts from the untruncated moment match ``(mean^2/sd^2, sd^2/mean)`` and
    iterates: with ``q = P(X < floor)`` under the current parameters, the
    untruncated first two moments must satisfy

        mean_untrunc = target_mean (1 - q) + E[X; X < floor]
        second_untrunc = (target_mean^2 + target_sd^2)(1 - q) + E[X^2; X < floor]

    By default the below-floor contributions are approximated by
    ``floor/2 * q`` and ``floor^2/2 * q``; ``exact=True`` uses the exact
    incomplete-gamma expressions instead.
    """
    if not target_sd > 0:
        raise InvalidTarget(f"target sd must be positive, got {target_sd}")
    if floor < 0:
        raise InvalidTarget(f"floor must be non-negative, got {floor}")
    if not target_mean > floor:
        raise InvalidTarget(f"target mean {target_mean} must exceed the floor {floor}")

    second = target_mean**2 + target_sd**2
    alpha = target_mean**2 / target_sd**2
    beta = target_sd**2 / target_mean
    if floor == 0:
        return alpha, beta

    partial = _exact_partial_moments if exact else _approx_partial_moments
    for _ in range(max_iter):
        q, below1, below2 = partial(alpha, beta, floor)
        m1 = target_mean * (1 - q) + below1
        m2 = second * (1 - q) + below2
        var = m2 - m1**2
        if not (m1 > 0 and var > 0):
            raise NoConvergence(f"moment equations became infeasible (mean {m1:.4g}, variance {var:.4g})")
        new_beta = var / m1
        new_alpha = m1 / new_beta
        done = abs(new_alpha - alpha) <= tol * abs(alpha) and abs(new_beta - beta) <= tol * abs(beta)
        alpha, beta = new_alpha, new_beta
        if done:
            return float(alpha), float(beta)
    raise NoConvergence(f"no convergence after {max_iter} iterations (alpha={alpha:.6g}, beta={beta:.6g})")


# ---------------------------------------------------------------------------
# samplers


def sample_mvn(mean, cov, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` i.i.d. normal draws as columns of a ``dim x count`` matrix.

    Uses a symmetric eigen factorization so singular (PSD) covariances work.
    """
    mean = np.asarray(mean, dtype=float).ravel()
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    d = mean.size
    if cov.shape != (d, d):
        raise DimensionMismatch(f"covariance must be {d} x {d}, got {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
        raise NotPSD("covariance is not symmetric")
    w, V = np.linalg.eigh(0.5 * (cov + cov.T))
    if w.size and w[0] < -1e-10 * max(1.0, w[-1]):
        raise NotPSD(f"covariance has negative eigenvalue {w[0]:.3e}")
    root = V * np.sqrt(np.clip(w, 0.0, None))
    z = rng.standard_normal((d, count))
    return mean[:, None] + root @ z


def sample_truncated_gamma(alpha: float, beta: float, floor: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draws from ``Gamma(shape=alpha, scale=beta)`` conditioned on ``X >= floor``."""
    if not (alpha > 0 and beta > 0):
        raise UsageError("gamma shape and scale must be positive")
    accept = stats.gamma.sf(floor, alpha, scale=beta) if floor > 0 else 1.0
    if accept < 1e-6:
        raise RejectionStall(f"acceptance probability {accept:.3e} is below 1e-6")
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        batch = int(math.ceil(need / accept * 1.1)) + 16
        draw = rng.gamma(alpha, beta, size=batch)
        keep = draw[draw >= floor][:need]
        out[filled : filled + keep.size] = keep
        filled += keep.size
    return out


# ---------------------------------------------------------------------------
# one replication


@dataclass(frozen=True)
class ReplicationDraw:
    """One simulated panel with its ground truth."""

    X: np.ndarray  # K x n factors
    B: np.ndarray  # p x K loadings
    sigmas: np.ndarray  # p idiosyncratic standard deviations
    Y: np.ndarray  # p x n returns
    cov_f: np.ndarray
    mu_f: np.ndarray

    @property
    def Sigma(self) -> np.ndarray:
        S = self.B @ self.cov_f @ self.B.T
        S[np.diag_indices_from(S)] += self.sigmas**2
        return 0.5 * (S + S.T)

    @property
    def Sigma_inv(self) -> np.ndarray:
        return woodbury_inverse(self.B, self.cov_f, self.sigmas**2)

    @property
    def mu(self) -> np.ndarray:
        return self.B @ self.mu_f


def _factor_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, rep)))


def _panel_rng(seed: int, rep: int, p: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, rep, p)))


def draw_factors(config: SimulationConfig, rng: np.random.Generator) -> np.ndarray:
    cal = config.calibration
    return sample_mvn(cal.mu_f, cal.cov_f, config.n, rng)


def draw_panel(
    config: SimulationConfig,
    p: int,
    rng: np.random.Generator,
    factors: np.ndarray | None = None,
    *,
    noise: bool = True,
) -> ReplicationDraw:
    """Simulate one ``p``-dimensional panel.

    ``factors`` defaults to a fresh draw from ``rng``. ``noise=False`` sets
    the idiosyncratic errors to zero while keeping the drawn volatilities in
    the ground truth.
    """
    cal = config.calibration
    X = draw_factors(config, rng) if factors is None else np.asarray(factors, dtype=float)
    if X.shape != (config.K, config.n):
        raise DimensionMismatch(f"factors must be {config.K} x {config.n}, got {X.shape}")
    B = sample_mvn(cal.mu_b, cal.cov_b, p, rng).T
    sigmas = sample_truncated_gamma(cal.gamma_shape, cal.gamma_scale, cal.sd_floor, p, rng)
    if noise:
        E = sigmas[:, None] * rng.standard_normal((p, config.n))
    else:
        E = np.zeros((p, config.n))
    return ReplicationDraw(X=X, B=B, sigmas=sigmas, Y=B @ X + E, cov_f=cal.cov_f, mu_f=cal.mu_f)


_UNDEFINED = (NotPositiveDefinite, SingularMatrix, DegenerateFrontier, DegenerateInverse)


def evaluate_draw(
    draw: ReplicationDraw,
    gamma: float,
    metrics: Iterable[str] = ALL_METRICS,
    portfolio_mean: str = "sample",
) -> dict:
    """Score both estimators on one draw.

    Returns ``{(metric, method): value}``; undefined values are NaN. Variance
    metrics hold the signed error ``estimate - truth``. ``portfolio_mean``
    selects the mean estimate used for the optimal portfolio (see
    ``PORTFOLIO_MEANS``).
    """
    metrics = set(metrics)
    Sigma = draw.Sigma
    ref = ReferenceCovariance(Sigma)
    p = Sigma.shape[0]

    fit = fit_factor_model(draw.X, draw.Y)
    est = {"factor": covariance_factor(fit).matrix, "sample": covariance_sample(draw.Y).matrix}
    ybar = sample_mean(draw.Y)
    means = {
        "sample": {"factor": ybar, "sample": ybar},
        "matched": {"factor": fit.mean, "sample": ybar},
        "true": {"factor": draw.mu, "sample": draw.mu},
    }[portfolio_mean]

    inverses: dict[str, np.ndarray | None] = {}

    def inverse(method):
        if method not in inverses:
            try:
                inverses[method] = inverse_factor(fit) if method == "factor" else inverse_generic(est["sample"])
            except _UNDEFINED:
                inverses[method] = None
        return inverses[method]

    truth_inv = draw.Sigma_inv if metrics & {"inverse_frobenius", "optimal_variance", "global_min_variance"} else None
    true_sc = portfolio_scalars(truth_inv, draw.mu) if truth_inv is not None else None

    def guarded(fn):
        try:
            return float(fn())
        except _UNDEFINED:
            return math.nan

    out = {}
    ew = np.full(p, 1.0 / p)
    for method in METHODS:
        S = est[method]
        if "frobenius" in metrics:
            out["frobenius", method] = frobenius_norm(S - Sigma)
        if "sigma_norm" in metrics:
            out["sigma_norm", method] = guarded(lambda: ref.sigma_norm(S - Sigma))
        if "entropy" in metrics:
            out["entropy", method] = guarded(lambda: ref.entropy_loss(S)) if (method == "factor" or p < draw.Y.shape[1]) else math.nan
        if "equal_weight_variance" in metrics:
            out["equal_weight_variance", method] = float(ew @ S @ ew - ew @ Sigma @ ew)

        P = inverse(method) if metrics & {"inverse_frobenius", "optimal_variance", "global_min_variance"} else None
        if "inverse_frobenius" in metrics:
            out["inverse_frobenius", method] = math.nan if P is None else frobenius_norm(P - truth_inv)
        if metrics & {"optimal_variance", "global_min_variance"}:
            sc = None if P is None else portfolio_scalars(P, means[method])
            if "optimal_variance" in metrics:
                out["optimal_variance", method] = (
                    math.nan
                    if sc is None
                    else guarded(
                        lambda: minimum_variance_closed_form(sc, gamma) - minimum_variance_closed_form(true_sc, gamma)
                    )
                )
            if "global_min_variance" in metrics:
                out["global_min_variance", method] = (
                    math.nan if sc is None or not sc.varphi > 0 else 1.0 / sc.varphi - 1.0 / true_sc.varphi
                )
    return out


def run_replication(
    config: SimulationConfig,
    p: int,
    rng: np.random.Generator,
    *,
    factors: np.ndarray | None = None,
    noise: bool = True,
) -> dict:
    draw = draw_panel(config, p, rng, factors, noise=noise)
    return evaluate_draw(draw, config.gamma_target, config.metrics, config.portfolio_mean)


def _replication_task(args) -> np.ndarray:
    config, p, rep = args
    factors = draw_factors(config, _factor_rng(config.seed, rep))
    rec = run_replication(config, p, _panel_rng(config.seed, rep, p), factors=factors)
    return np.array([[rec[m, meth] for meth in METHODS] for m in config.metrics])


# ---------------------------------------------------------------------------
# experiment


@dataclass(frozen=True)
class Aggregate:
    mean: float
    sd: float
    mse: float
    count: int
    n_undefined: int


@dataclass
class SimulationResult:
    """Per-replication values and their aggregates.

    ``raw`` has shape ``(len(p_grid), replications, len(metrics), 2)``, the
    last axis ordered as ``METHODS``; NaN marks an undefined value.
    """

    config: SimulationConfig
    raw: np.ndarray

    @property
    def p_grid(self) -> tuple[int, ...]:
        return self.config.p_grid

    @property
    def metrics(self) -> tuple[str, ...]:
        return self.config.metrics

    def values(self, p: int, metric: str, method: str) -> np.ndarray:
        i = self.p_grid.index(p)
        return self.raw[i, :, self.metrics.index(metric), METHODS.index(method)]

    def aggregate(self, p: int, metric: str, method: str) -> Aggregate:
        v = self.values(p, metric, method)
        ok = v[~np.isnan(v)]
        n_bad = int(v.size - ok.size)
        if ok.size == 0:
            return Aggregate(math.nan, math.nan, math.nan, 0, n_bad)
        sd = float(np.std(ok, ddof=1)) if ok.size > 1 else math.nan
        mse = float(np.mean(ok**2)) if metric in VARIANCE_METRICS else math.nan
        return Aggregate(float(np.mean(ok)), sd, mse, int(ok.size), n_bad)

    def table(self, metric: str, stat: str) -> dict[str, list[float]]:
        """Column-oriented series over ``p_grid`` for each method."""
        return {
            method: [getattr(self.aggregate(p, metric, method), stat) for p in self.p_grid] for method in METHODS
        }


def _workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                workers = int(env)
            except ValueError as exc:
                raise UsageError(f"{WORKERS_ENV}={env!r} is not an integer") from exc
        else:
            workers = 1
    if workers < 1:
        raise UsageError(f"worker count must be >= 1, got {workers}")
    return workers


def run_experiment(
    config: SimulationConfig,
    *,
    workers: int | None = None,
    progress: Callable[[int, int, int], None] | None = None,
) -> SimulationResult:
    """Run ``replications`` draws for every ``p`` in the grid.

    ``workers`` defaults to the ``FACTORCOV_WORKERS`` environment variable,
    else 1. ``progress(i, total, p)`` is called after each dimension.
    """
    nw = _workers(workers)
    raw = np.empty((len(config.p_grid), config.replications, len(config.metrics), len(METHODS)))
    pool = ProcessPoolExecutor(max_workers=nw) if nw > 1 else None
    try:
        for i, p in enumerate(config.p_grid):
            tasks = [(config, p, rep) for rep in range(config.replications)]
            if pool is None:
                results = map(_replication_task, tasks)
            else:
                chunk = max(1, config.replications // (4 * nw))
                results = pool.map(_replication_task, tasks, chunksize=chunk)
            for rep, rec in enumerate(results):
                raw[i, rep] = rec
            if progress is not None:
                progress(i + 1, len(config.p_grid), p)
    finally:
        if pool is not None:
            pool.shutdown()
    return SimulationResult(config, raw)


def stderr_progress(i: int, total: int, p: int) -> None:
    print(f"[{i}/{total}] p={p} done", file=sys.stderr, flush=True)


# ---------------------------------------------------------------------------
# output


def format_value(x: float) -> str:
    return "NA" if x is None or not math.isfinite(x) else format(x, ".17g")


def parse_value(s: str) -> float:
    return math.nan if s == "NA" else float(s)


def emit_figure_tables(result: SimulationResult, out_dir) -> list[Path]:
    """Write one CSV per figure panel plus a long-format ``summary.csv``.

    Panel files have a ``p`` column followed by ``<method>_<metric>_<stat>``
    columns. Undefined cells are written as ``NA``.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc

    written = []
    for stem, metric, stat in FIGURE_PANELS:
        if metric not in result.metrics:
            continue
        cols = result.table(metric, stat)
        header = ["p"] + [f"{m}_{metric}_{stat}" for m in METHODS]
        rows = [[str(p)] + [format_value(cols[m][i]) for m in METHODS] for i, p in enumerate(result.p_grid)]
        written.append(_write_csv(out / f"{stem}.csv", header, rows))

    header = ["p", "metric", "method", "mean", "sd", "mse", "count", "n_undefined"]
    rows = []
    for p in result.p_grid:
        for metric in result.metrics:
            for method in METHODS:
                a = result.aggregate(p, metric, method)
                rows.append(
                    [str(p), metric, method, format_value(a.mean), format_value(a.sd), format_value(a.mse),
                     str(a.count), str(a.n_undefined)]
                )
    written.append(_write_csv(out / "summary.csv", header, rows))
    return written


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> Path:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_figure_table(path) -> dict[str, list[float]]:
    """Read a panel CSV back into ``{column: values}`` (``NA`` becomes NaN)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols: dict[str, list[float]] = {h: [] for h in header}
        for row in reader:
            for h, v in zip(header, row):
                cols[h].append(parse_value(v))
    return cols


# ---------------------------------------------------------------------------
# flat key = value config files

_CAL_VECTORS = ("mu_f", "mu_b")
_CAL_MATRICES = ("cov_f", "cov_b")
_CAL_SCALARS = ("gamma_shape", "gamma_scale", "sd_floor", "target_mean", "target_sd")


def _fmt_list(xs) -> str:
    return ", ".join(format(float(x), ".17g") for x in xs)


def config_to_text(config: SimulationConfig, comments: Iterable[str] = ()) -> str:
    cal = config.calibration
    lines = [f"# {c}" for c in comments]
    lines += [
        f"n = {config.n}",
        f"p_grid = {', '.join(str(p) for p in config.p_grid)}",
        f"K = {config.K}",
        f"replications = {config.replications}",
        f"gamma_target = {config.gamma_target!r}",
        f"seed = {config.seed}",
        f"metrics = {', '.join(config.metrics)}",
        f"portfolio_mean = {config.portfolio_mean}",
    ]
    for name in _CAL_VECTORS:
        lines.append(f"{name} = {_fmt_list(getattr(cal, name))}")
    for name in _CAL_MATRICES:
        lines.append(f"{name} = {'; '.join(_fmt_list(row) for row in getattr(cal, name))}")
    for name in _CAL_SCALARS:
        lines.append(f"{name} = {getattr(cal, name)!r}")
    return "\n".join(lines) + "\n"


def parse_p_grid(text: str) -> tuple[int, ...]:
    """``"16,36,56"`` or a range ``"16:1000:20"`` (stop exclusive)."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            grid = tuple(range(*parts))
        else:
            grid = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"cannot parse p grid {text!r}") from exc
    if not grid or any(p < 1 for p in grid):
        raise UsageError(f"p grid {text!r} must list positive dimensions")
    return grid


def _floats(text: str, key: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"config key {key!r}: cannot parse {text!r}") from exc


def _matrix(text: str, key: str) -> np.ndarray:
    rows = [_floats(r, key) for r in text.split(";") if r.strip()]
    if len({len(r) for r in rows}) != 1:
        raise UsageError(f"config key {key!r}: ragged matrix")
    return np.array(rows)


_INT_KEYS = {"n", "K", "replications", "seed"}
_CONFIG_KEYS = _INT_KEYS | {"p_grid", "gamma_target", "metrics", "portfolio_mean"} | set(_CAL_VECTORS + _CAL_MATRICES + _CAL_SCALARS)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into SimulationConfig keyword overrides."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{source}:{lineno}: unknown key {key!r}")
        raw[key] = value

    kw: dict = {}
    for key in _INT_KEYS & raw.keys():
        try:
            kw[key] = int(raw[key])
        except ValueError as exc:
            raise UsageError(f"{source}: key {key!r} must be an integer") from exc
    if "p_grid" in raw:
        kw["p_grid"] = parse_p_grid(raw["p_grid"])
    if "gamma_target" in raw:
        kw["gamma_target"] = _floats(raw["gamma_target"], "gamma_target")[0]
    if "portfolio_mean" in raw:
        kw["portfolio_mean"] = raw["portfolio_mean"]
    if "metrics" in raw:
        kw["metrics"] = tuple(m.strip() for m in raw["metrics"].split(",") if m.strip())

    cal_kw = {}
    for key in _CAL_VECTORS:
        if key in raw:
            cal_kw[key] = _floats(raw[key], key)
    for key in _CAL_MATRICES:
        if key in raw:
            cal_kw[key] = _matrix(raw[key], key)
    for key in _CAL_SCALARS:
        if key in raw:
            cal_kw[key] = _floats(raw[key], key)[0]
    if cal_kw:
        kw["calibration"] = cal_kw
    return kw


def build_config(overrides: dict) -> SimulationConfig:
    """SimulationConfig from parsed overrides; calibration keys patch the defaults."""
    overrides = dict(overrides)
    cal_kw = overrides.pop("calibration", None)
    if isinstance(cal_kw, dict):
        cal = default_calibration()
        overrides["calibration"] = replace(cal, **cal_kw)
    return SimulationConfig(**overrides)


def load_config(path) -> SimulationConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    return build_config(parse_config_text(text, str(path)))
