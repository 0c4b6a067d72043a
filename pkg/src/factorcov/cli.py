"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .asymptotics import clt_check
from .data_io import align_and_excess, load_factor_csv, load_returns_csv, read_matrix_csv, write_matrix_csv
from .errors import DataError, NumericalError, UsageError
from .estimators import (
    CovarianceEstimate,
    covariance_factor,
    covariance_sample,
    fit_factor_model,
    inverse_factor,
    inverse_generic,
    woodbury_inverse,
)
from .losses import loss_report
from .portfolio import global_min_variance_weights, markowitz_weights, portfolio_scalars, portfolio_variance
from .simulation import (
    ALL_METRICS,
    PORTFOLIO_MEANS,
    build_config,
    calibrate_truncated_gamma,
    config_to_text,
    emit_figure_tables,
    format_value,
    parse_config_text,
    parse_p_grid,
    run_experiment,
    stderr_progress,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _write_pairs(path, pairs) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "value"])
        for k, v in pairs:
            w.writerow([k, format_value(v)])


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    overrides = {}
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        overrides = parse_config_text(text, str(path))
    if args.n is not None:
        overrides["n"] = args.n
    if args.p_grid is not None:
        overrides["p_grid"] = parse_p_grid(args.p_grid)
    if args.reps is not None:
        overrides["replications"] = args.reps
    if args.k is not None:
        overrides["K"] = args.k
    if args.gamma is not None:
        overrides["gamma_target"] = args.gamma
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.metrics is not None:
        overrides["metrics"] = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    if args.portfolio_mean is not None:
        overrides["portfolio_mean"] = args.portfolio_mean
    config = build_config(overrides)

    out = _out_dir(args.out)
    result = run_experiment(config, workers=args.workers, progress=None if args.quiet else stderr_progress)
    emit_figure_tables(result, out)
    comments = [
        "simulation manifest; rerun with: factorcov simulate --config <this file> --out <dir>",
        f"factorcov {__version__}, python {platform.python_version()}, numpy {np.__version__}, scipy {scipy.__version__}",
    ]
    (out / "manifest.cfg").write_text(config_to_text(config, comments), encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit


def cmd_fit(args) -> int:
    factors = load_factor_csv(args.factors, missing=args.missing)
    returns = load_returns_csv(args.returns, missing=args.missing)
    aligned = align_and_excess(factors, returns, subtract_rf=not args.excess)
    if aligned.dropped_factor_dates or aligned.dropped_return_dates:
        print(
            f"dropped {aligned.dropped_factor_dates} factor dates and "
            f"{aligned.dropped_return_dates} return dates not present in both files",
            file=sys.stderr,
        )
    out = _out_dir(args.out)
    if args.method in ("factor", "both"):
        fit = fit_factor_model(aligned.factors, aligned.returns)
        S = covariance_factor(fit)
        P = inverse_factor(fit)
        write_matrix_csv(fit.loadings, out / "loadings.csv")
        write_matrix_csv(fit.factor_cov, out / "factor_cov.csv")
        write_matrix_csv(fit.resid_diag, out / "resid_diag.csv")
        write_matrix_csv(S.matrix, out / "sigma.csv")
        write_matrix_csv(P, out / "sigma_inv.csv")
    if args.method in ("sample", "both"):
        S = covariance_sample(aligned.returns)
        write_matrix_csv(S.matrix, out / "sample_sigma.csv")
        if args.inverse:
            write_matrix_csv(inverse_generic(S), out / "sample_sigma_inv.csv")
    return EXIT_OK


# ---------------------------------------------------------------------------
# portfolio


def _vector(path) -> np.ndarray:
    M = read_matrix_csv(path)
    if M.ndim != 2 or 1 not in M.shape:
        raise DataError(f"{path}: expected a vector, got shape {M.shape}")
    return M.ravel()


def cmd_portfolio(args) -> int:
    if args.fit:
        d = Path(args.fit)
        B = read_matrix_csv(d / "loadings.csv")
        C = read_matrix_csv(d / "factor_cov.csv")
        resid = _vector(d / "resid_diag.csv")
        if B.shape[0] != resid.size or C.shape != (B.shape[1], B.shape[1]):
            raise DataError(f"{d}: inconsistent fit dimensions {B.shape}, {C.shape}, {resid.shape}")
        S = B @ C @ B.T + np.diag(resid)
        P = woodbury_inverse(B, C, resid)
    else:
        S = read_matrix_csv(args.sigma)
        P = inverse_generic(CovarianceEstimate(S))
    p = S.shape[0]
    if args.mu:
        mu = _vector(args.mu)
        if mu.size != p:
            raise DataError(f"{args.mu}: mean has length {mu.size}, covariance is {p} x {p}")
    elif args.global_min:
        mu = np.zeros(p)
    else:
        raise UsageError("--mu is required with --gamma")

    if args.global_min:
        w = global_min_variance_weights(P, no_short=args.no_short)
    else:
        w = markowitz_weights(P, mu, args.gamma, no_short=args.no_short)
    sc = portfolio_scalars(P, mu)
    pairs = [("varphi", sc.varphi), ("psi", sc.psi), ("phi", sc.phi), ("variance", portfolio_variance(S, w))]
    if not args.global_min:
        pairs.append(("gamma", args.gamma))
    pairs += [(f"w{i + 1}", x) for i, x in enumerate(w.weights)]
    _write_pairs(args.out, pairs)
    return EXIT_OK


# ---------------------------------------------------------------------------
# losses


def cmd_losses(args) -> int:
    est = read_matrix_csv(args.est)
    ref = read_matrix_csv(args.ref)
    if est.shape != ref.shape or est.ndim != 2 or est.shape[0] != est.shape[1]:
        raise DataError(f"estimate {est.shape} and reference {ref.shape} must be square and equal in shape")
    rep = loss_report(est, ref)
    _write_pairs(args.out, rep.as_dict().items())
    return EXIT_OK


# ---------------------------------------------------------------------------
# calibrate-gamma / clt-check


def cmd_calibrate(args) -> int:
    alpha, beta = calibrate_truncated_gamma(args.mean, args.sd, args.floor, exact=args.exact)
    print(f"alpha={alpha:.6f} beta={beta:.6f}")
    return EXIT_OK


def cmd_clt(args) -> int:
    rep = clt_check(args.k, args.p, args.n, args.reps, args.seed, factor_var=args.factor_var)
    emp = rep.empirical_cov
    G = rep.analytic_G
    if emp.shape == (1, 1):
        print(f"empirical_variance={emp[0, 0]:.6g} analytic_G={G[0, 0]:.6g}")
    else:
        np.set_printoptions(precision=6, suppress=True)
        print("empirical covariance:")
        print(emp)
        print("analytic G:")
        print(G)
    print(f"max_rel_dev={rep.max_rel_dev:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="factorcov", description="Factor-model covariance estimation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="run the Monte Carlo comparison and write figure CSVs")
    p.add_argument("--config", help="flat key = value config file (a previous manifest.cfg works)")
    p.add_argument("--n", type=int)
    p.add_argument("--p-grid", help="comma list or start:stop:step")
    p.add_argument("--reps", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--gamma", type=float, help="target return for the optimal portfolio, same units as the means")
    p.add_argument("--seed", type=int)
    p.add_argument("--metrics", help=f"comma list from {','.join(ALL_METRICS)}")
    p.add_argument("--portfolio-mean", choices=PORTFOLIO_MEANS)
    p.add_argument("--workers", type=int, help="worker processes (default: $FACTORCOV_WORKERS or 1)")
    p.add_argument("--out", required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the factor model to CSV data")
    p.add_argument("--factors", required=True)
    p.add_argument("--returns", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=("factor", "sample", "both"), default="factor")
    p.add_argument("--inverse", action="store_true", help="also write the inverse sample covariance")
    p.add_argument("--excess", action="store_true", help="returns are already in excess of RF")
    p.add_argument("--missing", choices=("reject", "drop"), default="reject")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("portfolio", help="mean-variance or global minimum-variance weights")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--sigma", help="covariance matrix CSV")
    src.add_argument("--fit", help="directory written by 'fit'")
    p.add_argument("--mu", help="mean vector CSV")
    tgt = p.add_mutually_exclusive_group(required=True)
    tgt.add_argument("--gamma", type=float)
    tgt.add_argument("--global-min", action="store_true")
    p.add_argument("--no-short", action="store_true", help="fail if any weight is negative")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_portfolio)

    p = sub.add_parser("losses", help="compare an estimate with a reference covariance")
    p.add_argument("--est", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_losses)

    p = sub.add_parser("calibrate-gamma", help="truncated gamma parameters for target moments")
    p.add_argument("--mean", type=float, default=0.66081)
    p.add_argument("--sd", type=float, default=0.3275)
    p.add_argument("--floor", type=float, default=0.1950)
    p.add_argument("--exact", action="store_true", help="use exact truncated moments")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("clt-check", help="Monte Carlo check of the limiting covariance")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--p", type=int, default=20)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--factor-var", type=float, default=4.0)
    p.set_defaults(func=cmd_clt)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
