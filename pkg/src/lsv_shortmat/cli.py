"""Command-line interface.

Subcommands:

* ``table1``  - closed-form smile parameters of the bounded-tanh benchmark
  model on the three benchmark correlations.
* ``smile``   - asymptotic implied vol per strike, from the quadratic
  expansion and from the full rate-function solve.
* ``rate``    - rate-function values and minimiser diagnostics per strike.
* ``mc``      - Monte Carlo implied-vol smile with error bands.
* ``compare`` - asymptotics and Monte Carlo joined, with z-scores.

Model parameters come from a JSON file (--model); run parameters are flags.
The effective configuration is echoed to stderr for reproducibility.  Output
is RFC-4180 CSV with '.' decimals, written to --out or stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .mc_engine import McConfig, default_strike_grid, simulate_paths, smile_from_mc, smile_rows_to_csv
from .model import (
    LognormalVolOfVol,
    LsvModel,
    TanhLocalVol,
    load_model,
    model_to_dict,
    vix_spot,
)
from .rate_solver import european_rate, rate_to_impvol, vix_rate
from .smile import (
    SmileExpansion,
    european_expansion_heston_type,
    european_expansion_sabr_type,
    vix_expansion_heston_type,
    vix_expansion_sabr_type,
)

__all__ = ["main"]

_DEF_PATHS = 100_000
_DEF_STEPS = 200
_DEF_SEED = 12345
_DEF_MATURITY = {"european": 1.0 / 12.0, "vix": 1.0 / 52.0}

TABLE1_HEADER = ["rho", "sigma_e_atm", "s_e", "kappa_e", "sigma_vix_atm", "s_vix", "kappa_vix"]
SMILE_HEADER = ["strike", "log_moneyness", "iv_expansion", "iv_rate"]
RATE_HEADER = ["strike", "log_moneyness", "rate", "minimizer_y", "minimizer_z", "iterations", "converged"]
COMPARE_HEADER = ["strike", "log_moneyness", "iv_expansion", "iv_rate",
                  "mc_implied_vol", "mc_iv_std_error", "diff", "z_score"]


def _expansion_for(model: LsvModel, product: str) -> SmileExpansion:
    lognormal = isinstance(model.vol_of_vol, LognormalVolOfVol)
    if product == "european":
        return european_expansion_sabr_type(model) if lognormal else european_expansion_heston_type(model)
    return vix_expansion_sabr_type(model) if lognormal else vix_expansion_heston_type(model)


def _reference_level(model: LsvModel, product: str) -> float:
    return model.s0 if product == "european" else vix_spot(model)


def _strike_grid(args, reference: float) -> np.ndarray:
    if args.kcount < 1:
        raise SystemExit("--kcount must be at least 1")
    if args.kmin >= args.kmax:
        raise SystemExit("--kmin must be below --kmax")
    if args.kspace == "log":
        ks = np.linspace(args.kmin, args.kmax, args.kcount)
        return reference * np.exp(ks)
    return np.linspace(reference * math.exp(args.kmin), reference * math.exp(args.kmax), args.kcount)


def _write_csv(header, rows, out_path: str | None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _write_text(buf.getvalue(), out_path)


def _write_text(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _echo_config(args, model: LsvModel | None) -> None:
    eff = {k: v for k, v in vars(args).items() if k not in ("func",)}
    if model is not None:
        eff["model"] = model_to_dict(model)
    print(json.dumps({"effective_config": eff}, sort_keys=True), file=sys.stderr)


def _rate_point(model: LsvModel, product: str, strike: float):
    if product == "european":
        return european_rate(model, strike)
    return vix_rate(model, strike)


def _iv_rate_column(model: LsvModel, product: str, expansion: SmileExpansion, strike: float, log_m: float) -> float:
    if abs(log_m) < 1e-12:
        return expansion.atm
    return rate_to_impvol(_rate_point(model, product, strike).rate, log_m)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_table1(args) -> int:
    _echo_config(args, None)
    model_base = dict(
        s0=1.0, v0=0.1,
        local_vol=TanhLocalVol(f0=1.0, f1=-0.5, x0=0.0),
        vol_of_vol=LognormalVolOfVol(sigma=2.0),
    )
    rows = []
    for rho in (-0.7, 0.0, 0.7):
        model = LsvModel(rho=rho, **model_base)
        eur = european_expansion_sabr_type(model)
        vix = vix_expansion_sabr_type(model)
        rows.append([
            f"{rho:g}",
            f"{eur.atm:.3f}", f"{eur.skew:.3f}", f"{eur.convexity:.3f}",
            f"{vix.atm:.3f}", f"{vix.skew:.3f}", f"{vix.convexity:.3f}",
        ])
    _write_csv(TABLE1_HEADER, rows, args.out)
    return 0


def _cmd_smile(args) -> int:
    model = load_model(args.model)
    _echo_config(args, model)
    expansion = _expansion_for(model, args.product)
    reference = _reference_level(model, args.product)
    rows = []
    for strike in _strike_grid(args, reference):
        log_m = math.log(strike / reference)
        iv_exp = expansion.evaluate(log_m)
        iv_rate = _iv_rate_column(model, args.product, expansion, strike, log_m)
        rows.append([f"{strike:.10g}", f"{log_m:.10g}", f"{iv_exp:.10g}", f"{iv_rate:.10g}"])
    _write_csv(SMILE_HEADER, rows, args.out)
    return 0


def _cmd_rate(args) -> int:
    model = load_model(args.model)
    _echo_config(args, model)
    reference = _reference_level(model, args.product)
    rows = []
    for strike in _strike_grid(args, reference):
        log_m = math.log(strike / reference)
        pt = _rate_point(model, args.product, strike)
        rows.append([
            f"{strike:.10g}", f"{log_m:.10g}", f"{pt.rate:.10g}",
            f"{pt.minimizer_y:.10g}", f"{pt.minimizer_z:.10g}",
            str(pt.iterations), str(pt.converged).lower(),
        ])
    _write_csv(RATE_HEADER, rows, args.out)
    return 0


def _mc_config(args) -> McConfig:
    maturity = args.maturity if args.maturity is not None else _DEF_MATURITY[args.product]
    return McConfig(n_paths=args.paths, n_steps=args.steps, maturity=maturity, seed=args.seed)


def _cmd_mc(args) -> int:
    model = load_model(args.model)
    _echo_config(args, model)
    config = _mc_config(args)
    samples = simulate_paths(model, config, threads=args.threads)
    reference = _reference_level(model, args.product)
    if args.kmin is not None and args.kmax is not None:
        strikes = _strike_grid(args, reference)
    else:
        strikes = default_strike_grid(samples, args.product, args.kcount)
    rows = smile_from_mc(model, config, strikes, args.product, samples=samples)
    _write_text(smile_rows_to_csv(rows), args.out)
    return 0


def _cmd_compare(args) -> int:
    model = load_model(args.model)
    _echo_config(args, model)
    config = _mc_config(args)
    samples = simulate_paths(model, config, threads=args.threads)
    reference = _reference_level(model, args.product)
    if args.kmin is not None and args.kmax is not None:
        strikes = _strike_grid(args, reference)
    else:
        strikes = default_strike_grid(samples, args.product, args.kcount)
    mc_rows = smile_from_mc(model, config, strikes, args.product, samples=samples)
    expansion = _expansion_for(model, args.product)
    rows = []
    for point in mc_rows:
        log_m = point.log_moneyness
        iv_exp = expansion.evaluate(log_m)
        iv_rate = _iv_rate_column(model, args.product, expansion, point.strike, log_m)
        if point.skip_reason is None:
            band = point.iv_high - point.implied_vol
            diff = point.implied_vol - iv_exp
            z = diff / band if band > 0.0 else math.nan
            mc_iv, mc_se = point.implied_vol, band
        else:
            mc_iv = mc_se = diff = z = math.nan
        rows.append([
            f"{point.strike:.10g}", f"{log_m:.10g}", f"{iv_exp:.10g}", f"{iv_rate:.10g}",
            f"{mc_iv:.10g}", f"{mc_se:.10g}", f"{diff:.10g}", f"{z:.10g}",
        ])
    _write_csv(COMPARE_HEADER, rows, args.out)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _default_threads() -> int:
    env = os.environ.get("LSV_SHORTMAT_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _add_common(parser, need_model: bool, need_grid: bool, need_mc: bool) -> None:
    if need_model:
        parser.add_argument("--model", required=True, help="model JSON file")
        parser.add_argument("--product", choices=("european", "vix"), default="european")
    if need_grid:
        parser.add_argument("--kmin", type=float, default=None, help="lowest log-moneyness")
        parser.add_argument("--kmax", type=float, default=None, help="highest log-moneyness")
        parser.add_argument("--kcount", type=int, default=21, help="number of strikes")
        parser.add_argument("--kspace", choices=("log", "linear"), default="log")
    if need_mc:
        parser.add_argument("--paths", type=int, default=_DEF_PATHS)
        parser.add_argument("--steps", type=int, default=_DEF_STEPS)
        parser.add_argument("--seed", type=int, default=_DEF_SEED)
        parser.add_argument("--maturity", type=float, default=None,
                            help="years; defaults to 1/12 (european) or 1/52 (vix)")
        parser.add_argument("--threads", type=int, default=_default_threads())
    parser.add_argument("--out", default=None, help="output CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsv-shortmat",
        description="Short-maturity European/VIX smile asymptotics and Monte Carlo validation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table1", help="benchmark-model smile parameters (closed forms)")
    _add_common(p, need_model=False, need_grid=False, need_mc=False)
    p.set_defaults(func=_cmd_table1)

    # smile/rate need concrete default bounds; mc/compare derive theirs from
    # sample quantiles when none are given
    p = sub.add_parser("smile", help="asymptotic smile: expansion and rate-solver columns")
    _add_common(p, need_model=True, need_grid=True, need_mc=False)
    p.set_defaults(func=_cmd_smile, kmin=-0.3, kmax=0.3)

    p = sub.add_parser("rate", help="rate-function values per strike")
    _add_common(p, need_model=True, need_grid=True, need_mc=False)
    p.set_defaults(func=_cmd_rate, kmin=-0.3, kmax=0.3)

    p = sub.add_parser("mc", help="Monte Carlo implied-vol smile")
    _add_common(p, need_model=True, need_grid=True, need_mc=True)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("compare", help="asymptotics vs Monte Carlo")
    _add_common(p, need_model=True, need_grid=True, need_mc=True)
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
