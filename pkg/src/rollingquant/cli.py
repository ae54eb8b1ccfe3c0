"""Command-line entry point.

Subcommands: gen-data, backtest, gradcheck, report. Exit codes: 0 success,
1 configuration error, 2 data error, 3 numeric/training error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from datetime import datetime
from pathlib import Path

import numpy as np

from .backtest import run_scenario
from .config import load_run_config
from .errors import ConfigError, DataError, NumericError
from .exports import write_dataset, write_ranking_csv, write_series_csv, write_trades_csv
from .marketdata import load_dataset
from .metrics import ReturnSeries, build_report, result_series
from .numerics import LstmModel, MlpModel, gradient_check
from .synthetic import generate_synthetic_market

GRADCHECK_TOLERANCE = 1e-5


def _load_or_generate(config):
    if config.source == "csv":
        return load_dataset(config.bars_path, config.fundamentals_path,
                            config.benchmark_path)
    return generate_synthetic_market(config.synthetic)


def cmd_gen_data(config, out=None):
    out = out if out is not None else sys.stdout
    if config.synthetic is None:
        raise ConfigError("gen-data requires data.source = synthetic")
    dataset = generate_synthetic_market(config.synthetic)
    write_dataset(dataset, config.out_dir)
    n_bars = sum(len(v) for v in dataset.bars.values())
    dates = dataset.calendar.dates
    bench = [dataset.benchmark[d] for d in dates]
    cumulative = bench[-1] / bench[0] - 1.0
    print(f"stocks: {len(dataset.bars)}", file=out)
    print(f"bars: {n_bars}", file=out)
    print(f"span: {dates[0].isoformat()}..{dates[-1].isoformat()}", file=out)
    print(f"benchmark_cumulative_return: {cumulative:.6f}", file=out)
    return 0


def cmd_backtest(config, out=None):
    out = out if out is not None else sys.stdout
    dataset = _load_or_generate(config)
    for strategy in config.strategies:
        result = run_scenario(dataset, strategy, config.scenario_config(strategy))
        strategy_dir = Path(config.out_dir) / strategy
        strategy_dir.mkdir(parents=True, exist_ok=True)
        series, benchmark = result_series(result)
        report = build_report(strategy, series, benchmark, config.risk_free_annual)
        (strategy_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
        write_series_csv(result, strategy_dir / "series.csv")
        write_trades_csv(result, strategy_dir / "trades.csv")
        write_ranking_csv(result.rankings, strategy_dir / "ranking.csv")
        print(f"{strategy}: net_return={report.net_return:.6f} "
              f"benchmark={report.benchmark_return:.6f} "
              f"sharpe={report.sharpe_ratio:.4f}", file=out)
    return 0


def cmd_gradcheck(seed: int, corruption: float = 0.0, out=None):
    out = out if out is not None else sys.stdout
    rng = np.random.default_rng(seed)
    batch = rng.normal(size=(5, 47))
    labels = rng.normal(size=5) * 0.05
    mlp_err = gradient_check(MlpModel.create(seed=seed), batch, labels,
                             corruption=corruption)
    seq = rng.normal(size=(5, 3, 47))
    lstm_err = gradient_check(LstmModel.create(seed=seed + 1), seq, labels,
                              corruption=corruption)
    ok = mlp_err <= GRADCHECK_TOLERANCE and lstm_err <= GRADCHECK_TOLERANCE
    print(f"mlp_max_relative_error: {mlp_err:.3e}", file=out)
    print(f"lstm_max_relative_error: {lstm_err:.3e}", file=out)
    print("PASS" if ok else "FAIL", file=out)
    return 0 if ok else 3


def cmd_report(series_path, out_path, strategy: str, risk_free_annual: float,
               out=None):
    """Re-render report.json from a previously written series.csv."""
    out = out if out is not None else sys.stdout
    dates = []
    portfolio_returns = []
    benchmark_returns = []
    with open(series_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            if row["portfolio_daily_return"] == "":
                continue
            dates.append(datetime.strptime(row["date"], "%Y-%m-%d").date())
            portfolio_returns.append(float(row["portfolio_daily_return"]))
            benchmark_returns.append(float(row["benchmark_daily_return"]))
    if not dates:
        raise DataError(f"{series_path}: no return rows")
    series = ReturnSeries(dates=dates, returns=np.array(portfolio_returns))
    benchmark = ReturnSeries(dates=dates, returns=np.array(benchmark_returns))
    report = build_report(strategy, series, benchmark, risk_free_annual)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text(report.to_json(), encoding="utf-8")
    print(f"wrote {out_path}", file=out)
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rollingquant",
        description="Deterministic monthly-rebalance factor-strategy backtester",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="generate synthetic market CSVs")
    gen.add_argument("--config", required=True)
    gen.add_argument("--out", default=None, help="output directory override")
    gen.add_argument("--seed", type=int, default=None, help="master seed override")

    bt = sub.add_parser("backtest", help="run scenario backtests")
    bt.add_argument("--config", required=True)
    bt.add_argument("--out", default=None)
    bt.add_argument("--seed", type=int, default=None)

    gc = sub.add_parser("gradcheck", help="verify analytic gradients")
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--corrupt", type=float, default=0.0, help=argparse.SUPPRESS)

    rep = sub.add_parser("report", help="re-render report.json from series.csv")
    rep.add_argument("--series", required=True)
    rep.add_argument("--out", required=True, help="path of the report.json to write")
    rep.add_argument("--strategy", default="unknown")
    rep.add_argument("--risk-free", type=float, default=0.03)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen-data":
            config = load_run_config(args.config, args.seed, args.out)
            return cmd_gen_data(config)
        if args.command == "backtest":
            config = load_run_config(args.config, args.seed, args.out)
            return cmd_backtest(config)
        if args.command == "gradcheck":
            return cmd_gradcheck(args.seed, args.corrupt)
        if args.command == "report":
            return cmd_report(args.series, args.out, args.strategy, args.risk_free)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
