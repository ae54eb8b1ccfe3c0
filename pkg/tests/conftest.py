"""Shared fixtures: hand-built micro markets and one mid-size generated one."""

from datetime import date as Date
from datetime import timedelta

import pytest

from rollingquant.marketdata import (
    FundamentalSnapshot,
    MarketDataset,
    TradeBar,
    TradingCalendar,
)
from rollingquant.synthetic import SyntheticMarketConfig, generate_synthetic_market


def weekdays(start: Date, end: Date):
    out = []
    d = start
    one = timedelta(days=1)
    while d <= end:
        if d.weekday() < 5:
            out.append(d)
        d += one
    return out


def make_bar(stock_id, d, close, prev_close=None, shares=10.0,
             turnover=0.02, suspended=False):
    return TradeBar(
        stock_id=stock_id,
        date=d,
        close=close,
        prev_close=close if prev_close is None else prev_close,
        volume=turnover * shares,
        turnover_ratio=turnover,
        market_cap=close * shares,
        is_suspended=suspended,
    )


def make_snapshot(stock_id, d, **overrides):
    fields = dict(
        net_profit=100.0,
        non_recurring_gain_loss=10.0,
        net_assets=500.0,
        total_assets=1500.0,
        avg_total_assets=1500.0,
        long_term_debt=250.0,
        operating_revenue=700.0,
        operate_income=105.0,
        gross_profit=210.0,
        net_cash_flow=120.0,
        net_operate_cash_flow=130.0,
        net_profit_growth=0.05,
        cash=100.0,
        current_assets=300.0,
        current_liabilities=150.0,
        equity=500.0,
        industry_code=1,
    )
    fields.update(overrides)
    return FundamentalSnapshot(stock_id=stock_id, date=d, **fields)


def build_market(bars, benchmark, fundamentals=None):
    """Dataset from explicit pieces; calendar = union of bar/benchmark dates."""
    dates = set(benchmark)
    for by_date in bars.values():
        dates.update(by_date)
    return MarketDataset(
        bars=bars,
        fundamentals=fundamentals or {},
        benchmark=dict(benchmark),
        calendar=TradingCalendar(sorted(dates)),
    )


def flat_market(stock_prices, start=Date(2014, 1, 1), end=Date(2015, 12, 31),
                shares=10.0, bench_level=3000.0, with_fundamentals=True):
    """Constant-price weekday market, one quarterly snapshot stream per stock."""
    dates = weekdays(start, end)
    bars = {}
    fundamentals = {}
    for stock_id, price in stock_prices.items():
        bars[stock_id] = {d: make_bar(stock_id, d, price, shares=shares) for d in dates}
        if with_fundamentals:
            fundamentals[stock_id] = [
                make_snapshot(stock_id, d) for d in dates[::63]
            ]
    benchmark = {d: bench_level for d in dates}
    return build_market(bars, benchmark, fundamentals)


@pytest.fixture(scope="session")
def crash_market():
    """60-stock generated market ending in a 6-month crash."""
    return generate_synthetic_market(SyntheticMarketConfig(
        seed=1, n_stocks=60, start=Date(2014, 1, 1), end=Date(2015, 12, 31),
        regime="crash", planted_signal_strength=0.6,
    ))


@pytest.fixture(scope="session")
def calendar_2015():
    return TradingCalendar(weekdays(Date(2015, 1, 1), Date(2015, 12, 31)))
