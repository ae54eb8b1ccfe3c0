"""Per-stock factor computation and cross-sectional panel assembly.

47 factors per stock per action day. Trailing "months" are fixed trading-day
windows: 1/3/6/12 months = 21/63/126/252 days; the 2-year turnover baseline
uses up to 504 days (at least 252 required). Missing or non-computable
values are masked and later imputed with the cross-sectional median.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date as Date

import numpy as np

from .errors import ValidationError
from .marketdata import MarketDataset

FACTOR_NAMES = (
    "EP", "LN_PRICE", "EP_CUT", "BP", "SP", "NCFP", "OCFP", "G_PE",
    "ROE", "ROA", "GROSS_MARGIN", "PROFIT_MARGIN", "ASSET_TURNOVER",
    "OP_CASHFLOW_RATIO", "FIN_LEVERAGE", "DEBT_EQUITY", "CASH_RATIO",
    "CURRENT_RATIO", "LN_MCAP",
    "RET_1M", "RET_3M", "RET_6M", "RET_12M",
    "RETTO_MEAN_1M", "RETTO_MEAN_3M", "RETTO_MEAN_6M", "RETTO_MEAN_12M",
    "RETTO_DECAY_1M", "RETTO_DECAY_3M", "RETTO_DECAY_6M", "RETTO_DECAY_12M",
    "RET_STD_1M", "RET_STD_3M", "RET_STD_6M", "RET_STD_12M",
    "TO_1M_MINUS1", "TO_3M_MINUS1", "TO_6M_MINUS1", "TO_12M_MINUS1",
    "TO_REL2Y_1M", "TO_REL2Y_3M", "TO_REL2Y_6M", "TO_REL2Y_12M",
    "BETA", "MACD", "DEA", "DIF",
)
N_FACTORS = 47
FACTOR_INDEX = {name: i for i, name in enumerate(FACTOR_NAMES)}
LN_MCAP_INDEX = FACTOR_INDEX["LN_MCAP"]

MONTH_DAYS = (21, 63, 126, 252)
MONTH_COUNTS = (1, 3, 6, 12)
TWO_YEAR_DAYS = 504
WINSOR_SIGMAS = 5.0
MAX_MISSING_FRACTION = 0.5


def ema(series, n: int):
    """Exponential moving average, k = 2/(n+1), seeded with the first value."""
    if len(series) == 0:
        raise ValidationError("ema requires a nonempty series")
    if n < 1:
        raise ValidationError("ema window must be >= 1")
    k = 2.0 / (n + 1.0)
    out = np.empty(len(series))
    out[0] = series[0]
    for t in range(1, len(series)):
        out[t] = out[t - 1] + k * (series[t] - out[t - 1])
    return out


def macd_indicators(closes):
    """(dif, dea, macd) at the final date of the close series."""
    if len(closes) < 35:
        raise ValidationError("macd_indicators requires at least 35 observations")
    closes = np.asarray(closes, dtype=float)
    dif_series = ema(closes, 12) - ema(closes, 26)
    dif = float(dif_series[-1])
    dea = float(ema(dif_series, 9)[-1])
    return dif, dea, 2.0 * (dif - dea)


def rolling_beta(stock_returns, benchmark_returns) -> float:
    """OLS slope of stock daily returns on benchmark daily returns."""
    x = np.asarray(benchmark_returns, dtype=float)
    y = np.asarray(stock_returns, dtype=float)
    if len(x) != len(y):
        raise ValidationError("return series lengths differ")
    if len(x) < 60:
        raise ValidationError("rolling_beta requires at least 60 observations")
    xc = x - x.mean()
    var = float(np.dot(xc, xc))
    if var <= 1e-18:
        raise ValidationError("benchmark variance is zero; beta undefined")
    return float(np.dot(xc, y - y.mean()) / var)


@dataclass
class FactorVector:
    stock_id: str
    date: Date
    values: np.ndarray        # length 47
    missing_mask: np.ndarray  # bool, length 47; True means value is missing


def _safe_ratio(numerator, denominator):
    if denominator == 0 or not math.isfinite(numerator) or not math.isfinite(denominator):
        return None
    value = numerator / denominator
    return value if math.isfinite(value) else None


def compute_raw_factors(dataset: MarketDataset, stock_id: str, d: Date) -> FactorVector:
    """All 47 raw factors from data at or before d; missing values masked."""
    values = np.zeros(N_FACTORS)
    mask = np.ones(N_FACTORS, dtype=bool)

    def put(name, value):
        if value is not None and math.isfinite(value):
            values[FACTOR_INDEX[name]] = value
            mask[FACTOR_INDEX[name]] = False

    by_date = dataset.bars.get(stock_id, {})
    dates = sorted(bd for bd in by_date if bd <= d)
    if not dates or dates[-1] != d:
        return FactorVector(stock_id, d, values, mask)
    closes = np.array([by_date[bd].close for bd in dates])
    turnover = np.array([by_date[bd].turnover_ratio for bd in dates])
    bar = by_date[d]
    mcap = bar.market_cap
    idx = len(dates) - 1

    if bar.close > 0:
        put("LN_PRICE", math.log(bar.close))
    if mcap > 0:
        put("LN_MCAP", math.log(mcap))

    snap = dataset.fundamental_asof(stock_id, d)
    if snap is not None and mcap > 0:
        put("EP", _safe_ratio(snap.net_profit, mcap))
        put("EP_CUT", _safe_ratio(snap.net_profit - snap.non_recurring_gain_loss, mcap))
        put("BP", _safe_ratio(snap.net_assets, mcap))
        put("SP", _safe_ratio(snap.operating_revenue, mcap))
        put("NCFP", _safe_ratio(snap.net_cash_flow, mcap))
        put("OCFP", _safe_ratio(snap.net_operate_cash_flow, mcap))
        # growth / PE == growth * net_profit / market_cap
        put("G_PE", _safe_ratio(snap.net_profit_growth * snap.net_profit, mcap))
        put("ROE", _safe_ratio(snap.net_profit, snap.equity))
        put("ROA", _safe_ratio(snap.net_profit, snap.avg_total_assets))
        put("GROSS_MARGIN", _safe_ratio(snap.gross_profit, snap.operating_revenue))
        put("PROFIT_MARGIN", _safe_ratio(snap.net_profit, snap.operating_revenue))
        put("ASSET_TURNOVER", _safe_ratio(snap.operating_revenue, snap.avg_total_assets))
        put("OP_CASHFLOW_RATIO", _safe_ratio(snap.net_operate_cash_flow, snap.operate_income))
        put("FIN_LEVERAGE", _safe_ratio(snap.total_assets, snap.net_assets))
        put("DEBT_EQUITY", _safe_ratio(snap.long_term_debt, snap.net_assets))
        put("CASH_RATIO", _safe_ratio(snap.cash, snap.current_liabilities))
        put("CURRENT_RATIO", _safe_ratio(snap.current_assets, snap.current_liabilities))

    # Daily returns over the stock's own bar sequence; returns[j] belongs to
    # dates[j+1].
    with np.errstate(divide="ignore", invalid="ignore"):
        returns = closes[1:] / closes[:-1] - 1.0

    for w, n_months, rname, mname, dname, sname, tname, relname in zip(
        MONTH_DAYS, MONTH_COUNTS,
        ("RET_1M", "RET_3M", "RET_6M", "RET_12M"),
        ("RETTO_MEAN_1M", "RETTO_MEAN_3M", "RETTO_MEAN_6M", "RETTO_MEAN_12M"),
        ("RETTO_DECAY_1M", "RETTO_DECAY_3M", "RETTO_DECAY_6M", "RETTO_DECAY_12M"),
        ("RET_STD_1M", "RET_STD_3M", "RET_STD_6M", "RET_STD_12M"),
        ("TO_1M_MINUS1", "TO_3M_MINUS1", "TO_6M_MINUS1", "TO_12M_MINUS1"),
        ("TO_REL2Y_1M", "TO_REL2Y_3M", "TO_REL2Y_6M", "TO_REL2Y_12M"),
    ):
        if idx >= w and closes[idx - w] > 0:
            put(rname, closes[idx] / closes[idx - w] - 1.0)
        if idx >= w:
            win_returns = returns[idx - w:idx]           # dates idx-w+1 .. idx
            win_turnover = turnover[idx - w + 1:idx + 1]
            product = win_returns * win_turnover
            put(mname, float(product.mean()))
            # distance in trading days from the action day; 0 on the day itself
            distance = np.arange(w - 1, -1, -1, dtype=float)
            weights = np.exp(-distance / (n_months * 4.0))
            put(dname, float((product * weights).mean()))
            put(sname, float(win_returns.std()))
        if idx + 1 >= w:
            trailing = turnover[idx - w + 1:idx + 1]
            put(tname, float(trailing.mean()) - 1.0)
            two_year = turnover[max(0, idx - TWO_YEAR_DAYS + 1):idx + 1]
            if len(two_year) >= 252:
                base = float(two_year.mean())
                if base > 0:
                    put(relname, float(trailing.mean()) / base - 1.0)

    if idx >= 252:
        win_dates = dates[idx - 252:idx + 1]
        bench = [dataset.benchmark.get(bd) for bd in win_dates]
        if all(b is not None and b > 0 for b in bench):
            bench = np.asarray(bench, dtype=float)
            bench_returns = bench[1:] / bench[:-1] - 1.0
            try:
                put("BETA", rolling_beta(returns[idx - 252:idx], bench_returns))
            except ValidationError:
                pass

    if len(closes) >= 35:
        dif, dea, macd = macd_indicators(closes)
        put("DIF", dif)
        put("DEA", dea)
        put("MACD", macd)

    return FactorVector(stock_id, d, values, mask)


@dataclass
class NormalizationStats:
    """Per-column imputation/winsorization/z-score parameters."""
    medians: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    means: np.ndarray
    stds: np.ndarray  # 0 marks a constant column (mapped to zeros)


@dataclass
class FactorPanel:
    date: Date
    stocks: list[str]
    matrix: np.ndarray        # |stocks| x 47
    missing: np.ndarray       # bool, same shape
    normalized: bool = False
    stats: NormalizationStats | None = None


def build_panel(dataset: MarketDataset, universe, d: Date) -> FactorPanel:
    """Raw factor panel, one row per universe stock, ascending stock_id."""
    stocks = sorted(universe)
    matrix = np.zeros((len(stocks), N_FACTORS))
    missing = np.ones((len(stocks), N_FACTORS), dtype=bool)
    for i, stock_id in enumerate(stocks):
        fv = compute_raw_factors(dataset, stock_id, d)
        matrix[i] = fv.values
        missing[i] = fv.missing_mask
    return FactorPanel(date=d, stocks=stocks, matrix=matrix, missing=missing)


def compute_normalization(matrix: np.ndarray, missing: np.ndarray) -> NormalizationStats:
    """Median-impute, winsorize at +-5 population sigmas, z-score."""
    n_cols = matrix.shape[1]
    medians = np.zeros(n_cols)
    lower = np.zeros(n_cols)
    upper = np.zeros(n_cols)
    means = np.zeros(n_cols)
    stds = np.zeros(n_cols)
    for j in range(n_cols):
        col = matrix[:, j]
        present = col[~missing[:, j]]
        medians[j] = float(np.median(present)) if len(present) else 0.0
        filled = np.where(missing[:, j], medians[j], col)
        mu0, sd0 = filled.mean(), filled.std()
        lower[j], upper[j] = mu0 - WINSOR_SIGMAS * sd0, mu0 + WINSOR_SIGMAS * sd0
        clipped = np.clip(filled, lower[j], upper[j])
        means[j] = clipped.mean()
        sd = clipped.std()
        stds[j] = sd if sd > 1e-12 else 0.0
    return NormalizationStats(medians, lower, upper, means, stds)


def apply_normalization(matrix: np.ndarray, missing: np.ndarray,
                        stats: NormalizationStats) -> np.ndarray:
    filled = np.where(missing, stats.medians[None, :], matrix)
    clipped = np.clip(filled, stats.lower[None, :], stats.upper[None, :])
    safe = np.where(stats.stds > 0, stats.stds, 1.0)
    normalized = (clipped - stats.means[None, :]) / safe[None, :]
    normalized[:, stats.stds == 0] = 0.0
    return normalized


def drop_sparse_rows(panel: FactorPanel) -> FactorPanel:
    """Drop stocks with more than half their factors missing."""
    keep = panel.missing.mean(axis=1) <= MAX_MISSING_FRACTION
    if keep.all():
        return panel
    return FactorPanel(
        date=panel.date,
        stocks=[s for s, k in zip(panel.stocks, keep) if k],
        matrix=panel.matrix[keep],
        missing=panel.missing[keep],
        normalized=panel.normalized,
        stats=panel.stats,
    )


def normalize_panel(panel: FactorPanel) -> FactorPanel:
    """Normalized copy of a raw panel (sparse rows dropped first)."""
    if panel.normalized:
        raise ValidationError("panel is already normalized")
    panel = drop_sparse_rows(panel)
    stats = compute_normalization(panel.matrix, panel.missing)
    matrix = apply_normalization(panel.matrix, panel.missing, stats)
    return FactorPanel(
        date=panel.date,
        stocks=list(panel.stocks),
        matrix=matrix,
        missing=np.zeros_like(panel.missing),
        normalized=True,
        stats=stats,
    )
