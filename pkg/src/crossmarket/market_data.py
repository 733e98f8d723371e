"""Daily price panels, trading calendars, and excess-return construction.

A market is represented by a PricePanel: date x ticker matrices of open,
close, volume and market cap, plus a sector label per ticker and the ticker
of the market ETF used as the excess-return benchmark. Returns come in two
kinds:

    pvCLCL  log(close_t / close_{t-1})   previous-close to close
    OPCL    log(close_t / open_t)        open to close, within one session

Excess returns subtract the ETF's return of the same kind on the same date.
Missing observations are NaN throughout; they are never silently zero.

All functions here are pure; panels are immutable after construction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    DateMismatch,
    DuplicateTickerDate,
    EmptyInput,
    InsufficientDates,
    InsufficientHistory,
    KindMismatch,
    MissingColumn,
    NegativePrice,
    NonMonotoneDates,
    NTooLarge,
)

PVCLCL = "pvCLCL"
OPCL = "OPCL"
RETURN_KINDS = (PVCLCL, OPCL)

CSV_COLUMNS = ("date", "ticker", "open", "close", "volume", "market_cap", "sector")


@dataclass
class TradingCalendar:
    """Ordered trading dates of one market; positions define trading-day arithmetic."""

    market_id: str
    dates: tuple[Date, ...]

    def __post_init__(self) -> None:
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise NonMonotoneDates(f"{self.market_id}: {a} !< {b}")
        self._index = {d: i for i, d in enumerate(self.dates)}

    def __len__(self) -> int:
        return len(self.dates)

    def index_of(self, date: Date) -> int:
        try:
            return self._index[date]
        except KeyError:
            raise KeyError(f"{date} is not a {self.market_id} trading date") from None

    def count_before(self, date: Date, inclusive: bool = False) -> int:
        """Number of trading dates < date (or <= date when inclusive)."""
        side = "right" if inclusive else "left"
        return int(np.searchsorted(np.array(self.dates, dtype=object), date, side=side))


@dataclass
class PricePanel:
    """Aligned daily open/close/volume/market-cap records for one market."""

    market_id: str
    dates: tuple[Date, ...]
    tickers: tuple[str, ...]
    open: np.ndarray
    close: np.ndarray
    volume: np.ndarray
    market_cap: np.ndarray
    sector: dict[str, str]
    etf_ticker: str
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        self.dates = tuple(self.dates)
        self.tickers = tuple(self.tickers)
        shape = (len(self.dates), len(self.tickers))
        for name in ("open", "close", "volume", "market_cap"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != shape:
                raise DataError(f"{self.market_id}: {name} shape {m.shape} != {shape}")
            setattr(self, name, m)
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise NonMonotoneDates(f"{self.market_id}: dates not strictly increasing at {b}")
        for name in ("open", "close"):
            m = getattr(self, name)
            bad = np.nonzero(~np.isnan(m) & (m <= 0))
            if bad[0].size:
                t, j = bad[0][0], bad[1][0]
                raise NegativePrice(
                    f"{self.market_id}: non-positive {name} price for "
                    f"{self.tickers[j]} on {self.dates[t]}"
                )
        if self.etf_ticker not in self.tickers:
            raise DataError(f"{self.market_id}: ETF ticker {self.etf_ticker!r} not in panel")
        j = self.tickers.index(self.etf_ticker)
        if np.isnan(self.open[:, j]).any() or np.isnan(self.close[:, j]).any():
            raise DataError(f"{self.market_id}: ETF {self.etf_ticker} price series has gaps")
        self._ticker_index = {t: i for i, t in enumerate(self.tickers)}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PricePanel):
            return NotImplemented
        return (
            self.market_id == other.market_id
            and self.dates == other.dates
            and self.tickers == other.tickers
            and self.etf_ticker == other.etf_ticker
            and self.sector == other.sector
            and all(
                np.array_equal(getattr(self, n), getattr(other, n), equal_nan=True)
                for n in ("open", "close", "volume", "market_cap")
            )
        )

    @property
    def calendar(self) -> TradingCalendar:
        return TradingCalendar(self.market_id, self.dates)

    @property
    def stock_tickers(self) -> tuple[str, ...]:
        """Panel tickers excluding the market ETF."""
        return tuple(t for t in self.tickers if t != self.etf_ticker)

    def ticker_index(self, ticker: str) -> int:
        return self._ticker_index[ticker]


@dataclass
class ReturnSeries:
    """Per-date return vector for a single instrument (typically the ETF)."""

    kind: str
    dates: tuple[Date, ...]
    values: np.ndarray


@dataclass
class ReturnPanel:
    """date x ticker matrix of log returns of one kind, raw or market-excess."""

    market_id: str
    kind: str
    excess: bool
    dates: tuple[Date, ...]
    tickers: tuple[str, ...]
    values: np.ndarray
    etf_ticker: str

    def __post_init__(self) -> None:
        self.dates = tuple(self.dates)
        self.tickers = tuple(self.tickers)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.dates), len(self.tickers)):
            raise DataError(f"{self.market_id}: return matrix shape mismatch")
        self._ticker_index = {t: i for i, t in enumerate(self.tickers)}

    @property
    def calendar(self) -> TradingCalendar:
        return TradingCalendar(self.market_id, self.dates)

    @property
    def stock_tickers(self) -> tuple[str, ...]:
        return tuple(t for t in self.tickers if t != self.etf_ticker)

    def ticker_index(self, ticker: str) -> int:
        return self._ticker_index[ticker]

    def column(self, ticker: str) -> np.ndarray:
        return self.values[:, self._ticker_index[ticker]]


# --- CSV contract ------------------------------------------------------------
#
# One file per market, header `date,ticker,open,close,volume,market_cap,sector`,
# ISO-8601 dates, '.' decimal point, empty field = missing value. The ETF
# appears as an ordinary ticker and is identified by the run configuration.


def _parse_float(text: str) -> float:
    if text == "":
        return math.nan
    return float(text)


def load_price_csv(path: str | Path, market_id: str, etf_ticker: str) -> PricePanel:
    """Load and validate one market's price panel from the CSV contract.

    Rows with unparseable numerics or dates are rejected individually and
    reported in the returned panel's diagnostics; structural violations
    (missing columns, duplicate (ticker, date) rows, non-positive prices)
    raise.
    """
    path = Path(path)
    rows: dict[tuple[Date, str], tuple[float, float, float, float]] = {}
    sectors: dict[str, str] = {}
    diagnostics: list[str] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
        col = {name: header.index(name) for name in CSV_COLUMNS}
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(f.strip() == "" for f in raw):
                continue
            try:
                d = Date.fromisoformat(raw[col["date"]].strip())
                ticker = raw[col["ticker"]].strip()
                op = _parse_float(raw[col["open"]].strip())
                cl = _parse_float(raw[col["close"]].strip())
                vol = _parse_float(raw[col["volume"]].strip())
                mcap = _parse_float(raw[col["market_cap"]].strip())
            except (ValueError, IndexError) as exc:
                diagnostics.append(f"row {lineno}: rejected ({exc})")
                continue
            if not ticker:
                diagnostics.append(f"row {lineno}: rejected (empty ticker)")
                continue
            for name, price in (("open", op), ("close", cl)):
                if not math.isnan(price) and price <= 0:
                    raise NegativePrice(f"{path} row {lineno}: {name}={price} for {ticker} on {d}")
            key = (d, ticker)
            if key in rows:
                raise DuplicateTickerDate(f"{path} row {lineno}: duplicate {ticker} on {d}")
            rows[key] = (op, cl, vol, mcap)
            sec = raw[col["sector"]].strip()
            if sec:
                prev = sectors.setdefault(ticker, sec)
                if prev != sec:
                    raise DataError(
                        f"{path} row {lineno}: sector conflict for {ticker}: {prev!r} vs {sec!r}"
                    )
    if not rows:
        raise DataError(f"{path}: no valid data rows")

    dates = tuple(sorted({d for d, _ in rows}))
    tickers = tuple(sorted({t for _, t in rows}))
    date_idx = {d: i for i, d in enumerate(dates)}
    ticker_idx = {t: i for i, t in enumerate(tickers)}
    shape = (len(dates), len(tickers))
    mats = [np.full(shape, np.nan) for _ in range(4)]
    for (d, t), vals in rows.items():
        i, j = date_idx[d], ticker_idx[t]
        for m, v in zip(mats, vals):
            m[i, j] = v
    return PricePanel(
        market_id=market_id,
        dates=dates,
        tickers=tickers,
        open=mats[0],
        close=mats[1],
        volume=mats[2],
        market_cap=mats[3],
        sector={t: sectors.get(t, "") for t in tickers},
        etf_ticker=etf_ticker,
        diagnostics=tuple(diagnostics),
    )


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def write_price_csv(panel: PricePanel, path: str | Path) -> None:
    """Emit a panel in the CSV contract; floats round-trip exactly via repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for i, d in enumerate(panel.dates):
            for j, t in enumerate(panel.tickers):
                row = (
                    panel.open[i, j],
                    panel.close[i, j],
                    panel.volume[i, j],
                    panel.market_cap[i, j],
                )
                if all(math.isnan(v) for v in row):
                    continue
                writer.writerow(
                    [d.isoformat(), t, *(_fmt(v) for v in row), panel.sector.get(t, "")]
                )


# --- returns -----------------------------------------------------------------


def compute_returns(panel: PricePanel, kind: str) -> ReturnPanel:
    """Raw log returns of the requested kind; entries with missing input are NaN."""
    if kind not in RETURN_KINDS:
        raise KindMismatch(f"unknown return kind {kind!r}")
    if kind == PVCLCL:
        if len(panel.dates) < 2:
            raise InsufficientDates("pvCLCL returns need at least 2 dates")
        with np.errstate(invalid="ignore", divide="ignore"):
            values = np.log(panel.close[1:] / panel.close[:-1])
        dates = panel.dates[1:]
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            values = np.log(panel.close / panel.open)
        dates = panel.dates
    return ReturnPanel(
        market_id=panel.market_id,
        kind=kind,
        excess=False,
        dates=dates,
        tickers=panel.tickers,
        values=values,
        etf_ticker=panel.etf_ticker,
    )


def etf_series(returns: ReturnPanel) -> ReturnSeries:
    """The benchmark ETF's own return series extracted from a raw panel."""
    return ReturnSeries(
        kind=returns.kind,
        dates=returns.dates,
        values=returns.column(returns.etf_ticker).copy(),
    )


def to_excess(returns: ReturnPanel, etf: ReturnSeries) -> ReturnPanel:
    """Subtract the ETF return per date from every ticker's return."""
    if returns.excess:
        raise KindMismatch("panel is already excess")
    if etf.kind != returns.kind:
        raise KindMismatch(f"panel kind {returns.kind} vs ETF kind {etf.kind}")
    if tuple(etf.dates) != returns.dates:
        raise DateMismatch("ETF series dates do not match panel dates")
    return ReturnPanel(
        market_id=returns.market_id,
        kind=returns.kind,
        excess=True,
        dates=returns.dates,
        tickers=returns.tickers,
        values=returns.values - np.asarray(etf.values, dtype=float)[:, None],
        etf_ticker=returns.etf_ticker,
    )


def excess_returns(panel: PricePanel, kind: str) -> ReturnPanel:
    """Convenience chain: raw returns of `kind`, then ETF subtraction."""
    raw = compute_returns(panel, kind)
    return to_excess(raw, etf_series(raw))


# --- winsorization -----------------------------------------------------------
#
# Percentile convention: the lower bound is the order statistic at
# floor(q*(n-1)) and the upper bound the one at ceil(q*(n-1)) (numpy's
# "lower"/"higher" methods). Clipping to outward order statistics makes the
# operation exactly idempotent, which interpolating conventions are not.


def winsorize_window(values: np.ndarray, lower_pct: float = 0.5, upper_pct: float = 99.5) -> np.ndarray:
    """Clip a return vector at the given percentiles; element order preserved.

    Applied per stock per training window only, never to evaluation-day
    returns.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise EmptyInput("winsorize_window needs a vector of length >= 2")
    if not (0.0 < lower_pct < upper_pct < 100.0):
        raise DataError(f"bad percentile bounds ({lower_pct}, {upper_pct})")
    lo = np.percentile(v, lower_pct, method="lower")
    hi = np.percentile(v, upper_pct, method="higher")
    return np.clip(v, lo, hi)


def winsorize_columns(matrix: np.ndarray, lower_pct: float = 0.5, upper_pct: float = 99.5) -> np.ndarray:
    """Column-wise winsorize_window for a (window x stocks) matrix."""
    m = np.asarray(matrix, dtype=float)
    if m.shape[0] < 2:
        raise EmptyInput("winsorize_columns needs >= 2 rows")
    lo = np.percentile(m, lower_pct, axis=0, method="lower")
    hi = np.percentile(m, upper_pct, axis=0, method="higher")
    return np.clip(m, lo, hi)


# --- universe and liquidity ----------------------------------------------------


def select_universe(panel: PricePanel, n: int, window: int | None = None) -> tuple[str, ...]:
    """Top-n non-ETF tickers by mean market cap, ties broken lexicographically.

    By default the mean runs over the full sample (the look-ahead caveat is
    the data source's, not ours); `window` restricts it to the trailing
    `window` trading dates for time-local universe formation.
    """
    stocks = panel.stock_tickers
    if n > len(stocks):
        raise NTooLarge(f"n={n} exceeds {len(stocks)} non-ETF tickers")
    caps = panel.market_cap
    if window is not None:
        caps = caps[-window:]
    means = {}
    for t in stocks:
        col = caps[:, panel.ticker_index(t)]
        means[t] = float(np.nanmean(col)) if not np.all(np.isnan(col)) else -math.inf
    ranked = sorted(stocks, key=lambda t: (-means[t], t))
    return tuple(ranked[:n])


def subset_tickers(panel: PricePanel, tickers: tuple[str, ...]) -> PricePanel:
    """Restrict a panel to the given stocks; the ETF column is always kept."""
    keep = tuple(tickers) + ((panel.etf_ticker,) if panel.etf_ticker not in tickers else ())
    keep = tuple(sorted(keep, key=panel.tickers.index))
    cols = [panel.ticker_index(t) for t in keep]
    return PricePanel(
        market_id=panel.market_id,
        dates=panel.dates,
        tickers=keep,
        open=panel.open[:, cols],
        close=panel.close[:, cols],
        volume=panel.volume[:, cols],
        market_cap=panel.market_cap[:, cols],
        sector={t: panel.sector.get(t, "") for t in keep},
        etf_ticker=panel.etf_ticker,
    )


def mdv21(panel: PricePanel, ticker: str, date: Date, window: int = 21) -> float:
    """Median daily dollar volume over the `window` trading dates before `date`."""
    pos = panel.calendar.count_before(date)
    if pos < window:
        raise InsufficientHistory(f"{ticker}: only {pos} trading dates before {date}")
    j = panel.ticker_index(ticker)
    dv = panel.volume[pos - window : pos, j] * panel.close[pos - window : pos, j]
    if np.isnan(dv).any():
        raise InsufficientHistory(f"{ticker}: missing volume/close inside the {window}-day window")
    return float(np.median(dv))
