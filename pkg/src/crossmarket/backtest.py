"""Rolling-window backtest: screen, fit, predict, and score out of sample.

Every `retrain_every` target trading days the predictor graph is rebuilt and
all models refit on the trailing window; the days in between are predicted
with the latest fitted models using fresh lagged source returns. Training
windows end strictly before the rebuild date, so no evaluation-day
information ever enters a fit.

Scoring follows the paper-style convention: the position in stock i on day t
is sign(prediction) scaled by capital b_i = min(bps_of_mdv * mdv21, cap), the
day's PnL sums sign(s_i) * r_i * b_i, and the annualized Sharpe ratio is
mean/std (sample std) of the daily PnL series times sqrt(252). Nested
quantile portfolios rank stocks by |prediction| each day.
"""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    EmptyInput,
    InsufficientHistory,
    SpanUnavailable,
    WrongArity,
    ZeroVolatility,
)
from .market_data import PricePanel, ReturnPanel, mdv21, winsorize_columns
from .models import (
    BASE_METHODS,
    ENSEMBLE_METHODS,
    FittedModel,
    ModelSpec,
    TrainSet,
    ensemble_predict,
    fit,
)
from .rng import substream
from .screening import (
    BipartiteGraph,
    CalendarPairing,
    ScreenConfig,
    build_graph,
    make_pairing,
    merge_graphs,
    randomize_edges,
)

TRADING_DAYS_PER_YEAR = 252


@dataclass(frozen=True)
class FeatureSource:
    """One predictor market: its excess-return panel and session timing."""

    name: str
    returns: ReturnPanel
    lag: int
    same_day_close_before_open: bool


@dataclass(frozen=True)
class BacktestConfig:
    window_w: int = 250
    retrain_every: int = 10
    quantile_fractions: tuple[float, ...] = (1.0, 0.8, 0.6, 0.4, 0.2, 0.1)
    position_cap: float = 100_000.0
    bps_of_mdv: float = 0.001
    span_start: Date | None = None  # default: first trading day of 2016
    span_end: Date | None = None  # default: last trading day of 2021
    mdv_window: int = 21

    def __post_init__(self) -> None:
        fr = self.quantile_fractions
        if not fr or any(not 0 < f <= 1 for f in fr) or any(a <= b for a, b in zip(fr, fr[1:])):
            raise ConfigError("quantile fractions must be strictly decreasing within (0, 1]")
        if self.retrain_every < 1:
            raise ConfigError("retrain_every must be >= 1")
        if self.position_cap <= 0 or self.bps_of_mdv <= 0:
            raise ConfigError("position sizing parameters must be positive")


# --- scoring primitives -------------------------------------------------------


def daily_pnl(
    predictions: np.ndarray, realized: np.ndarray, capital: np.ndarray
) -> float:
    """sum(sign(s_i) * r_i * b_i) with sign(0) = 0; non-finite terms contribute 0."""
    s = np.asarray(predictions, dtype=float)
    r = np.asarray(realized, dtype=float)
    b = np.asarray(capital, dtype=float)
    term = np.sign(s) * r * b
    return float(np.where(np.isfinite(term), term, 0.0).sum())


def sharpe_ratio(pnl_series: np.ndarray) -> float:
    """Annualized SR: mean/std (ddof=1) * sqrt(252)."""
    x = np.asarray(pnl_series, dtype=float)
    if x.size < 2:
        raise EmptyInput("SR needs at least 2 observations")
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        raise ZeroVolatility("constant PnL series")
    return float(x.mean()) / sd * math.sqrt(TRADING_DAYS_PER_YEAR)


def quantile_portfolios(
    predictions: dict[str, float], fractions: tuple[float, ...]
) -> list[tuple[str, ...]]:
    """Nested portfolios: top ceil(f*N) stocks by |prediction|, ties by ticker."""
    if not predictions:
        return [() for _ in fractions]
    ranked = sorted(predictions, key=lambda t: (-abs(predictions[t]), t))
    n = len(ranked)
    return [tuple(ranked[: math.ceil(f * n)]) for f in fractions]


def _sr_or_nan(pnl: np.ndarray) -> float:
    try:
        return sharpe_ratio(pnl)
    except (ZeroVolatility, EmptyInput):
        return math.nan


# --- report -------------------------------------------------------------------


@dataclass
class ModelResult:
    method: str
    predictions: np.ndarray  # (days, targets); NaN where no prediction
    quantile_pnl: np.ndarray  # (days, quantiles)
    sharpe: np.ndarray  # (quantiles,); NaN where volatility is zero


@dataclass
class BacktestReport:
    dates: tuple[Date, ...]
    target_tickers: tuple[str, ...]
    quantile_fractions: tuple[float, ...]
    realized: np.ndarray  # (days, targets)
    capital: np.ndarray  # (days, targets), 0 where unsized
    models: dict[str, ModelResult]
    diagnostics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def contributions(self, method: str) -> np.ndarray:
        """Per-stock PnL contributions sign(s)*r*b, zero where unpredicted."""
        s = self.models[method].predictions
        term = np.sign(s) * self.realized * self.capital
        return np.where(np.isfinite(term), term, 0.0)

    def summary_rows(self) -> list[tuple[str, int, float, float, int]]:
        rows = []
        for method in self.models:
            res = self.models[method]
            for q in range(len(self.quantile_fractions)):
                series = res.quantile_pnl[:, q]
                rows.append(
                    (method, q + 1, float(res.sharpe[q]), float(series.sum()), series.size)
                )
        return rows

    def save(self, out_dir: str | Path) -> None:
        """Primary result artifacts: per-(model, quantile) series and a summary."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for method, res in self.models.items():
            for q in range(len(self.quantile_fractions)):
                series = res.quantile_pnl[:, q]
                cum = np.cumsum(series)
                with (out / f"pnl_{method}_qr{q + 1}.csv").open("w") as fh:
                    fh.write("date,daily_pnl,cum_pnl\n")
                    for d, p, c in zip(self.dates, series, cum):
                        fh.write(f"{d.isoformat()},{float(p)!r},{float(c)!r}\n")
        with (out / "summary.csv").open("w") as fh:
            fh.write("model,quantile,sr,total_pnl,n_days\n")
            for method, q, sr, total, n in self.summary_rows():
                fh.write(f"{method},qr{q},{sr!r},{total!r},{n}\n")


# --- engine -------------------------------------------------------------------


def _resolve_span(panel: ReturnPanel, config: BacktestConfig) -> tuple[int, int]:
    dates = panel.dates
    if config.span_start is not None:
        in_span = [i for i, d in enumerate(dates) if d >= config.span_start]
        if not in_span:
            raise SpanUnavailable(f"no target dates on/after {config.span_start}")
        start = in_span[0]
    else:
        years = [i for i, d in enumerate(dates) if d.year == 2016]
        if not years:
            raise SpanUnavailable("no 2016 dates; set span_start explicitly")
        start = years[0]
    if config.span_end is not None:
        in_span = [i for i, d in enumerate(dates) if d <= config.span_end]
        if not in_span:
            raise SpanUnavailable(f"no target dates on/before {config.span_end}")
        end = in_span[-1]
    else:
        years = [i for i, d in enumerate(dates) if d.year == 2021]
        end = years[-1] if years else len(dates) - 1
    if end < start:
        raise SpanUnavailable("empty prediction span")
    return start, end


def _fit_seed(seed: int, rebuild: int, ticker: str, method: str) -> int:
    return int(substream(seed, "fit", rebuild, ticker, method).integers(0, 2**63 - 1))


def _fit_stock(
    ticker: str,
    train: TrainSet,
    specs: list[ModelSpec],
    seeds: list[int],
) -> tuple[str, dict[str, FittedModel]]:
    return ticker, {
        spec.method: fit(spec, train, seed=s) for spec, s in zip(specs, seeds)
    }


@dataclass
class _GraphPlan:
    """Per-rebuild fit inputs plus the day-t feature lookup."""

    graph: BipartiteGraph | None
    trainsets: dict[str, TrainSet]
    feature_cols: dict[str, list[tuple[int, int]]]  # ticker -> (source idx, column)


def run_backtest(
    target_prices: PricePanel,
    target_returns: ReturnPanel,
    sources: list[FeatureSource],
    screen_config: ScreenConfig,
    model_specs: list[ModelSpec],
    config: BacktestConfig,
    seed: int = 0,
    workers: int = 1,
    ar_lags: int | None = None,
    edge_fraction: float | None = None,
    randomize_seed: int | None = None,
    keep_graphs: bool = False,
) -> BacktestReport:
    """Full rolling run. Set ar_lags for the non-graph autoregressive baseline
    (sources must then contain exactly the target market's own feature panel);
    set edge_fraction to randomize the graph at every rebuild."""
    t0 = time.monotonic()
    base_specs = [s for s in model_specs if s.method in BASE_METHODS]
    ens_specs = [s for s in model_specs if s.method in ENSEMBLE_METHODS]
    if ens_specs and tuple(s.method for s in base_specs) != BASE_METHODS:
        raise WrongArity("ensembles need all 8 base methods, in order")
    if ar_lags is not None and len(sources) != 1:
        raise ConfigError("the autoregressive baseline uses exactly one feature panel")

    w = config.window_w
    start, end = _resolve_span(target_returns, config)
    dates = target_returns.dates[start : end + 1]
    n_days = len(dates)
    tickers = target_returns.stock_tickers
    n_targets = len(tickers)
    t_cols = np.asarray([target_returns.ticker_index(t) for t in tickers])

    pairings = [
        make_pairing(s.returns, target_returns, s.same_day_close_before_open)
        for s in sources
    ]
    _validate_first_rebuild(target_returns, sources, pairings, screen_config, config, dates[0], ar_lags)

    realized = np.full((n_days, n_targets), np.nan)
    capital = np.zeros((n_days, n_targets))
    predictions = {s.method: np.full((n_days, n_targets), np.nan) for s in base_specs}
    for s in ens_specs:
        predictions[s.method] = np.full((n_days, n_targets), np.nan)
    diagnostics: dict = {"rebuilds": [], "missing_mdv": 0, "missing_realized": 0}
    graphs: list[BipartiteGraph] = []

    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        fitted: dict[str, dict[str, FittedModel]] = {}
        plan: _GraphPlan | None = None
        rebuild_idx = -1
        for di, day in enumerate(dates):
            if di % config.retrain_every == 0:
                rebuild_idx += 1
                plan = _rebuild(
                    target_returns,
                    sources,
                    pairings,
                    screen_config,
                    config,
                    day,
                    ar_lags,
                    edge_fraction,
                    randomize_seed if randomize_seed is not None else seed,
                    rebuild_idx,
                    workers,
                )
                fitted = _fit_all(plan, base_specs, seed, rebuild_idx, pool)
                diagnostics["rebuilds"].append(
                    {
                        "as_of": day,
                        "n_edges": plan.graph.n_edges if plan.graph is not None else 0,
                        "n_modeled": len(plan.trainsets),
                    }
                )
                if keep_graphs and plan.graph is not None:
                    graphs.append(plan.graph)

            # realized returns and capital for day t
            it = target_returns.calendar.index_of(day)
            realized[di] = target_returns.values[it, t_cols]
            for j, tk in enumerate(tickers):
                try:
                    capital[di, j] = min(
                        config.bps_of_mdv * mdv21(target_prices, tk, day, config.mdv_window),
                        config.position_cap,
                    )
                except InsufficientHistory:
                    diagnostics["missing_mdv"] += 1

            feats = _day_features(plan, sources, pairings, target_returns, day, ar_lags)
            for j, tk in enumerate(tickers):
                models = fitted.get(tk)
                x = feats.get(tk)
                if models is None or x is None:
                    continue
                base_preds = np.empty(len(base_specs))
                for mi, spec in enumerate(base_specs):
                    base_preds[mi] = models[spec.method].predict(x)
                    predictions[spec.method][di, j] = base_preds[mi]
                for spec in ens_specs:
                    predictions[spec.method][di, j] = ensemble_predict(
                        base_preds, spec.method
                    )
    finally:
        if pool is not None:
            pool.shutdown()

    report = _assemble_report(
        dates, tickers, config, realized, capital, predictions, diagnostics
    )
    if np.isnan(realized).any():
        diagnostics["missing_realized"] = int(np.isnan(realized).sum())
    diagnostics["runtime_s"] = time.monotonic() - t0
    if keep_graphs:
        diagnostics["graphs"] = graphs
    report.config = {
        "screen": dataclasses.asdict(screen_config),
        "backtest": {
            k: (v.isoformat() if isinstance(v, Date) else v)
            for k, v in dataclasses.asdict(config).items()
        },
        "seed": seed,
        "ar_lags": ar_lags,
        "edge_fraction": edge_fraction,
        "sources": [(s.name, s.lag, s.same_day_close_before_open) for s in sources],
    }
    return report


def _validate_first_rebuild(
    target_returns: ReturnPanel,
    sources: list[FeatureSource],
    pairings: list[CalendarPairing],
    screen_config: ScreenConfig,
    config: BacktestConfig,
    first_day: Date,
    ar_lags: int | None,
) -> None:
    it = target_returns.calendar.index_of(first_day)
    if it < config.window_w:
        raise SpanUnavailable(
            f"target history before {first_day} shorter than the {config.window_w}-day window"
        )
    if ar_lags is not None:
        q = sources[0].returns.calendar.count_before(first_day)
        if q - config.window_w - ar_lags < 0:
            raise SpanUnavailable("feature panel too short for the lag features")
        return
    for src, pairing in zip(sources, pairings):
        from .errors import WindowUnavailable

        try:
            ip = pairing.source_index_for(first_day, src.lag)
        except WindowUnavailable as exc:
            raise SpanUnavailable(str(exc)) from exc
        if ip < config.window_w:
            raise SpanUnavailable(
                f"{src.name}: source history before {first_day} shorter than the window"
            )


def _rebuild(
    target_returns: ReturnPanel,
    sources: list[FeatureSource],
    pairings: list[CalendarPairing],
    screen_config: ScreenConfig,
    config: BacktestConfig,
    as_of: Date,
    ar_lags: int | None,
    edge_fraction: float | None,
    randomize_seed: int,
    rebuild_idx: int,
    workers: int,
) -> _GraphPlan:
    w = config.window_w
    it = target_returns.calendar.index_of(as_of)
    tickers = target_returns.stock_tickers
    t_cols = {tk: target_returns.ticker_index(tk) for tk in tickers}

    if ar_lags is not None:
        return _rebuild_ar(
            target_returns, sources[0], config, as_of, ar_lags, it, tickers, t_cols
        )

    per_source = []
    for src, pairing in zip(sources, pairings):
        cfg = ScreenConfig(
            window_w=screen_config.window_w,
            lag_l=src.lag,
            threshold_tau=screen_config.threshold_tau,
            max_predictors_n=screen_config.max_predictors_n,
            winsor_lower=screen_config.winsor_lower,
            winsor_upper=screen_config.winsor_upper,
            bh_alpha=screen_config.bh_alpha,
        )
        g = build_graph(src.returns, target_returns, pairing, cfg, as_of, workers=workers)
        per_source.append((src.name if len(sources) > 1 else "", g))
    graph = merge_graphs(per_source, screen_config.max_predictors_n)
    if edge_fraction is not None:
        graph = randomize_edges(
            graph,
            edge_fraction,
            int(substream(randomize_seed, "edge_randomization", rebuild_idx).integers(0, 2**63 - 1)),
        )

    # map merged source tickers back to (source index, panel column)
    src_lookup: dict[str, tuple[int, int]] = {}
    for si, src in enumerate(sources):
        prefix = f"{src.name}:" if len(sources) > 1 else ""
        for tk in src.returns.stock_tickers:
            src_lookup[f"{prefix}{tk}"] = (si, src.returns.ticker_index(tk))

    # per-source winsorized window blocks
    blocks: list[np.ndarray | None] = []
    ips: list[int] = []
    for src, pairing in zip(sources, pairings):
        ip = pairing.source_index_for(as_of, src.lag)
        ips.append(ip)
        blocks.append(src.returns.values[ip - w : ip, :])

    trainsets: dict[str, TrainSet] = {}
    feature_cols: dict[str, list[tuple[int, int]]] = {}
    for tpos, tk in enumerate(tickers):
        neighbors = graph.in_neighbors(tpos)
        if not neighbors:
            continue
        ywin = target_returns.values[it - w : it, t_cols[tk]]
        if np.isnan(ywin).any():
            continue
        cols: list[tuple[int, int]] = []
        names: list[str] = []
        ok = True
        xcols = []
        for s_idx, _, _ in neighbors:
            name = graph.source_tickers[s_idx]
            si, col = src_lookup[name]
            xw = blocks[si][:, col]
            if np.isnan(xw).any():
                ok = False
                break
            xcols.append(xw)
            cols.append((si, col))
            names.append(name)
        if not ok:
            continue
        X = winsorize_columns(
            np.column_stack(xcols), screen_config.winsor_lower, screen_config.winsor_upper
        )
        y = np.asarray(
            winsorize_columns(
                ywin[:, None], screen_config.winsor_lower, screen_config.winsor_upper
            )
        )[:, 0]
        trainsets[tk] = TrainSet(X, y, tuple(names))
        feature_cols[tk] = cols
    return _GraphPlan(graph=graph, trainsets=trainsets, feature_cols=feature_cols)


def _rebuild_ar(
    target_returns: ReturnPanel,
    source: FeatureSource,
    config: BacktestConfig,
    as_of: Date,
    ar_lags: int,
    it: int,
    tickers: tuple[str, ...],
    t_cols: dict[str, int],
) -> _GraphPlan:
    """Autoregressive baseline: features are the stock's own previous returns."""
    w = config.window_w
    panel = source.returns
    cal = panel.calendar
    names = tuple(f"lag{m}" for m in range(1, ar_lags + 1))
    trainsets: dict[str, TrainSet] = {}
    for tk in tickers:
        col = panel.ticker_index(tk)
        rows = []
        ok = True
        for k in range(w):
            day_k = target_returns.dates[it - w + k]
            q = cal.count_before(day_k)
            if q < ar_lags:
                ok = False
                break
            vals = panel.values[q - ar_lags : q, col][::-1]  # lag1 first
            if np.isnan(vals).any():
                ok = False
                break
            rows.append(vals)
        ywin = target_returns.values[it - w : it, t_cols[tk]]
        if not ok or np.isnan(ywin).any():
            continue
        X = np.asarray(rows)
        y = winsorize_columns(ywin[:, None])[:, 0]
        trainsets[tk] = TrainSet(X, y, names)
    return _GraphPlan(graph=None, trainsets=trainsets, feature_cols={})


def _day_features(
    plan: _GraphPlan,
    sources: list[FeatureSource],
    pairings: list[CalendarPairing],
    target_returns: ReturnPanel,
    day: Date,
    ar_lags: int | None,
) -> dict[str, np.ndarray]:
    """Evaluation-day feature vectors (raw, never winsorized)."""
    from .errors import WindowUnavailable

    out: dict[str, np.ndarray] = {}
    if ar_lags is not None:
        panel = sources[0].returns
        cal = panel.calendar
        q = cal.count_before(day)
        if q < ar_lags:
            return out
        for tk in plan.trainsets:
            vals = panel.values[q - ar_lags : q, panel.ticker_index(tk)][::-1]
            if not np.isnan(vals).any():
                out[tk] = vals
        return out

    day_idx: list[int | None] = []
    for src, pairing in zip(sources, pairings):
        try:
            day_idx.append(pairing.source_index_for(day, src.lag))
        except WindowUnavailable:
            day_idx.append(None)
    for tk, cols in plan.feature_cols.items():
        x = np.empty(len(cols))
        ok = True
        for m, (si, col) in enumerate(cols):
            ip = day_idx[si]
            if ip is None:
                ok = False
                break
            v = sources[si].returns.values[ip, col]
            if np.isnan(v):
                ok = False
                break
            x[m] = v
        if ok:
            out[tk] = x
    return out


def _fit_all(
    plan: _GraphPlan,
    base_specs: list[ModelSpec],
    seed: int,
    rebuild_idx: int,
    pool: ProcessPoolExecutor | None,
) -> dict[str, dict[str, FittedModel]]:
    jobs = []
    for tk in sorted(plan.trainsets):
        seeds = [_fit_seed(seed, rebuild_idx, tk, s.method) for s in base_specs]
        jobs.append((tk, plan.trainsets[tk], base_specs, seeds))
    if pool is None:
        results = [_fit_stock(*job) for job in jobs]
    else:
        futures = [pool.submit(_fit_stock, *job) for job in jobs]
        results = [f.result() for f in futures]
    return dict(results)


def _assemble_report(
    dates: tuple[Date, ...],
    tickers: tuple[str, ...],
    config: BacktestConfig,
    realized: np.ndarray,
    capital: np.ndarray,
    predictions: dict[str, np.ndarray],
    diagnostics: dict,
) -> BacktestReport:
    n_days = len(dates)
    n_q = len(config.quantile_fractions)
    models: dict[str, ModelResult] = {}
    for method, preds in predictions.items():
        qpnl = np.zeros((n_days, n_q))
        for di in range(n_days):
            day_preds = {
                tk: float(preds[di, j])
                for j, tk in enumerate(tickers)
                if np.isfinite(preds[di, j])
            }
            if not day_preds:
                continue
            sets = quantile_portfolios(day_preds, config.quantile_fractions)
            for q, members in enumerate(sets):
                qpnl[di, q] = daily_pnl(
                    np.asarray([day_preds[tk] for tk in members]),
                    np.asarray([realized[di, tickers.index(tk)] for tk in members]),
                    np.asarray([capital[di, tickers.index(tk)] for tk in members]),
                )
        sr = np.asarray([_sr_or_nan(qpnl[:, q]) for q in range(n_q)])
        models[method] = ModelResult(method=method, predictions=preds, quantile_pnl=qpnl, sharpe=sr)
    return BacktestReport(
        dates=dates,
        target_tickers=tickers,
        quantile_fractions=config.quantile_fractions,
        realized=realized,
        capital=capital,
        models=models,
        diagnostics=diagnostics,
    )
