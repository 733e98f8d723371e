"""Two-market synthetic panels with planted, time-lagged predictive structure.

The source market's close-to-close excess returns are i.i.d. Gaussian. Each
planted edge (j -> i, beta) adds beta times the source stock's lagged excess
return to the target stock's open-to-close excess return, on top of Gaussian
noise. Open prices carry an independent overnight component on both sides,
so close-to-close features are strictly more informative than open-to-close
features under the default plant, and prices are reconstructed by
exponentiating cumulative log returns so that computed returns reproduce the
planted series exactly (up to the ETF subtraction).

Calendars drop a small disjoint fraction of weekdays per market to exercise
the cross-calendar pairing rule. Everything is deterministic given the spec
seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date as Date, timedelta
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .market_data import PricePanel, TradingCalendar, write_price_csv
from .rng import substream
from .screening import BipartiteGraph


@dataclass(frozen=True)
class PlantedSpec:
    n_source: int
    n_target: int
    n_dates: int
    edge_density: float
    beta_range: tuple[float, float] = (0.3, 0.6)
    noise_sigma: float = 0.01
    true_lag: int = 1
    sector_count: int = 4
    shock_coupling: float = 0.0
    seed: int = 0
    source_sigma: float = 0.02
    overnight_sigma: float = 0.01
    etf_sigma: float = 0.01
    holiday_fraction: float = 0.02
    signed_betas: bool = True
    start: Date = Date(2014, 1, 2)

    def __post_init__(self) -> None:
        if self.n_source < 1 or self.n_target < 1 or self.n_dates < 3:
            raise InvalidSpec("need at least 1 stock per market and 3 dates")
        if not 0.0 <= self.edge_density <= 1.0:
            raise InvalidSpec("edge_density outside [0, 1]")
        if self.noise_sigma <= 0 or self.source_sigma <= 0:
            raise InvalidSpec("volatilities must be positive")
        if self.true_lag < 0:
            raise InvalidSpec("true_lag must be >= 0")
        if not 0.0 <= self.holiday_fraction < 0.2:
            raise InvalidSpec("holiday_fraction outside [0, 0.2)")
        if self.beta_range[0] > self.beta_range[1]:
            raise InvalidSpec("beta_range reversed")


@dataclass(frozen=True)
class PlantedEdge:
    source: str
    target: str
    beta: float
    lag: int


@dataclass
class SyntheticMarket:
    spec: PlantedSpec
    source_panel: PricePanel
    target_panel: PricePanel
    planted_edges: tuple[PlantedEdge, ...]
    # planted excess matrices for oracle use; pvCLCL rows align with dates[1:]
    source_excess_pvclcl: np.ndarray
    source_excess_opcl: np.ndarray
    target_excess_opcl: np.ndarray
    target_excess_pvclcl: np.ndarray

    @property
    def same_day_close_before_open(self) -> bool:
        """Session ordering of the planted direction (lag 0 implies same-day)."""
        return self.spec.true_lag == 0


def _weekdays(start: Date, count: int) -> list[Date]:
    out: list[Date] = []
    d = start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def _make_calendars(spec: PlantedSpec, rng: np.random.Generator) -> tuple[list[Date], list[Date]]:
    lead = max(spec.true_lag, 1) + 2
    universe_n = int(math.ceil((spec.n_dates + lead + 10) / (1.0 - spec.holiday_fraction))) + 10
    universe = _weekdays(spec.start, universe_n)
    n_hol = int(spec.holiday_fraction * universe_n)
    perm = rng.permutation(universe_n)
    src_hol = set(int(i) for i in perm[:n_hol])
    tgt_hol = set(int(i) for i in perm[n_hol : 2 * n_hol])
    src_all = [d for i, d in enumerate(universe) if i not in src_hol]
    tgt_all = [d for i, d in enumerate(universe) if i not in tgt_hol]
    source_dates = src_all[: spec.n_dates]
    if len(source_dates) < spec.n_dates:
        raise InvalidSpec("calendar universe too short")

    src_cal = TradingCalendar("synthetic-source", tuple(source_dates))
    same_day = spec.true_lag == 0
    lag = spec.true_lag

    def pair_index(t: Date) -> int | None:
        eligible = src_cal.count_before(t, inclusive=same_day)
        idx = (eligible - 1) if lag == 0 else (eligible - lag)
        return idx if idx >= 1 else None

    start_pos = next(i for i, d in enumerate(tgt_all) if pair_index(d) is not None)
    target_dates = tgt_all[start_pos : start_pos + spec.n_dates]
    if len(target_dates) < spec.n_dates:
        raise InvalidSpec("calendar universe too short for target market")
    return source_dates, target_dates


def _lognormal_matrix(
    rng: np.random.Generator, n_dates: int, n_tickers: int, level: float
) -> np.ndarray:
    base = level * rng.lognormal(0.0, 0.5, size=n_tickers)
    daily = rng.lognormal(0.0, 0.1, size=(n_dates, n_tickers))
    return base[None, :] * daily


def _build_panel(
    market_id: str,
    dates: list[Date],
    tickers: list[str],
    etf_ticker: str,
    raw_clcl: np.ndarray,
    raw_opcl: np.ndarray,
    etf_clcl: np.ndarray,
    etf_opcl: np.ndarray,
    sectors: dict[str, str],
    rng: np.random.Generator,
) -> PricePanel:
    clcl = np.column_stack([raw_clcl, etf_clcl])
    opcl = np.column_stack([raw_opcl, etf_opcl])
    close = 100.0 * np.exp(np.cumsum(clcl, axis=0))
    open_ = close * np.exp(-opcl)
    n_dates, n_cols = close.shape
    volume = _lognormal_matrix(rng, n_dates, n_cols, 1e6)
    mcap = _lognormal_matrix(rng, n_dates, n_cols, 1e9)
    all_tickers = tickers + [etf_ticker]
    return PricePanel(
        market_id=market_id,
        dates=tuple(dates),
        tickers=tuple(all_tickers),
        open=open_,
        close=close,
        volume=volume,
        market_cap=mcap,
        sector={**sectors, etf_ticker: "ETF"},
        etf_ticker=etf_ticker,
    )


def generate(spec: PlantedSpec) -> SyntheticMarket:
    """Generate both panels and the planted edge set for one spec."""
    cal_rng = substream(spec.seed, "synth", "calendars")
    source_dates, target_dates = _make_calendars(spec, cal_rng)
    n = spec.n_dates

    src_tickers = [f"X{i:03d}" for i in range(spec.n_source)]
    tgt_tickers = [f"Y{i:03d}" for i in range(spec.n_target)]
    src_sectors = {t: f"SEC{i % spec.sector_count}" for i, t in enumerate(src_tickers)}
    tgt_sectors = {t: f"SEC{i % spec.sector_count}" for i, t in enumerate(tgt_tickers)}

    # planted graph
    edge_rng = substream(spec.seed, "synth", "edges")
    n_pairs = spec.n_source * spec.n_target
    n_edges = int(round(spec.edge_density * n_pairs))
    chosen = edge_rng.choice(n_pairs, size=n_edges, replace=False) if n_edges else np.empty(0, int)
    lo, hi = spec.beta_range
    magnitudes = edge_rng.uniform(lo, hi, size=n_edges)
    signs = edge_rng.choice([-1.0, 1.0], size=n_edges) if spec.signed_betas else np.ones(n_edges)
    beta_matrix = np.zeros((spec.n_source, spec.n_target))
    planted: list[PlantedEdge] = []
    for pair, mag, sign in zip(np.sort(chosen), magnitudes, signs):
        j, i = divmod(int(pair), spec.n_target)
        beta = float(mag * sign)
        beta_matrix[j, i] = beta
        planted.append(PlantedEdge(src_tickers[j], tgt_tickers[i], beta, spec.true_lag))

    # source market: pvCLCL excess is the signal carrier
    src_rng = substream(spec.seed, "synth", "source_returns")
    src_clcl_excess = src_rng.normal(0.0, spec.source_sigma, size=(n, spec.n_source))
    src_overnight = substream(spec.seed, "synth", "source_overnight").normal(
        0.0, spec.overnight_sigma, size=(n, spec.n_source)
    )
    src_opcl_excess = src_clcl_excess - src_overnight

    etf_rng = substream(spec.seed, "synth", "etf")
    src_etf_clcl = etf_rng.normal(0.0, spec.etf_sigma, size=n)
    src_etf_overnight = etf_rng.normal(0.0, spec.etf_sigma / 2, size=n)
    src_etf_opcl = src_etf_clcl - src_etf_overnight
    tgt_etf_clcl = etf_rng.normal(0.0, spec.etf_sigma, size=n)
    tgt_etf_overnight = etf_rng.normal(0.0, spec.etf_sigma / 2, size=n)
    tgt_etf_opcl = tgt_etf_clcl - tgt_etf_overnight

    # target market: OPCL excess = planted response + noise
    src_cal = TradingCalendar("synthetic-source", tuple(source_dates))
    same_day = spec.true_lag == 0
    noise_rng = substream(spec.seed, "synth", "target_noise")
    tgt_opcl_excess = noise_rng.normal(0.0, spec.noise_sigma, size=(n, spec.n_target))
    shock_scale = 1.0 + spec.shock_coupling * np.abs(src_etf_clcl) / spec.etf_sigma
    for it, t in enumerate(target_dates):
        eligible = src_cal.count_before(t, inclusive=same_day)
        ip = (eligible - 1) if spec.true_lag == 0 else (eligible - spec.true_lag)
        tgt_opcl_excess[it] += (
            shock_scale[ip] * src_clcl_excess[ip] @ beta_matrix
        )
    tgt_overnight = substream(spec.seed, "synth", "target_overnight").normal(
        0.0, spec.overnight_sigma, size=(n, spec.n_target)
    )
    tgt_clcl_excess = tgt_opcl_excess + tgt_overnight

    src_panel = _build_panel(
        "XMKT",
        source_dates,
        src_tickers,
        "XETF",
        src_clcl_excess + src_etf_clcl[:, None],
        src_opcl_excess + src_etf_opcl[:, None],
        src_etf_clcl,
        src_etf_opcl,
        src_sectors,
        substream(spec.seed, "synth", "source_volumes"),
    )
    tgt_panel = _build_panel(
        "YMKT",
        target_dates,
        tgt_tickers,
        "YETF",
        tgt_clcl_excess + tgt_etf_clcl[:, None],
        tgt_opcl_excess + tgt_etf_opcl[:, None],
        tgt_etf_clcl,
        tgt_etf_opcl,
        tgt_sectors,
        substream(spec.seed, "synth", "target_volumes"),
    )
    return SyntheticMarket(
        spec=spec,
        source_panel=src_panel,
        target_panel=tgt_panel,
        planted_edges=tuple(planted),
        source_excess_pvclcl=src_clcl_excess[1:],
        source_excess_opcl=src_opcl_excess,
        target_excess_opcl=tgt_opcl_excess,
        target_excess_pvclcl=tgt_clcl_excess[1:],
    )


# --- analytic calibration helpers ---------------------------------------------


def expected_abs_tstat(spec: PlantedSpec, window: int) -> float:
    """Analytic expectation of |t| for an average planted pair over `window`.

    t ~ beta * sd(x) * sqrt(w) / sigma_resid, with the residual absorbing the
    noise and the other planted predictors of the same target.
    """
    lo, hi = spec.beta_range
    mean_abs_beta = (lo + hi) / 2.0
    mean_beta_sq = (lo * lo + lo * hi + hi * hi) / 3.0
    k_others = max(spec.edge_density * spec.n_source - 1.0, 0.0)
    resid_var = spec.noise_sigma**2 + k_others * mean_beta_sq * spec.source_sigma**2
    return mean_abs_beta * spec.source_sigma * math.sqrt(window) / math.sqrt(resid_var)


def noise_for_expected_tstat(
    n_source: int,
    edge_density: float,
    beta_range: tuple[float, float],
    source_sigma: float,
    window: int,
    target_abs_t: float,
) -> float:
    """noise_sigma making expected_abs_tstat equal target_abs_t; InvalidSpec if unreachable."""
    lo, hi = beta_range
    mean_abs_beta = (lo + hi) / 2.0
    mean_beta_sq = (lo * lo + lo * hi + hi * hi) / 3.0
    k_others = max(edge_density * n_source - 1.0, 0.0)
    resid_var = (mean_abs_beta * source_sigma * math.sqrt(window) / target_abs_t) ** 2
    noise_var = resid_var - k_others * mean_beta_sq * source_sigma**2
    if noise_var <= 0:
        raise InvalidSpec(
            f"expected |t| = {target_abs_t} unreachable: cross-talk already caps it"
        )
    return math.sqrt(noise_var)


# --- recovery scoring -----------------------------------------------------------


def recovery_metrics(
    graph: BipartiteGraph, planted: tuple[PlantedEdge, ...]
) -> tuple[float, float]:
    """(precision, recall) of graph edges against the planted set.

    A found edge counts as a true positive only if the pair is planted and
    the recovered t-statistic carries the planted slope's sign. Precision is
    NaN when nothing was found; recall is NaN when nothing was planted.
    """
    planted_sign = {(e.source, e.target): math.copysign(1.0, e.beta) for e in planted}
    found = graph.edges()
    tp = sum(
        1
        for s, t, tb, _ in found
        if (s, t) in planted_sign and math.copysign(1.0, tb) == planted_sign[(s, t)]
    )
    precision = tp / len(found) if found else math.nan
    recall = tp / len(planted) if planted else math.nan
    return precision, recall


def write_planted_csv(edges: tuple[PlantedEdge, ...], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("source,target,beta,lag\n")
        for e in edges:
            fh.write(f"{e.source},{e.target},{e.beta!r},{e.lag}\n")


def write_market_csvs(market: SyntheticMarket, out_dir: str | Path) -> dict[str, Path]:
    """Emit both panels and the planted edges in the CSV contracts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "source": out / "source_market.csv",
        "target": out / "target_market.csv",
        "planted": out / "planted_edges.csv",
    }
    write_price_csv(market.source_panel, paths["source"])
    write_price_csv(market.target_panel, paths["target"])
    write_planted_csv(market.planted_edges, paths["planted"])
    return paths
