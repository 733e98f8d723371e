"""Directed bipartite predictor graphs from rolling-window pairwise regression.

For every ordered (source stock, target stock) pair, the slope t-statistic of
the simple regression of the target's return window on the source's lagged
return window is computed; pairs with |t| above a threshold become directed
edges source -> target. The kernel is vectorized over all pairs: with
centered window matrices X (w x m) and Y (w x k), all m*k regressions reduce
to one cross-product X'Y plus per-column sums, evaluated in fixed-size target
chunks so results are bit-identical at any worker count.

Windows are winsorized per stock before the regression. Trading-day
arithmetic runs on each market's own calendar; CalendarPairing maps a target
date to the lagged source date whose session closed before the target session
opened.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    ConstantPredictor,
    DataError,
    DegeneratePerfectFit,
    InsufficientCandidates,
    TickerSetMismatch,
    UnlabeledTicker,
    WindowUnavailable,
)
from .market_data import ReturnPanel, TradingCalendar, winsorize_columns
from .rng import substream

# Perfect linear fits (SSE < DEGENERATE_REL_TOL * sum(y^2)) get a sentinel
# t-statistic of +-1e9 carrying the slope sign: maximal evidence, not an
# error to drop. A zero slope yields sentinel 0, i.e. no edge.
T_SENTINEL = 1e9
DEGENERATE_REL_TOL = 1e-14

_CHUNK = 64  # fixed target-chunk width; identical chunking at every worker count


@dataclass(frozen=True)
class ScreenConfig:
    """Parameters of the edge-selection screen."""

    window_w: int = 250
    lag_l: int = 1
    threshold_tau: float = 2.0
    max_predictors_n: int | None = 50
    winsor_lower: float = 0.5
    winsor_upper: float = 99.5
    bh_alpha: float | None = None  # optional Benjamini-Hochberg filter, off by default

    def __post_init__(self) -> None:
        if self.window_w < 3:
            raise ConfigError("window_w must be >= 3")
        if self.lag_l < 0:
            raise ConfigError("lag_l must be >= 0")
        if self.threshold_tau <= 0:
            raise ConfigError("threshold_tau must be > 0")
        if self.max_predictors_n is not None and self.max_predictors_n < 1:
            raise ConfigError("max_predictors_n must be >= 1 or None")


@dataclass(frozen=True)
class PairStat:
    """Simple-regression summary for one (source, target) pair."""

    beta: float
    alpha: float
    t_beta: float
    sse: float
    x_var_sum: float


def pair_tstat(x: np.ndarray, y: np.ndarray) -> PairStat:
    """Slope t-statistic of regressing y on x over one window.

    beta = cov(x,y)/var(x); s_e = sqrt(SSE/(w-2)); t = beta / (s_e/sqrt(Sxx)).
    Raises ConstantPredictor when var(x) = 0 and DegeneratePerfectFit when the
    fit is numerically exact (see T_SENTINEL).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("x and y must be equal-length vectors")
    w = x.size
    if w < 3:
        raise DataError("pair_tstat needs w >= 3")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise ConstantPredictor("predictor window is constant")
    yc = y - y.mean()
    sxy = float(xc @ yc)
    beta = sxy / sxx
    alpha = float(y.mean() - beta * x.mean())
    sse = max(float(yc @ yc) - beta * sxy, 0.0)
    sumy2 = float(y @ y)
    if sse < DEGENERATE_REL_TOL * sumy2 or sumy2 == 0.0:
        raise DegeneratePerfectFit(beta, alpha, sse, sxx)
    se = math.sqrt(sse / (w - 2))
    t = beta / (se / math.sqrt(sxx))
    return PairStat(beta=beta, alpha=alpha, t_beta=t, sse=sse, x_var_sum=sxx)


@dataclass(frozen=True)
class CalendarPairing:
    """Maps target trading dates to lagged source trading dates.

    `same_day_close_before_open` states whether a source session on calendar
    date t closes strictly before the target session on t opens (true for a
    Chinese source and a U.S. target; false in the opposite direction and for
    same-market screens). Lag l >= 1 picks the l-th most recent source date
    whose session closed before the target open; l = 0 requires same-day
    eligibility and picks the most recent one (normally the same calendar
    date).
    """

    source: TradingCalendar
    target: TradingCalendar
    same_day_close_before_open: bool

    def source_index_for(self, target_date: Date, lag: int) -> int:
        eligible = self.source.count_before(
            target_date, inclusive=self.same_day_close_before_open
        )
        if lag == 0:
            if not self.same_day_close_before_open:
                raise WindowUnavailable(
                    "lag 0 needs a source market that closes before the target opens"
                )
            idx = eligible - 1
        else:
            idx = eligible - lag
        if idx < 0:
            raise WindowUnavailable(f"no source date {lag} steps before {target_date}")
        return idx

    def source_date_for(self, target_date: Date, lag: int) -> Date:
        return self.source.dates[self.source_index_for(target_date, lag)]


def make_pairing(source, target, same_day_close_before_open: bool) -> CalendarPairing:
    """Pairing over the calendars of the panels that will actually be indexed.

    Pass the return panels being screened, not the price panels: a pvCLCL
    panel is one date shorter than its price panel, and a pairing built on
    the wrong calendar would be off by one row.
    """
    return CalendarPairing(
        source=source.calendar,
        target=target.calendar,
        same_day_close_before_open=same_day_close_before_open,
    )


@dataclass
class BipartiteGraph:
    """Directed source -> target edges weighted by screening t-statistics."""

    source_tickers: tuple[str, ...]
    target_tickers: tuple[str, ...]
    as_of: Date
    config: ScreenConfig
    src_idx: np.ndarray
    tgt_idx: np.ndarray
    t_beta: np.ndarray
    synthetic: np.ndarray
    source_active: np.ndarray | None = None  # sources with usable windows at build time
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        self.src_idx = np.asarray(self.src_idx, dtype=np.int64)
        self.tgt_idx = np.asarray(self.tgt_idx, dtype=np.int64)
        self.t_beta = np.asarray(self.t_beta, dtype=float)
        self.synthetic = np.asarray(self.synthetic, dtype=bool)
        if self.source_active is None:
            self.source_active = np.ones(len(self.source_tickers), dtype=bool)

    @property
    def n_edges(self) -> int:
        return int(self.src_idx.size)

    def edges(self) -> list[tuple[str, str, float, bool]]:
        return [
            (
                self.source_tickers[s],
                self.target_tickers[t],
                float(tb),
                bool(sy),
            )
            for s, t, tb, sy in zip(self.src_idx, self.tgt_idx, self.t_beta, self.synthetic)
        ]

    def biadjacency(self) -> np.ndarray:
        """Dense (targets x sources) weight matrix; absent edges are 0."""
        b = np.zeros((len(self.target_tickers), len(self.source_tickers)))
        b[self.tgt_idx, self.src_idx] = self.t_beta
        return b

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.tgt_idx, minlength=len(self.target_tickers)).astype(np.int64)

    def in_neighbors(self, target_pos: int) -> list[tuple[int, float, bool]]:
        """(source index, weight, synthetic) triples for one target, strongest first."""
        mask = self.tgt_idx == target_pos
        rows = sorted(
            zip(self.src_idx[mask], self.t_beta[mask], self.synthetic[mask]),
            key=lambda r: (-abs(r[1]), self.source_tickers[r[0]]),
        )
        return [(int(s), float(t), bool(sy)) for s, t, sy in rows]


def _canonical_order(
    source_tickers: tuple[str, ...],
    target_tickers: tuple[str, ...],
    src: np.ndarray,
    tgt: np.ndarray,
    t: np.ndarray,
    syn: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Sort edges by (target, |t| desc, source ticker) for stable output."""
    if src.size == 0:
        return src, tgt, t, syn
    keys = sorted(
        range(src.size),
        key=lambda i: (target_tickers[tgt[i]], -abs(t[i]), source_tickers[src[i]]),
    )
    keys = np.asarray(keys)
    return src[keys], tgt[keys], t[keys], syn[keys]


def _screen_chunk(
    xc: np.ndarray,
    sxx: np.ndarray,
    yc: np.ndarray,
    syy: np.ndarray,
    sumy2: np.ndarray,
    w: int,
) -> tuple[np.ndarray, np.ndarray]:
    """t-statistics (m x c) and degeneracy mask for one chunk of targets."""
    sxy = xc.T @ yc
    beta = sxy / sxx[:, None]
    sse = np.maximum(syy[None, :] - beta * sxy, 0.0)
    degenerate = (sse < DEGENERATE_REL_TOL * sumy2[None, :]) | (sumy2[None, :] == 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta * np.sqrt(sxx[:, None] * (w - 2) / sse)
    t = np.where(degenerate, np.sign(beta) * T_SENTINEL, t)
    t = np.where(sumy2[None, :] == 0.0, 0.0, t)
    return t, degenerate


def screen_tstats(
    x_windows: np.ndarray,
    y_windows: np.ndarray,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All-pairs regression t-statistics for winsorized window matrices.

    Returns (t, degenerate, constant_x): t has shape (m sources, k targets);
    columns of constant sources are NaN and flagged in constant_x.
    """
    X = np.asarray(x_windows, dtype=float)
    Y = np.asarray(y_windows, dtype=float)
    w = X.shape[0]
    if Y.shape[0] != w or w < 3:
        raise DataError("window matrices must share a length >= 3 first axis")
    xc = X - X.mean(axis=0)
    sxx = np.einsum("ij,ij->j", xc, xc)
    constant_x = sxx == 0.0
    sxx_safe = np.where(constant_x, 1.0, sxx)
    yc = Y - Y.mean(axis=0)
    syy = np.einsum("ij,ij->j", yc, yc)
    sumy2 = np.einsum("ij,ij->j", Y, Y)

    k = Y.shape[1]
    chunks = [(a, min(a + _CHUNK, k)) for a in range(0, k, _CHUNK)]
    t = np.empty((X.shape[1], k))
    degenerate = np.empty((X.shape[1], k), dtype=bool)
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_screen_chunk, xc, sxx_safe, yc[:, a:b], syy[a:b], sumy2[a:b], w)
                for a, b in chunks
            ]
            for (a, b), fut in zip(chunks, futures):
                t[:, a:b], degenerate[:, a:b] = fut.result()
    else:
        for a, b in chunks:
            t[:, a:b], degenerate[:, a:b] = _screen_chunk(
                xc, sxx_safe, yc[:, a:b], syy[a:b], sumy2[a:b], w
            )
    t[constant_x, :] = np.nan
    degenerate[constant_x, :] = False
    return t, degenerate, constant_x


def _bh_mask(t: np.ndarray, w: int, alpha: float) -> np.ndarray:
    """Benjamini-Hochberg rejection mask over all finite pair t-statistics."""
    from scipy import stats

    finite = np.isfinite(t)
    p = np.full(t.shape, np.nan)
    p[finite] = 2.0 * stats.t.sf(np.abs(t[finite]), w - 2)
    flat = p[finite]
    order = np.argsort(flat, kind="stable")
    n = flat.size
    ranked = flat[order]
    passed = ranked <= (np.arange(1, n + 1) / n) * alpha
    cutoff = ranked[np.nonzero(passed)[0][-1]] if passed.any() else -1.0
    return np.where(np.isnan(p), False, p <= cutoff)


def build_graph(
    source: ReturnPanel,
    target: ReturnPanel,
    pairing: CalendarPairing,
    config: ScreenConfig,
    as_of: Date,
    workers: int = 1,
) -> BipartiteGraph:
    """Screen all ordered pairs at one rebuild date.

    The target window is the config.window_w dates before as_of on the target
    calendar; the source window is the same span ending the day before the
    paired lagged source date. Stocks with any missing value inside their
    window are skipped and recorded in diagnostics. Edge rule: |t| > tau (or
    degenerate sentinel), then optionally the per-target top
    max_predictors_n by (|t| desc, source ticker asc).
    """
    w = config.window_w
    if pairing.source.dates != source.dates or pairing.target.dates != target.dates:
        raise DataError("pairing calendars do not match the screened panels")
    it = target.calendar.index_of(as_of)
    if it < w:
        raise WindowUnavailable(f"target window before {as_of} incomplete")
    ip = pairing.source_index_for(as_of, config.lag_l)
    if ip < w:
        raise WindowUnavailable(f"source window before {as_of} (lag {config.lag_l}) incomplete")

    src_tickers = source.stock_tickers
    tgt_tickers = target.stock_tickers
    src_cols = [source.ticker_index(tk) for tk in src_tickers]
    tgt_cols = [target.ticker_index(tk) for tk in tgt_tickers]
    Xw = source.values[ip - w : ip, :][:, src_cols]
    Yw = target.values[it - w : it, :][:, tgt_cols]

    x_ok = ~np.isnan(Xw).any(axis=0)
    y_ok = ~np.isnan(Yw).any(axis=0)
    diagnostics = {
        "as_of": as_of,
        "skipped_sources": tuple(tk for tk, ok in zip(src_tickers, x_ok) if not ok),
        "skipped_targets": tuple(tk for tk, ok in zip(tgt_tickers, y_ok) if not ok),
    }

    edges_src: list[int] = []
    edges_tgt: list[int] = []
    edges_t: list[float] = []

    if x_ok.any() and y_ok.any():
        Xv = winsorize_columns(Xw[:, x_ok], config.winsor_lower, config.winsor_upper)
        Yv = winsorize_columns(Yw[:, y_ok], config.winsor_lower, config.winsor_upper)
        t, _, constant_x = screen_tstats(Xv, Yv, workers=workers)
        diagnostics["constant_sources"] = tuple(
            tk for tk, c in zip(np.asarray(src_tickers, dtype=object)[x_ok], constant_x) if c
        )
        with np.errstate(invalid="ignore"):
            selected = np.abs(t) > config.threshold_tau
        selected &= np.isfinite(t)
        if config.bh_alpha is not None:
            selected &= _bh_mask(t, w, config.bh_alpha)

        x_map = np.nonzero(x_ok)[0]  # kernel column -> position in src_tickers
        y_map = np.nonzero(y_ok)[0]
        n_cap = config.max_predictors_n
        for jj in range(t.shape[1]):
            cand = np.nonzero(selected[:, jj])[0]
            if cand.size == 0:
                continue
            cand = sorted(cand, key=lambda i: (-abs(t[i, jj]), src_tickers[x_map[i]]))
            if n_cap is not None:
                cand = cand[:n_cap]
            for i in cand:
                edges_src.append(int(x_map[i]))
                edges_tgt.append(int(y_map[jj]))
                edges_t.append(float(t[i, jj]))
    else:
        diagnostics["constant_sources"] = ()

    src = np.asarray(edges_src, dtype=np.int64)
    tgt = np.asarray(edges_tgt, dtype=np.int64)
    tb = np.asarray(edges_t, dtype=float)
    syn = np.zeros(src.size, dtype=bool)
    src, tgt, tb, syn = _canonical_order(src_tickers, tgt_tickers, src, tgt, tb, syn)
    active = np.zeros(len(src_tickers), dtype=bool)
    active[np.nonzero(x_ok)[0]] = True
    return BipartiteGraph(
        source_tickers=src_tickers,
        target_tickers=tgt_tickers,
        as_of=as_of,
        config=config,
        src_idx=src,
        tgt_idx=tgt,
        t_beta=tb,
        synthetic=syn,
        source_active=active,
        diagnostics=diagnostics,
    )


def merge_graphs(
    graphs: list[tuple[str, BipartiteGraph]],
    max_predictors_n: int | None,
) -> BipartiteGraph:
    """Union of per-source-market graphs over a shared target set.

    Source tickers are namespaced `prefix:ticker` (plain when the prefix is
    empty); the per-target cap is re-applied across the union.
    """
    if not graphs:
        raise DataError("merge_graphs needs at least one graph")
    base = graphs[0][1]
    for _, g in graphs[1:]:
        if g.target_tickers != base.target_tickers:
            raise TickerSetMismatch("merged graphs must share target tickers")
    merged_sources: list[str] = []
    active_parts: list[np.ndarray] = []
    offsets = []
    for prefix, g in graphs:
        offsets.append(len(merged_sources))
        names = [f"{prefix}:{tk}" if prefix else tk for tk in g.source_tickers]
        merged_sources.extend(names)
        active_parts.append(np.asarray(g.source_active, dtype=bool))
    sources = tuple(merged_sources)

    edges_src: list[int] = []
    edges_tgt: list[int] = []
    edges_t: list[float] = []
    edges_syn: list[bool] = []
    for tpos in range(len(base.target_tickers)):
        cand: list[tuple[int, float, bool]] = []
        for (prefix, g), off in zip(graphs, offsets):
            for s, tb, sy in g.in_neighbors(tpos):
                cand.append((off + s, tb, sy))
        cand.sort(key=lambda r: (-abs(r[1]), sources[r[0]]))
        if max_predictors_n is not None:
            cand = cand[:max_predictors_n]
        for s, tb, sy in cand:
            edges_src.append(s)
            edges_tgt.append(tpos)
            edges_t.append(tb)
            edges_syn.append(sy)

    src = np.asarray(edges_src, dtype=np.int64)
    tgt = np.asarray(edges_tgt, dtype=np.int64)
    tb = np.asarray(edges_t, dtype=float)
    syn = np.asarray(edges_syn, dtype=bool)
    src, tgt, tb, syn = _canonical_order(sources, base.target_tickers, src, tgt, tb, syn)
    return BipartiteGraph(
        source_tickers=sources,
        target_tickers=base.target_tickers,
        as_of=base.as_of,
        config=base.config,
        src_idx=src,
        tgt_idx=tgt,
        t_beta=tb,
        synthetic=syn,
        source_active=np.concatenate(active_parts) if active_parts else None,
    )


# --- graph analytics ---------------------------------------------------------


def in_degree_percentiles(graph: BipartiteGraph) -> tuple[float, float, float]:
    """25th/50th/75th percentiles of in-degree across all targets, zeros included."""
    deg = graph.in_degrees()
    p25, p50, p75 = np.percentile(deg, [25, 50, 75])
    return float(p25), float(p50), float(p75)


def time_average_biadjacency(graphs: list[BipartiteGraph]) -> np.ndarray:
    """Elementwise mean of biadjacency matrices across rebuild dates."""
    if not graphs:
        raise DataError("need at least one graph")
    first = graphs[0]
    acc = np.zeros((len(first.target_tickers), len(first.source_tickers)))
    for g in graphs:
        if (
            g.source_tickers != first.source_tickers
            or g.target_tickers != first.target_tickers
        ):
            raise TickerSetMismatch("graphs must share ticker sets")
        acc += g.biadjacency()
    return acc / len(graphs)


def sector_block_median_abs(
    matrix: np.ndarray,
    target_tickers: tuple[str, ...],
    source_tickers: tuple[str, ...],
    target_sectors: dict[str, str],
    source_sectors: dict[str, str],
) -> tuple[tuple[str, ...], tuple[str, ...], np.ndarray]:
    """Median |entry| within each (target sector, source sector) block.

    Returns (target sector labels, source sector labels, block matrix) with
    labels sorted ascending.
    """
    m = np.asarray(matrix, dtype=float)
    if m.shape != (len(target_tickers), len(source_tickers)):
        raise DataError("matrix shape does not match ticker lists")

    def labels(tickers: tuple[str, ...], sectors: dict[str, str]) -> list[str]:
        out = []
        for tk in tickers:
            lab = sectors.get(tk, "")
            if not lab:
                raise UnlabeledTicker(f"no sector label for {tk}")
            out.append(lab)
        return out

    tlabs = labels(target_tickers, target_sectors)
    slabs = labels(source_tickers, source_sectors)
    trows = tuple(sorted(set(tlabs)))
    scols = tuple(sorted(set(slabs)))
    out = np.full((len(trows), len(scols)), np.nan)
    for a, ts in enumerate(trows):
        rmask = np.asarray([lab == ts for lab in tlabs])
        for b, ss in enumerate(scols):
            cmask = np.asarray([lab == ss for lab in slabs])
            block = np.abs(m[np.ix_(rmask, cmask)])
            if block.size:
                out[a, b] = np.median(block)
    return trows, scols, out


# --- edge randomization --------------------------------------------------------


def randomize_edges(graph: BipartiteGraph, fraction: float, seed: int) -> BipartiteGraph:
    """Replace a fraction of each target's incident edges with random sources.

    Per target, round(fraction * in-degree) (half up) uniformly chosen edges
    are rewired to uniformly chosen previously-unconnected active sources.
    In-degrees are preserved exactly. Replacement edges keep the replaced
    edge's weight magnitude and are flagged synthetic.
    """
    if not 0.0 <= fraction <= 1.0:
        raise DataError(f"fraction {fraction} outside [0, 1]")
    if fraction == 0.0 or graph.n_edges == 0:
        return BipartiteGraph(
            source_tickers=graph.source_tickers,
            target_tickers=graph.target_tickers,
            as_of=graph.as_of,
            config=graph.config,
            src_idx=graph.src_idx.copy(),
            tgt_idx=graph.tgt_idx.copy(),
            t_beta=graph.t_beta.copy(),
            synthetic=graph.synthetic.copy(),
            source_active=graph.source_active.copy(),
        )

    active = np.nonzero(graph.source_active)[0]
    new_src: list[int] = []
    new_tgt: list[int] = []
    new_t: list[float] = []
    new_syn: list[bool] = []
    for tpos in range(len(graph.target_tickers)):
        mask = graph.tgt_idx == tpos
        k = int(mask.sum())
        if k == 0:
            continue
        srcs = graph.src_idx[mask]
        ts = graph.t_beta[mask]
        syns = graph.synthetic[mask]
        r = int(math.floor(fraction * k + 0.5))
        if r == 0:
            new_src.extend(int(s) for s in srcs)
            new_tgt.extend([tpos] * k)
            new_t.extend(float(v) for v in ts)
            new_syn.extend(bool(v) for v in syns)
            continue
        rng = substream(seed, "randomize_edges", graph.target_tickers[tpos])
        replace_pos = rng.choice(k, size=r, replace=False)
        connected = set(int(s) for s in srcs)
        candidates = np.asarray([s for s in active if int(s) not in connected], dtype=np.int64)
        if candidates.size < r:
            raise InsufficientCandidates(
                f"target {graph.target_tickers[tpos]}: {candidates.size} unconnected "
                f"sources available, {r} needed"
            )
        replacements = candidates[rng.choice(candidates.size, size=r, replace=False)]
        replaced = np.zeros(k, dtype=bool)
        replaced[replace_pos] = True
        it = iter(replacements)
        for pos in range(k):
            if replaced[pos]:
                new_src.append(int(next(it)))
                new_t.append(abs(float(ts[pos])))
                new_syn.append(True)
            else:
                new_src.append(int(srcs[pos]))
                new_t.append(float(ts[pos]))
                new_syn.append(bool(syns[pos]))
            new_tgt.append(tpos)

    src = np.asarray(new_src, dtype=np.int64)
    tgt = np.asarray(new_tgt, dtype=np.int64)
    tb = np.asarray(new_t, dtype=float)
    syn = np.asarray(new_syn, dtype=bool)
    src, tgt, tb, syn = _canonical_order(graph.source_tickers, graph.target_tickers, src, tgt, tb, syn)
    return BipartiteGraph(
        source_tickers=graph.source_tickers,
        target_tickers=graph.target_tickers,
        as_of=graph.as_of,
        config=graph.config,
        src_idx=src,
        tgt_idx=tgt,
        t_beta=tb,
        synthetic=syn,
        source_active=graph.source_active.copy(),
    )


# --- exports -------------------------------------------------------------------


def write_graph_csv(graph: BipartiteGraph, path: str | Path) -> None:
    """Edge list as `as_of,source,target,t_beta,synthetic_flag`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("as_of,source,target,t_beta,synthetic_flag\n")
        for s, t, tb, sy in graph.edges():
            fh.write(f"{graph.as_of.isoformat()},{s},{t},{tb!r},{int(sy)}\n")


def write_biadjacency_csv(
    matrix: np.ndarray,
    target_tickers: tuple[str, ...],
    source_tickers: tuple[str, ...],
    path: str | Path,
) -> None:
    """Dense matrix with a source-ticker header row and target-ticker leading column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    m = np.asarray(matrix, dtype=float)
    with path.open("w") as fh:
        fh.write("target," + ",".join(source_tickers) + "\n")
        for i, tk in enumerate(target_tickers):
            fh.write(tk + "," + ",".join(repr(float(v)) for v in m[i]) + "\n")
