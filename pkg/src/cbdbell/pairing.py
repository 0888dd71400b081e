"""From raw streams to paired outcomes: windowing, coincidences, tables, scans.

Windowing uses fixed synchronized windows of width ``W``. Side A's window k
is ``[k*W, (k+1)*W)``; side B's is shifted by ``shift_ns``. Only window
indices whose windows lie inside ``[0, duration)`` on both sides are used,
so the two sides always share one window range.

A window holding one click takes that click's outcome, an empty window is
0, and a window with two or more clicks is discarded. Samples are stored
sparsely (the nonzero windows plus the discarded ones) since runs of
seconds contain billions of nanosecond-scale windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import EmptyContextError, EmptyScanError, InsufficientDataError, ProtocolMismatchError
from .inequalities import CbdStatistics, Variant, cbd_statistics
from .model import ContextCounts, CyclicSystemSpec, ExpectationTable
from .simulator import TimeTaggedStream
from .stats import Interval, VerdictReport, assess, normal_quantile


def window_range(duration_ns: int, W_ns: int, shift_ns: int) -> tuple[int, int]:
    """``(first index, count)`` of windows valid on both sides."""
    if W_ns < 1:
        raise ValueError(f"window width must be >= 1 ns, got {W_ns}")
    first = -(-max(0, -shift_ns) // W_ns)
    stop = (duration_ns - max(0, shift_ns)) // W_ns
    return first, max(0, stop - first)


@dataclass(frozen=True, eq=False)
class WindowedSample:
    """One side after windowing.

    ``index`` holds the (absolute) indices of windows with exactly one click
    and ``values`` their outcomes; ``discarded`` lists multi-click windows.
    All other windows in ``[first_window, first_window + n_windows)`` are 0.
    """

    side: str
    setting: str
    W_ns: int
    shift_ns: int
    first_window: int
    n_windows: int
    index: np.ndarray
    values: np.ndarray
    discarded: np.ndarray
    duration_ns: int = 0

    @property
    def kept_windows(self) -> int:
        return self.n_windows - int(self.discarded.size)

    @property
    def clicks(self) -> int:
        return int(self.index.size)

    def dense(self) -> np.ndarray:
        """Values over the full window range; discarded windows read as 0."""
        out = np.zeros(self.n_windows, dtype=np.int8)
        out[self.index - self.first_window] = self.values
        return out

    def kept_mask(self) -> np.ndarray:
        mask = np.ones(self.n_windows, dtype=bool)
        mask[self.discarded - self.first_window] = False
        return mask

    def protocol(self) -> tuple[int, int, int, int]:
        return (self.W_ns, self.shift_ns, self.first_window, self.n_windows)


def window_filter(stream: TimeTaggedStream, W_ns: int, shift_ns: int = 0) -> WindowedSample:
    """Step-2 sample of one stream. ``shift_ns`` moves only side B's windows."""
    if int(W_ns) != W_ns or W_ns < 1:
        raise ValueError(f"window width must be a positive integer, got {W_ns}")
    W_ns, shift_ns = int(W_ns), int(shift_ns)
    first, count = window_range(stream.duration_ns, W_ns, shift_ns)
    origin = shift_ns if stream.side == "B" else 0
    k = (stream.t - origin) // W_ns
    inside = (k >= first) & (k < first + count)
    k, o = k[inside], stream.outcome[inside]
    uniq, start, counts = np.unique(k, return_index=True, return_counts=True)
    single = counts == 1
    return WindowedSample(
        side=stream.side,
        setting=stream.setting,
        W_ns=W_ns,
        shift_ns=shift_ns,
        first_window=first,
        n_windows=count,
        index=uniq[single],
        values=o[start[single]],
        discarded=uniq[~single],
        duration_ns=stream.duration_ns,
    )


@dataclass(frozen=True, eq=False)
class PairedSample:
    context: str
    a: np.ndarray
    b: np.ndarray
    W_ns: int
    shift_ns: int

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=np.int8))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.int8))
        if self.a.shape != self.b.shape:
            raise ValueError("paired outcome arrays differ in length")

    @property
    def N(self) -> int:
        return int(self.a.size)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.a.tolist(), self.b.tolist()))

    def counts(self) -> ContextCounts:
        a, b = self.a, self.b
        return ContextCounts(
            self.context,
            int(np.count_nonzero((a > 0) & (b > 0))),
            int(np.count_nonzero((a > 0) & (b < 0))),
            int(np.count_nonzero((a < 0) & (b > 0))),
            int(np.count_nonzero((a < 0) & (b < 0))),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, PairedSample):
            return NotImplemented
        return (
            (self.context, self.W_ns, self.shift_ns) == (other.context, other.W_ns, other.shift_ns)
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
        )


def coincidence_pair(a: WindowedSample, b: WindowedSample, context: str = "") -> PairedSample:
    """Step-3 sample: windows where both sides hold exactly one click."""
    if a.protocol() != b.protocol():
        raise ProtocolMismatchError(
            f"windows differ: (W, shift, first, count) {a.protocol()} vs {b.protocol()}"
        )
    _, ia, ib = np.intersect1d(a.index, b.index, assume_unique=True, return_indices=True)
    return PairedSample(context, a.values[ia], b.values[ib], a.W_ns, a.shift_ns)


def pair_streams(
    stream_a: TimeTaggedStream, stream_b: TimeTaggedStream, W_ns: int, shift_ns: int = 0, context: str = ""
) -> tuple[WindowedSample, WindowedSample, PairedSample]:
    if stream_a.duration_ns != stream_b.duration_ns:
        raise ProtocolMismatchError(
            f"stream durations differ: {stream_a.duration_ns} vs {stream_b.duration_ns}"
        )
    wa = window_filter(stream_a, W_ns, shift_ns)
    wb = window_filter(stream_b, W_ns, shift_ns)
    return wa, wb, coincidence_pair(wa, wb, context)


def estimate_table(paired: Mapping[str, PairedSample] | Sequence[PairedSample], spec: CyclicSystemSpec) -> ExpectationTable:
    if not isinstance(paired, Mapping):
        paired = {p.context: p for p in paired}
    rows = []
    for cid in spec.context_ids:
        if cid not in paired or paired[cid].N == 0:
            raise EmptyContextError(f"no coincidences for context {cid}")
        counts = paired[cid].counts()
        rows.append(ContextCounts(cid, counts.n_pp, counts.n_pm, counts.n_mp, counts.n_mm))
    return ExpectationTable(spec, tuple(rows))


@dataclass(frozen=True)
class NoSignalingResult:
    max_marginal_gap: float
    ci: Interval
    passed: bool
    means: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "max_marginal_gap": self.max_marginal_gap,
            "ci": [self.ci.lo, self.ci.hi],
            "pass": self.passed,
            "means": list(self.means),
        }


def _difference_check(m1, v1, n1, m2, v2, n2, alpha) -> NoSignalingResult:
    if n1 < 2 or n2 < 2:
        raise InsufficientDataError(f"need >= 2 observations per sample, got {n1} and {n2}")
    z = normal_quantile(1 - alpha / 2)
    half = z * math.sqrt(v1 / n1 + v2 / n2)
    d = m1 - m2
    ci = Interval(d - half, d + half, 1 - alpha)
    return NoSignalingResult(abs(d), ci, ci.lo <= 0 <= ci.hi, (m1, m2))


def _step2_moments(s: WindowedSample, over: str) -> tuple[float, float, int]:
    n = s.kept_windows if over == "kept" else s.n_windows
    if n == 0:
        return 0.0, 0.0, 0
    m = float(s.values.sum()) / n
    second = s.clicks / n
    return m, max(0.0, second - m * m), n


def nosignaling_check(
    first: WindowedSample,
    second: WindowedSample,
    alpha: float = 0.01,
    over: Literal["kept", "all"] = "kept",
) -> NoSignalingResult:
    """Compare one side's step-2 mean (values 0 and +-1) across two remote settings.

    ``over="kept"`` averages over windows not discarded; ``"all"`` counts
    discarded windows as zeros. Passes when the interval for the difference
    of means contains 0.
    """
    if first.side != second.side or first.setting != second.setting:
        raise ProtocolMismatchError(
            f"samples must share side and local setting: {first.side}/{first.setting} "
            f"vs {second.side}/{second.setting}"
        )
    if (first.W_ns, first.shift_ns) != (second.W_ns, second.shift_ns):
        raise ProtocolMismatchError("samples were windowed with different (W, shift)")
    if over not in ("kept", "all"):
        raise ValueError(f"over must be 'kept' or 'all', got {over!r}")
    return _difference_check(*_step2_moments(first, over), *_step2_moments(second, over), alpha)


def paired_marginal_check(first: PairedSample, second: PairedSample, side: str, alpha: float = 0.01) -> NoSignalingResult:
    """The same comparison on step-3 (coincidence-selected) +-1 outcomes."""
    if (first.W_ns, first.shift_ns) != (second.W_ns, second.shift_ns):
        raise ProtocolMismatchError("samples were paired with different (W, shift)")
    col = "a" if side == "A" else "b"
    x1, x2 = getattr(first, col), getattr(second, col)
    m1 = float(x1.mean()) if x1.size else 0.0
    m2 = float(x2.mean()) if x2.size else 0.0
    return _difference_check(m1, 1 - m1 * m1, x1.size, m2, 1 - m2 * m2, x2.size, alpha)


@dataclass(frozen=True)
class ScanPoint:
    W_ns: int
    shift_ns: int
    table: ExpectationTable
    statistics: CbdStatistics
    report: VerdictReport | None
    coincidences: dict[str, int] = field(default_factory=dict)

    @property
    def total_coincidences(self) -> int:
        return sum(self.coincidences.values())

    @property
    def verdict(self) -> str:
        return self.report.verdict if self.report is not None else "insufficient-data"


def run_pipeline(
    streams: Mapping[str, tuple[TimeTaggedStream, TimeTaggedStream]],
    spec: CyclicSystemSpec,
    W_ns: int,
    shift_ns: int = 0,
    alpha: float = 0.05,
    variant: Variant = "s_cbd",
    gamma="max",
) -> ScanPoint:
    """Window, pair and analyse every context at one ``(W, shift)``."""
    paired = {}
    for cid in spec.context_ids:
        if cid not in streams:
            raise EmptyContextError(f"no streams for context {cid}")
        sa, sb = streams[cid]
        paired[cid] = pair_streams(sa, sb, W_ns, shift_ns, cid)[2]
    table = estimate_table(paired, spec)
    stats = cbd_statistics(table, variant)
    enough = all(c.N >= 2 for c in table.counts)
    report = assess(table, alpha, variant, gamma) if enough else None
    return ScanPoint(W_ns, shift_ns, table, stats, report, {cid: p.N for cid, p in paired.items()})


def scan(
    streams: Mapping[str, tuple[TimeTaggedStream, TimeTaggedStream]],
    spec: CyclicSystemSpec,
    W_list: Sequence[int],
    shift_list: Sequence[int],
    alpha: float = 0.05,
    variant: Variant = "s_cbd",
    gamma="max",
) -> list[ScanPoint]:
    """Pipeline over the grid, ``W`` outer and shift inner, in list order."""
    if not W_list or not shift_list:
        raise EmptyScanError("window and shift lists must be nonempty")
    return [
        run_pipeline(streams, spec, W, d, alpha, variant, gamma) for W in W_list for d in shift_list
    ]


def optimal_window(scan_result: Sequence[ScanPoint]) -> tuple[int, int]:
    """Grid point with the most coincidences; ties go to smaller W, then shift."""
    if not scan_result:
        raise EmptyScanError("scan is empty")
    best = min(scan_result, key=lambda p: (-p.total_coincidences, p.W_ns, p.shift_ns))
    return best.W_ns, best.shift_ns


SCAN_COLUMNS = (
    "W_ns", "shift_ns", "context", "N", "product", "marg_a", "marg_b",
    "s_odd", "delta", "s_cbd", "s_printed", "verdict",
)


def scan_rows(scan_result: Sequence[ScanPoint]) -> list[dict]:
    rows = []
    for p in scan_result:
        for c in p.table.ordered_counts():
            rows.append({
                "W_ns": p.W_ns,
                "shift_ns": p.shift_ns,
                "context": c.context,
                "N": c.N,
                "product": float(c.product),
                "marg_a": float(c.first_mean),
                "marg_b": float(c.second_mean),
                "s_odd": p.statistics.s_odd,
                "delta": p.statistics.delta,
                "s_cbd": p.statistics.s_cbd,
                "s_printed": p.statistics.s_printed,
                "verdict": p.verdict,
            })
    return rows
