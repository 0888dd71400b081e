"""Confidence intervals for the cyclic statistics and the three-way verdict.

Per-term intervals are Wald intervals for means of +-1 variables,
``m +- z * sqrt((1 - m**2) / N)``, clipped to ``[-1, 1]``. They are combined
with plain interval arithmetic under a Bonferroni split of the total level
``alpha``:

* each of the n product terms gets ``alpha / (2n)``;
* each of the n absolute marginal differences gets ``alpha / (2n)``, spent as
  ``alpha / (4n)`` on each of its two marginal intervals.

The union bound makes the combined interval conservative no matter how the
terms depend on each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Literal, Sequence

from .errors import InsufficientDataError, ShapeError
from .inequalities import (
    VARIANTS,
    SignVector,
    Variant,
    fixed_sign_vector,
    is_odd_sign_vector,
    maximizing_sign_vector,
)
from .model import ContextCounts, ExpectationTable

STRONGLY_CONTEXTUAL = "strongly-contextual"
NONCONTEXTUAL_DESCRIPTION = "maximally-noncontextual-description"
INCONCLUSIVE = "inconclusive"

Which = Literal["product", "marginal-first", "marginal-second"]

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class Interval:
    """Closed interval with the nominal confidence it was built at.

    ``level`` tracks the Bonferroni guarantee through arithmetic: combining
    intervals at levels ``1 - a`` and ``1 - b`` gives ``1 - (a + b)``.
    """

    lo: float
    hi: float
    level: float = 1.0

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval lower end {self.lo} exceeds upper end {self.hi}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return (self.lo + self.hi) / 2

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def __add__(self, other: "Interval") -> "Interval":
        return interval_add(self, other)

    def __sub__(self, other: "Interval") -> "Interval":
        return interval_sub(self, other)

    def __neg__(self) -> "Interval":
        return interval_neg(self)


def _combined_level(a: Interval, b: Interval) -> float:
    return max(0.0, a.level + b.level - 1.0)


def interval_add(a: Interval, b: Interval) -> Interval:
    return Interval(a.lo + b.lo, a.hi + b.hi, _combined_level(a, b))


def interval_neg(a: Interval) -> Interval:
    return Interval(-a.hi, -a.lo, a.level)


def interval_sub(a: Interval, b: Interval) -> Interval:
    return interval_add(a, interval_neg(b))


def interval_sum(terms: Sequence[Interval]) -> Interval:
    total = Interval(0.0, 0.0, 1.0)
    for t in terms:
        total = interval_add(total, t)
    return total


def normal_quantile(p: float) -> float:
    """Inverse standard-normal CDF."""
    return _STD_NORMAL.inv_cdf(p)


def wald_interval(mean: float, N: int, alpha: float) -> Interval:
    """Two-sided Wald interval for the mean of a +-1 variable from N draws."""
    if N < 2:
        raise InsufficientDataError(f"need at least 2 observations, got {N}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    z = normal_quantile(1 - alpha / 2)
    # max() keeps |m| = 1 (and float round-off) from producing a negative variance
    half = z * math.sqrt(max(0.0, 1.0 - mean * mean) / N)
    return Interval(max(-1.0, mean - half), min(1.0, mean + half), 1 - alpha)


def mean_ci(counts: ContextCounts, which: Which, alpha_term: float) -> Interval:
    if which == "product":
        m = counts.product
    elif which == "marginal-first":
        m = counts.first_mean
    elif which == "marginal-second":
        m = counts.second_mean
    else:
        raise ValueError(f"unknown term {which!r}")
    if counts.N < 2:
        raise InsufficientDataError(f"context {counts.context}: N={counts.N} < 2")
    return wald_interval(float(m), counts.N, alpha_term)


def abs_diff_ci(a: Interval, b: Interval) -> Interval:
    """Image of ``a - b`` under the absolute value."""
    d = interval_sub(a, b)
    lo_abs, hi_abs = abs(d.lo), abs(d.hi)
    if d.lo <= 0 <= d.hi:
        return Interval(0.0, max(lo_abs, hi_abs), d.level)
    return Interval(min(lo_abs, hi_abs), max(lo_abs, hi_abs), d.level)


def _marginal_which(position: int) -> Which:
    return "marginal-first" if position == 0 else "marginal-second"


def difference_intervals(table: ExpectationTable, alpha_term: float) -> list[Interval]:
    """One ``|mean - mean'|`` interval per content; each marginal at ``alpha_term / 2``."""
    table.require_valid()
    ordered = table.ordered_counts()
    out = []
    for cp in table.spec.content_pairs:
        (i, p), (j, q) = cp.first, cp.second
        a = mean_ci(ordered[i], _marginal_which(p), alpha_term / 2)
        b = mean_ci(ordered[j], _marginal_which(q), alpha_term / 2)
        out.append(abs_diff_ci(a, b))
    return out


def delta_interval(table: ExpectationTable, alpha: float) -> Interval:
    """Bonferroni interval for the total marginal mismatch at level ``1 - alpha``."""
    n = table.spec.n
    return interval_sum(difference_intervals(table, alpha / n))


def term_levels(n: int, alpha: float) -> dict[str, list[float]]:
    """Error rates spent by :func:`s_interval`; they sum to ``alpha``."""
    return {
        "products": [alpha / (2 * n)] * n,
        "marginals": [alpha / (4 * n)] * (2 * n),
    }


def resolve_gamma(table: ExpectationTable, gamma: SignVector | str | None) -> tuple[SignVector, bool]:
    """Return ``(sign vector, chosen_from_data)`` for a gamma request.

    ``None`` or ``"max"`` picks the maximiser of the observed products;
    ``"fixed"`` is ``(+1, ..., +1, -1)``; a tuple is used as given.
    """
    n = table.spec.n
    if gamma is None or gamma == "max":
        table.require_valid()
        return maximizing_sign_vector(table.products()), True
    if gamma == "fixed":
        return fixed_sign_vector(n), False
    g = tuple(int(x) for x in gamma)
    if len(g) != n:
        raise ShapeError(f"sign vector of length {len(g)} for rank {n}")
    if not is_odd_sign_vector(g):
        raise ValueError(f"sign vector {g} must be +-1 with an odd number of -1 entries")
    return g, False


def s_interval(
    table: ExpectationTable,
    alpha: float,
    variant: Variant = "s_cbd",
    gamma: SignVector | str | None = None,
) -> Interval:
    """Conservative ``1 - alpha`` interval for the corrected cyclic statistic."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    table.require_valid()
    g, _ = resolve_gamma(table, gamma)
    n = table.spec.n
    terms = []
    for sign, counts in zip(g, table.ordered_counts()):
        ci = mean_ci(counts, "product", alpha / (2 * n))
        terms.append(ci if sign > 0 else interval_neg(ci))
    for ci in difference_intervals(table, alpha / (2 * n)):
        terms.append(interval_neg(ci) if variant == "s_cbd" else ci)
    return interval_sum(terms)


@dataclass(frozen=True)
class VerdictReport:
    interval_s: Interval
    bound: int
    verdict: str
    alpha: float | None = None
    variant: str = "s_cbd"
    gamma: SignVector | None = None
    post_hoc_gamma: bool = False

    def to_dict(self) -> dict:
        return {
            "s_lo": self.interval_s.lo,
            "s_hi": self.interval_s.hi,
            "bound": self.bound,
            "verdict": self.verdict,
            "alpha": self.alpha,
            "variant": self.variant,
            "gamma": list(self.gamma) if self.gamma is not None else None,
            "post_hoc_gamma": self.post_hoc_gamma,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VerdictReport":
        return cls(
            interval_s=Interval(d["s_lo"], d["s_hi"], 1 - d["alpha"] if d["alpha"] is not None else 1.0),
            bound=d["bound"],
            verdict=d["verdict"],
            alpha=d["alpha"],
            variant=d["variant"],
            gamma=tuple(d["gamma"]) if d["gamma"] is not None else None,
            post_hoc_gamma=d["post_hoc_gamma"],
        )


def verdict(interval_s: Interval, n: int, **details) -> VerdictReport:
    """Classify an interval against ``n - 2``; touching the bound is inconclusive."""
    bound = n - 2
    if interval_s.lo > bound:
        label = STRONGLY_CONTEXTUAL
    elif interval_s.hi < bound:
        label = NONCONTEXTUAL_DESCRIPTION
    else:
        label = INCONCLUSIVE
    return VerdictReport(interval_s, bound, label, **details)


def assess(
    table: ExpectationTable,
    alpha: float = 0.05,
    variant: Variant = "s_cbd",
    gamma: SignVector | str | None = "max",
) -> VerdictReport:
    """Interval and verdict in one call, recording how gamma was chosen."""
    g, post_hoc = resolve_gamma(table, gamma)
    ci = s_interval(table, alpha, variant, g)
    return verdict(ci, table.spec.n, alpha=alpha, variant=variant, gamma=g, post_hoc_gamma=post_hoc)
