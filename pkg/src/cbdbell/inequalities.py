"""Noncontextuality inequalities for cyclic systems of rank n.

The central quantity is

    s_odd(c) = max over sign vectors g with an odd number of -1 entries
               of sum_i g_i * c_i

where ``c`` are the cyclic product expectations. A joint distribution of all
variables forces ``s_odd <= n - 2``. When content-sharing variables have
different marginals in their two contexts, the corrected statistic
``s_odd - delta`` is compared against the same bound, with ``delta`` the
total absolute marginal mismatch.

Functions accept floats or :class:`~fractions.Fraction`; with Fractions all
arithmetic and verdicts are exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Literal, Sequence

import numpy as np

from .errors import InvalidCorrelationError, InvalidMarginalError, InvalidRankError, ShapeError
from .model import ExpectationTable

# tolerance for verdicts computed from floats; exact inputs compare exactly
FLOAT_TOL = 1e-12

Variant = Literal["s_cbd", "s_printed"]
VARIANTS = ("s_cbd", "s_printed")

SignVector = tuple[int, ...]


def exceeds(value: Real, bound: Real) -> bool:
    """Strict ``value > bound``; float inputs need to clear ``FLOAT_TOL``."""
    if isinstance(value, (int, Fraction)) and isinstance(bound, (int, Fraction)):
        return value > bound
    return float(value) > float(bound) + FLOAT_TOL


def odd_sign_vectors(n: int) -> list[SignVector]:
    """All ``2**(n-1)`` sign vectors of length n with an odd count of -1, sorted."""
    if n < 3:
        raise InvalidRankError(f"rank must be >= 3, got {n}")
    return [g for g in itertools.product((-1, 1), repeat=n) if g.count(-1) % 2 == 1]


def is_odd_sign_vector(gamma: Sequence[int]) -> bool:
    return all(g in (-1, 1) for g in gamma) and list(gamma).count(-1) % 2 == 1


def _check_correlations(c: Sequence[Real]) -> None:
    if len(c) < 3:
        raise InvalidRankError(f"rank must be >= 3, got {len(c)}")
    for x in c:
        if not -1 <= x <= 1:
            raise InvalidCorrelationError(f"correlation {x!r} outside [-1, 1]")


def s_odd(correlations: Sequence[Real]) -> Real:
    """Closed form of the odd-sign maximum.

    Taking ``g_i = sign(c_i)`` gives ``sum |c_i|``; if that uses an even
    number of minus signs, the cheapest fix flips the smallest ``|c_i|``.
    """
    c = list(correlations)
    _check_correlations(c)
    total = sum(abs(x) for x in c)
    if sum(1 for x in c if x < 0) % 2 == 1:
        return total
    return total - 2 * min(abs(x) for x in c)


def maximizing_sign_vector(correlations: Sequence[Real]) -> SignVector:
    """An odd sign vector attaining :func:`s_odd` (first smallest entry flipped)."""
    c = list(correlations)
    _check_correlations(c)
    g = [-1 if x < 0 else 1 for x in c]
    if g.count(-1) % 2 == 0:
        k = min(range(len(c)), key=lambda i: abs(c[i]))
        g[k] = -g[k]
    return tuple(g)


def s_odd_bruteforce(correlations: Sequence[Real]) -> Real:
    """Reference maximisation over every odd sign vector."""
    c = list(correlations)
    _check_correlations(c)
    return max(sum(g_i * c_i for g_i, c_i in zip(g, c)) for g in odd_sign_vectors(len(c)))


def signed_sum(gamma: Sequence[int], values: Sequence[Real]) -> Real:
    if len(gamma) != len(values):
        raise ShapeError(f"sign vector of length {len(gamma)} for {len(values)} values")
    return sum(g * v for g, v in zip(gamma, values))


@dataclass(frozen=True)
class NciResult:
    s_odd: float
    bound: int
    violated: bool
    margin: float


def nci_check(correlations: Sequence[Real], n: int | None = None) -> NciResult:
    c = list(correlations)
    if n is not None and n != len(c):
        raise ShapeError(f"n={n} but {len(c)} correlations given")
    s = s_odd(c)
    bound = len(c) - 2
    return NciResult(float(s), bound, exceeds(s, bound), float(s - bound))


@dataclass(frozen=True)
class CouplingRange:
    lo: float
    hi: float


def _check_marginals(*ms: Real) -> None:
    for m in ms:
        if not -1 <= m <= 1:
            raise InvalidMarginalError(f"marginal {m!r} outside [-1, 1]")


def coupling_range(m_a: Real, m_b: Real) -> CouplingRange:
    """Feasible ``<AB>`` for +-1 variables with means ``m_a`` and ``m_b``."""
    _check_marginals(m_a, m_b)
    lo, hi = abs(m_a + m_b) - 1, 1 - abs(m_a - m_b)
    # the two ends meet exactly when |m_a| or |m_b| is 1; float rounding may cross them
    return CouplingRange(min(lo, hi), hi)


def max_coupling(m_a: Real, m_b: Real) -> Real:
    """Largest achievable ``<AB>``: ``1 - |m_a - m_b|`` (exact for Fractions)."""
    _check_marginals(m_a, m_b)
    return 1 - abs(m_a - m_b)


def marginal_differences(table: ExpectationTable) -> list[tuple[str, Fraction]]:
    """Per content, the absolute gap between its means in its two contexts."""
    table.require_valid()
    return [(content, abs(m1 - m2)) for content, m1, m2 in table.content_means()]


def marginal_delta(table: ExpectationTable) -> float:
    return float(sum(d for _, d in marginal_differences(table)))


def fixed_sign_vector(n: int) -> SignVector:
    """``(+1, ..., +1, -1)``; on :func:`~cbdbell.model.eprb_spec` this is CHSH."""
    if n < 3:
        raise InvalidRankError(f"rank must be >= 3, got {n}")
    return (1,) * (n - 1) + (-1,)


@dataclass(frozen=True)
class CbdStatistics:
    """Point statistics of one expectation table.

    ``contextual`` applies the bound to the statistic named by ``variant``;
    ``s_cbd`` subtracts the marginal mismatch, ``s_printed`` adds it.
    """

    n: int
    s_odd: float
    delta: float
    s_cbd: float
    s_printed: float
    bound: int
    chsh_s: float | None
    trivial_bound: int
    gamma: SignVector
    cycle_violated: bool
    contextual: bool
    variant: str

    @property
    def margin(self) -> float:
        return getattr(self, self.variant) - self.bound

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "s_odd": self.s_odd,
            "delta": self.delta,
            "s_cbd": self.s_cbd,
            "s_printed": self.s_printed,
            "bound": self.bound,
            "chsh_s": self.chsh_s,
            "trivial_bound": self.trivial_bound,
            "gamma": list(self.gamma),
            "cycle_violated": self.cycle_violated,
            "contextual": self.contextual,
            "variant": self.variant,
        }


def cbd_statistics(table: ExpectationTable, variant: Variant = "s_cbd") -> CbdStatistics:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    table.require_valid()
    products = table.products()
    n = len(products)
    s = s_odd(products)
    delta = sum(d for _, d in marginal_differences(table))
    exact = {"s_cbd": s - delta, "s_printed": s + delta}
    chsh = float(signed_sum(fixed_sign_vector(4), products)) if n == 4 else None
    return CbdStatistics(
        n=n,
        s_odd=float(s),
        delta=float(delta),
        s_cbd=float(exact["s_cbd"]),
        s_printed=float(exact["s_printed"]),
        bound=n - 2,
        chsh_s=chsh,
        trivial_bound=n,
        gamma=maximizing_sign_vector(products),
        cycle_violated=exceeds(s, n - 2),
        contextual=exceeds(exact[variant], n - 2),
        variant=variant,
    )


@dataclass(frozen=True)
class CoupledCycleResult:
    max_lhs: float
    bound: int
    satisfied: bool


def coupled_cycle_check(cross: Sequence[Real], couplings: Sequence[Real]) -> CoupledCycleResult:
    """Left side of the 2n-cycle inequality, maximised over odd signs on ``cross``.

    ``couplings`` are the within-content products ``<X_i X'_i>``, all entering
    with a plus sign.
    """
    if len(cross) != len(couplings):
        raise ShapeError(f"{len(cross)} cross terms but {len(couplings)} couplings")
    for x in couplings:
        if not -1 <= x <= 1:
            raise InvalidCorrelationError(f"coupling {x!r} outside [-1, 1]")
    lhs = s_odd(cross) + sum(couplings)
    bound = 2 * len(cross) - 2
    return CoupledCycleResult(float(lhs), bound, not exceeds(lhs, bound))


def sign_matrix(n: int) -> np.ndarray:
    """Odd sign vectors stacked as a ``(2**(n-1), n)`` array, for vectorised oracles."""
    return np.array(odd_sign_vectors(n), dtype=float)
