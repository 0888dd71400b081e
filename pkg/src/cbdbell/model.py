"""Domain types for cyclic systems of pairwise-measured binary variables.

A *content* is the quantity a variable measures (an opaque string such as
``"A1"``); a *context* is a pair of contents measured jointly. A cyclic
system of rank ``n`` is ``n`` contexts arranged in a ring where neighbours
share exactly one content.

Expectations are never stored: they are derived on demand from the four
integer outcome counts of each context, as exact :class:`~fractions.Fraction`
values.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .errors import InvalidSpecError, TableInvalidError

# counts beyond this cannot be represented in the int64 arrays used downstream
COUNT_MAX = 2**63 - 1

EPRB_CONTEXT_ORDER = ("21", "11", "12", "22")


@dataclass(frozen=True)
class Context:
    id: str
    members: tuple[str, str]

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if len(members) != 2:
            raise InvalidSpecError(f"context {self.id!r} must have exactly two members")
        if members[0] == members[1]:
            raise InvalidSpecError(f"context {self.id!r} has repeated member {members[0]!r}")


@dataclass(frozen=True)
class ContentPair:
    """Where one content appears: ``(context index, member position)`` twice."""

    content: str
    first: tuple[int, int]
    second: tuple[int, int]


@dataclass(frozen=True)
class CyclicSystemSpec:
    """Ordered ring of ``n >= 3`` contexts.

    ``content_pairs`` is derived: for each content, the two places it is
    measured, listed in order of first appearance around the ring.
    """

    contexts: tuple[Context, ...]
    content_pairs: tuple[ContentPair, ...] = field(init=False)

    def __post_init__(self):
        contexts = tuple(self.contexts)
        object.__setattr__(self, "contexts", contexts)
        n = len(contexts)
        if n < 3:
            raise InvalidSpecError(f"a cycle needs at least 3 contexts, got {n}")
        ids = [c.id for c in contexts]
        dupes = [k for k, v in Counter(ids).items() if v > 1]
        if dupes:
            raise InvalidSpecError(f"duplicate context ids: {dupes}")

        places: dict[str, list[tuple[int, int]]] = {}
        for i, ctx in enumerate(contexts):
            for pos, content in enumerate(ctx.members):
                places.setdefault(content, []).append((i, pos))
        for content, where in places.items():
            if len(where) != 2:
                raise InvalidSpecError(
                    f"content {content!r} appears in {len(where)} contexts, expected 2"
                )
        for i in range(n):
            shared = set(contexts[i].members) & set(contexts[(i + 1) % n].members)
            if len(shared) != 1:
                raise InvalidSpecError(
                    f"contexts {contexts[i].id!r} and {contexts[(i + 1) % n].id!r} "
                    f"share {len(shared)} contents, expected 1"
                )
        pairs = tuple(ContentPair(c, w[0], w[1]) for c, w in places.items())
        object.__setattr__(self, "content_pairs", pairs)

    @property
    def n(self) -> int:
        return len(self.contexts)

    @property
    def context_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.contexts)

    def context(self, context_id: str) -> Context:
        for c in self.contexts:
            if c.id == context_id:
                return c
        raise KeyError(context_id)


def eprb_spec() -> CyclicSystemSpec:
    """The four-context Alice/Bob system with contents A1, A2, B1, B2.

    Context ``"ij"`` measures ``(Ai, Bj)``. The ring is ordered so that
    ``"22"`` comes last; the fixed sign pattern ``(+, +, +, -)`` then gives
    the familiar ``E11 + E12 + E21 - E22``.
    """
    return CyclicSystemSpec(
        tuple(Context(cid, (f"A{cid[0]}", f"B{cid[1]}")) for cid in EPRB_CONTEXT_ORDER)
    )


def cyclic_spec(n: int, prefix: str = "X") -> CyclicSystemSpec:
    """Ring ``(X0,X1), (X1,X2), ..., (X{n-1},X0)``; n=5 is the KCBS pentagon."""
    if n < 3:
        raise InvalidSpecError(f"a cycle needs at least 3 contexts, got {n}")
    names = [f"{prefix}{i}" for i in range(n)]
    return CyclicSystemSpec(
        tuple(Context(f"{names[i]}{names[(i + 1) % n]}", (names[i], names[(i + 1) % n])) for i in range(n))
    )


@dataclass(frozen=True)
class ContextCounts:
    """Joint outcome counts for one context: ``n_pp`` counts (+1, +1), etc."""

    context: str
    n_pp: int
    n_pm: int
    n_mp: int
    n_mm: int

    @property
    def N(self) -> int:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    @property
    def product(self) -> Fraction:
        return Fraction(self.n_pp + self.n_mm - self.n_pm - self.n_mp, self.N)

    @property
    def first_mean(self) -> Fraction:
        return Fraction(self.n_pp + self.n_pm - self.n_mp - self.n_mm, self.N)

    @property
    def second_mean(self) -> Fraction:
        return Fraction(self.n_pp + self.n_mp - self.n_pm - self.n_mm, self.N)

    def mean(self, position: int) -> Fraction:
        return self.first_mean if position == 0 else self.second_mean

    @classmethod
    def from_outcomes(cls, context: str, a: Iterable[int], b: Iterable[int]) -> "ContextCounts":
        tally = Counter(zip(a, b))
        return cls(context, tally[(1, 1)], tally[(1, -1)], tally[(-1, 1)], tally[(-1, -1)])


@dataclass(frozen=True)
class ExpectationTable:
    """Counts for a cyclic system.

    Construction does not enforce completeness; run :func:`validate_table`
    (or :meth:`require_valid`) before estimating anything.
    """

    spec: CyclicSystemSpec
    counts: tuple[ContextCounts, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(self.counts))

    def counts_for(self, context_id: str) -> ContextCounts:
        for c in self.counts:
            if c.context == context_id:
                return c
        raise KeyError(context_id)

    def ordered_counts(self) -> list[ContextCounts]:
        """Counts in ring order; assumes the table is valid."""
        return [self.counts_for(cid) for cid in self.spec.context_ids]

    def products(self) -> list[Fraction]:
        return [c.product for c in self.ordered_counts()]

    def content_means(self) -> list[tuple[str, Fraction, Fraction]]:
        """``(content, mean in first context, mean in second context)`` per content."""
        ordered = self.ordered_counts()
        out = []
        for cp in self.spec.content_pairs:
            (i, p), (j, q) = cp.first, cp.second
            out.append((cp.content, ordered[i].mean(p), ordered[j].mean(q)))
        return out

    def require_valid(self) -> None:
        violations = validate_table(self)
        if violations:
            raise TableInvalidError(violations)

    def to_dict(self) -> dict[str, Any]:
        by_id = {c.context: c for c in self.counts}
        rows = []
        for ctx in self.spec.contexts:
            row: dict[str, Any] = {"id": ctx.id, "members": list(ctx.members)}
            if ctx.id in by_id:
                c = by_id[ctx.id]
                row["counts"] = {"pp": c.n_pp, "pm": c.n_pm, "mp": c.n_mp, "mm": c.n_mm}
            rows.append(row)
        return {"n": self.spec.n, "contexts": rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExpectationTable":
        try:
            rows = data["contexts"]
            contexts = tuple(Context(str(r["id"]), tuple(str(m) for m in r["members"])) for r in rows)
            counts = tuple(
                ContextCounts(
                    str(r["id"]),
                    *(_as_int(r["counts"][k], f"{r['id']}.{k}") for k in ("pp", "pm", "mp", "mm")),
                )
                for r in rows
                if "counts" in r
            )
        except (KeyError, TypeError) as exc:
            raise InvalidSpecError(f"malformed table document: {exc!r}") from exc
        spec = CyclicSystemSpec(contexts)
        if int(data.get("n", spec.n)) != spec.n:
            raise InvalidSpecError(f"declared n={data['n']} but {spec.n} contexts listed")
        return cls(spec, counts)

    @classmethod
    def from_json(cls, text: str) -> "ExpectationTable":
        return cls.from_dict(json.loads(text))


def _as_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidSpecError(f"count {where} must be an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class Violation:
    code: str
    context: str | None
    detail: str


def validate_table(table: ExpectationTable) -> list[Violation]:
    """Every invariant breach in ``table``; an empty list means usable."""
    out: list[Violation] = []
    known = set(table.spec.context_ids)
    seen = Counter(c.context for c in table.counts)
    for cid in table.spec.context_ids:
        if seen[cid] == 0:
            out.append(Violation("missing-context", cid, f"no counts for context {cid}"))
        elif seen[cid] > 1:
            out.append(Violation("duplicate-context", cid, f"{seen[cid]} count records"))
    for c in table.counts:
        if c.context not in known:
            out.append(Violation("unknown-context", c.context, "not part of the cycle"))
            continue
        values = (c.n_pp, c.n_pm, c.n_mp, c.n_mm)
        if any(v < 0 for v in values):
            out.append(Violation("negative-count", c.context, f"counts {values}"))
        elif c.N > COUNT_MAX:
            out.append(Violation("count-overflow", c.context, f"N={c.N}"))
        elif c.N == 0:
            out.append(Violation("empty-context", c.context, "N = 0"))
    return out


def table_from_expectations(
    spec: CyclicSystemSpec,
    products: Sequence[float],
    means: Mapping[str, tuple[float, float]] | None = None,
    N: int = 1_000_000,
) -> ExpectationTable:
    """Nearest integer counts realising the requested expectations.

    ``means`` maps context id to its two in-context marginals (default 0).
    Useful for building synthetic inputs; values are rounded to ``1/N``
    resolution, so read back the exact ones from the table.
    """
    means = means or {}
    rows = []
    for ctx, e in zip(spec.contexts, products):
        ma, mb = means.get(ctx.id, (0.0, 0.0))
        # p(a,b) = (1 + a*ma + b*mb + a*b*e) / 4
        p_pp = (1 + ma + mb + e) / 4
        p_pm = (1 + ma - mb - e) / 4
        p_mp = (1 - ma + mb - e) / 4
        if min(p_pp, p_pm, p_mp, 1 - p_pp - p_pm - p_mp) < -1e-12:
            raise InvalidSpecError(f"expectations for {ctx.id} are not a valid joint distribution")
        n_pp, n_pm, n_mp = (max(0, round(p * N)) for p in (p_pp, p_pm, p_mp))
        rows.append(ContextCounts(ctx.id, n_pp, n_pm, n_mp, max(0, N - n_pp - n_pm - n_mp)))
    return ExpectationTable(spec, tuple(rows))
