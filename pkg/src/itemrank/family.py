"""Itemset families, downward closure, negative borders, and constraint sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .dataset import Dataset, Itemset, frequency

__all__ = [
    "ItemsetFamily",
    "ConstraintSet",
    "is_downward_closed",
    "negative_border",
    "project_family",
    "canonical_family",
    "parse_family",
    "format_family",
]

CANONICAL_KINDS = ("I", "C", "A")


@dataclass(frozen=True)
class ItemsetFamily:
    """A duplicate-free set of itemsets with optional attached frequencies.

    Members are kept sorted by (size, bit pattern) for deterministic
    iteration; ``theta`` maps members to frequencies when known.
    """

    members: tuple[Itemset, ...]
    theta: dict[Itemset, float] | None = None

    def __post_init__(self):
        if len(set(self.members)) != len(self.members):
            raise ValueError("duplicate members in itemset family")
        object.__setattr__(self, "members", tuple(sorted(self.members)))
        if self.theta is not None:
            for x in self.members:
                t = self.theta.get(x)
                if t is None:
                    raise ValueError(f"missing frequency for member {x.indices()}")
                if not 0.0 <= t <= 1.0:
                    raise ValueError(f"frequency {t} outside [0, 1]")

    @classmethod
    def of(cls, members: Iterable[Itemset], theta=None) -> "ItemsetFamily":
        return cls(members=tuple(members), theta=dict(theta) if theta else None)

    @classmethod
    def from_dataset(cls, members: Iterable[Itemset], d: Dataset) -> "ItemsetFamily":
        ms = tuple(members)
        return cls(members=ms, theta={x: frequency(d, x) for x in ms})

    def __contains__(self, x: Itemset) -> bool:
        return x in self._member_set

    def __iter__(self) -> Iterator[Itemset]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def _member_set(self) -> frozenset:
        cached = self.__dict__.get("_cached_set")
        if cached is None:
            cached = frozenset(self.members)
            self.__dict__["_cached_set"] = cached
        return cached

    def add(self, x: Itemset, theta: float | None = None) -> "ItemsetFamily":
        if x in self:
            return self
        new_theta = None
        if self.theta is not None:
            new_theta = dict(self.theta)
            if theta is None:
                raise ValueError("family carries frequencies; new member needs one")
            new_theta[x] = theta
        return ItemsetFamily(members=self.members + (x,), theta=new_theta)

    def of_size(self, size: int) -> tuple[Itemset, ...]:
        return tuple(x for x in self.members if x.size == size)

    def max_size(self) -> int:
        return max((x.size for x in self.members), default=0)


@dataclass(frozen=True)
class ConstraintSet:
    """Frequency targets on nonempty proper sub-itemsets of a query itemset.

    Constraints are sorted by (size, bit pattern); iterative scaling sweeps
    them in this order, which pins solver behaviour and golden outputs.
    """

    query: Itemset
    constraints: tuple[tuple[Itemset, float], ...]

    def __post_init__(self):
        seen = set()
        for x, t in self.constraints:
            if not x:
                raise ValueError("empty itemset cannot be a constraint")
            if not x.is_proper_subset(self.query):
                raise ValueError(
                    f"constraint {x.indices()} is not a proper subset of the query"
                )
            if x in seen:
                raise ValueError(f"duplicate constraint {x.indices()}")
            seen.add(x)
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"constraint frequency {t} outside [0, 1]")
        object.__setattr__(
            self, "constraints", tuple(sorted(self.constraints, key=lambda c: c[0]))
        )

    def __len__(self) -> int:
        return len(self.constraints)

    def itemsets(self) -> tuple[Itemset, ...]:
        return tuple(x for x, _ in self.constraints)

    def outcome_constraints(self) -> tuple[tuple[int, float], ...]:
        """Constraints with itemsets re-encoded as outcome-space bit masks.

        Outcome bit j corresponds to the j-th smallest attribute of the
        query, matching the projection convention.
        """
        pos = {a: j for j, a in enumerate(self.query.indices())}
        out = []
        for x, t in self.constraints:
            mask = 0
            for a in x.indices():
                mask |= 1 << pos[a]
            out.append((mask, t))
        return tuple(out)


def is_downward_closed(f: ItemsetFamily) -> bool:
    """True when every immediate subset of each member is also a member.

    Membership of the empty itemset is not required.
    """
    for x in f.members:
        for sub in x.immediate_subsets():
            if sub and sub not in f:
                return False
    return True


def negative_border(f: ItemsetFamily, universe: Itemset) -> tuple[Itemset, ...]:
    """Minimal itemsets within the universe that are just outside f."""
    if not is_downward_closed(f):
        raise ValueError("negative border requires a downward closed family")
    border: list[Itemset] = []
    seen: set[Itemset] = set()
    # Singletons outside f qualify unconditionally (no nonempty subsets).
    for a in universe.indices():
        x = Itemset.of(a)
        if x not in f:
            border.append(x)
    # Larger candidates arise by extending members with one universe attribute.
    for x in f.members:
        for a in universe.indices():
            cand = x.with_item(a)
            if cand == x or cand in seen or cand in f:
                continue
            seen.add(cand)
            if all(sub in f for sub in cand.immediate_subsets()):
                border.append(cand)
    return tuple(sorted(border))


def project_family(f: ItemsetFamily, g: Itemset, d: Dataset) -> ConstraintSet:
    """Members of f that are nonempty proper subsets of g, with frequencies."""
    if not g:
        raise ValueError("query itemset must be nonempty")
    picked = [x for x in f.members if x and x.is_proper_subset(g)]
    cons = []
    for x in picked:
        if f.theta is not None:
            cons.append((x, f.theta[x]))
        else:
            cons.append((x, frequency(d, x)))
    return ConstraintSet(query=g, constraints=tuple(cons))


def canonical_family(kind: str, g: Itemset, d: Dataset) -> ConstraintSet:
    """The I (singletons), C (sizes 1-2), or A (all proper subsets) family of g."""
    if not g:
        raise ValueError("query itemset must be nonempty")
    if kind not in CANONICAL_KINDS:
        raise ValueError(f"unknown family kind {kind!r}")
    if kind == "A":
        subs = list(g.subsets(proper=True, nonempty=True))
    else:
        subs = [Itemset.of(a) for a in g.indices()]
        if kind == "C":
            idx = g.indices()
            subs += [
                Itemset.of(idx[i], idx[j])
                for i in range(len(idx))
                for j in range(i + 1, len(idx))
            ]
    # The query itself is never a constraint; this empties the family for
    # size-1 queries and reduces every kind to the singletons at size 2.
    subs = [x for x in subs if x.is_proper_subset(g)]
    return ConstraintSet(
        query=g, constraints=tuple((x, frequency(d, x)) for x in subs)
    )


def format_family(f: ItemsetFamily, item_ids: tuple[int, ...] | None = None) -> str:
    """One itemset per line as space-separated item IDs, ':theta' when known."""
    lines = []
    for x in f.members:
        ids = x.indices() if item_ids is None else tuple(item_ids[j] for j in x.indices())
        text = " ".join(str(i) for i in ids)
        if f.theta is not None:
            text += f":{f.theta[x]!r}"
        lines.append(text)
    return "\n".join(lines) + ("\n" if lines else "")


def parse_family(
    text: str, id_to_index: Mapping[int, int] | None = None
) -> ItemsetFamily:
    """Inverse of :func:`format_family`; IDs map through id_to_index if given."""
    members: list[Itemset] = []
    theta: dict[Itemset, float] = {}
    saw_theta = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        head, _, tail = stripped.partition(":")
        try:
            ids = [int(tok) for tok in head.split()]
        except ValueError:
            raise ValueError(f"line {lineno}: malformed itemset {head!r}") from None
        if id_to_index is not None:
            ids = [id_to_index[i] for i in ids]
        x = Itemset.from_indices(ids)
        members.append(x)
        if tail:
            saw_theta = True
            theta[x] = float(tail)
    return ItemsetFamily(
        members=tuple(members), theta=theta if saw_theta else None
    )
