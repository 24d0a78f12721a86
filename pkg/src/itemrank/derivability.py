"""Inclusion-exclusion frequency bounds and (almost) non-derivable mining.

For a query itemset G with known proper-sub-itemset frequencies, each
subset Y of G yields a partial inclusion-exclusion sum

    delta_Y = sum over Y <= Z < G of (-1)^(|G \\ Z| + 1) freq(Z)

which is an upper bound on freq(G) when |G \\ Y| is odd and a lower bound
when it is even (Y = G itself gives the trivial lower bound 0). The gap
between the tightest bounds measures how far G is from being determined
by its subsets; a zero-width gap makes G derivable.

All delta sums are evaluated in exact integer arithmetic over transaction
counts, so alternating-sign cancellation cannot flip a bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .dataset import Dataset, Itemset, subset_count_table
from .family import ItemsetFamily

__all__ = ["FrequencyBounds", "ie_bounds", "is_derivable", "mine_andi"]


@dataclass(frozen=True)
class FrequencyBounds:
    """Frequency interval [lower, upper] plus its width in transactions."""

    lower: float
    upper: float
    width_tx: int

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError("bounds must satisfy 0 <= lower <= upper <= 1")


def _bounds_from_counts(size: int, counts: list[int], m: int) -> tuple[Fraction, Fraction]:
    """Exact [lower, upper] from sub-itemset cover counts.

    ``counts[s]`` is the cover count of the sub-itemset encoded by mask s
    (counts[0] = M). Entry for the full mask is ignored.
    """
    full = (1 << size) - 1
    lo = Fraction(0)
    hi = Fraction(1)
    for y in range(full + 1):
        rest = full & ~y
        parity = (size - bin(y).count("1")) & 1
        total = 0
        # Z ranges over supersets of Y inside G, excluding G itself.
        z = rest
        while True:
            mask = y | (rest & ~z)
            if mask != full:
                sign = 1 if ((size - bin(mask).count("1")) & 1) else -1
                total += sign * counts[mask]
            if z == 0:
                break
            z = (z - 1) & rest
        delta = Fraction(total, m)
        if parity:  # |G \ Y| odd: delta over-counts freq(G)
            hi = min(hi, delta)
        else:
            lo = max(lo, delta)
    lo = max(lo, Fraction(0))
    hi = min(hi, Fraction(1))
    return lo, hi


def _as_fraction(v: float | Fraction, denominator_hint: int | None) -> Fraction:
    """Exact rational for v, snapping float dust back to the count grid.

    A frequency that originated as count/M and round-tripped through a
    float sits within 2^-52 of the true rational; limit_denominator
    recovers it whenever the hint is the row count.
    """
    f = Fraction(v)
    if denominator_hint is not None and f.denominator > denominator_hint:
        snapped = f.limit_denominator(denominator_hint)
        if abs(snapped - f) < Fraction(1, 4 * denominator_hint * denominator_hint):
            return snapped
    return f


def _exact_bounds(
    g: Itemset,
    sub_freqs: Mapping[Itemset, float | Fraction],
    denominator_hint: int | None = None,
) -> tuple[Fraction, Fraction, int]:
    size = g.size
    if size == 1:
        return Fraction(0), Fraction(1), 1
    attrs = g.indices()
    # Common denominator turns the frequencies into pseudo-counts.
    fracs: dict[int, Fraction] = {0: Fraction(1)}
    for mask in range(1, 1 << size):
        if mask == (1 << size) - 1:
            continue
        x = Itemset.from_indices(attrs[j] for j in range(size) if mask >> j & 1)
        if x not in sub_freqs:
            raise ValueError(f"missing frequency for sub-itemset {x.indices()}")
        fracs[mask] = _as_fraction(sub_freqs[x], denominator_hint)
    denom = 1
    for v in fracs.values():
        denom = denom * v.denominator // _gcd(denom, v.denominator)
    counts = [0] * (1 << size)
    for mask, v in fracs.items():
        counts[mask] = int(v * denom)
    lo, hi = _bounds_from_counts(size, counts, denom)
    if hi < lo:
        if lo - hi > Fraction(1, 10**12):
            raise ValueError("sub-itemset frequencies are jointly inconsistent")
        hi = lo
    return lo, hi, denom


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def ie_bounds(
    g: Itemset,
    sub_freqs: Mapping[Itemset, float | Fraction],
    m_rows: int | None = None,
) -> FrequencyBounds:
    """Inclusion-exclusion bounds on freq(g) from its proper-subset frequencies.

    ``sub_freqs`` must cover every nonempty proper subset of g (freq of the
    empty itemset is implied to be 1). Singletons get the trivial [0, 1].
    ``m_rows`` converts the width into transactions; when omitted, the
    frequencies' own common denominator is used.
    """
    if not g:
        raise ValueError("query itemset must be nonempty")
    lo, hi, denom = _exact_bounds(g, sub_freqs, denominator_hint=m_rows)
    scale = m_rows if m_rows is not None else denom
    width_tx = int(round(float((hi - lo) * scale)))
    return FrequencyBounds(lower=float(lo), upper=float(hi), width_tx=width_tx)


def _bounds_for_itemset(d: Dataset, g: Itemset) -> tuple[Fraction, Fraction]:
    if g.size == 1:
        return Fraction(0), Fraction(1)
    counts = subset_count_table(d, g)
    return _bounds_from_counts(g.size, [int(c) for c in counts], d.m_rows)


def is_derivable(d: Dataset, g: Itemset) -> bool:
    """True when the sub-itemset frequencies pin freq(g) exactly.

    Exact-arithmetic bounds make the width either 0 or at least 1/M, so the
    half-transaction tolerance only matters for float-supplied frequencies.
    """
    lo, hi = _bounds_for_itemset(d, g)
    return (hi - lo) * d.m_rows <= Fraction(1, 2)


def mine_andi(d: Dataset, n: int, max_size: int) -> ItemsetFamily:
    """Level-wise mining of the almost-non-derivable itemsets.

    Keeps every itemset of size <= max_size whose bound width is at least n
    transactions (strictly positive width when n = 0, i.e. non-derivable).
    The width threshold is anti-monotonic, so level k candidates are
    prefix-joins of level k-1 survivors pruned by subset membership.
    """
    if n < 0:
        raise ValueError("threshold n must be non-negative")
    if max_size < 1:
        raise ValueError("max_size must be at least 1")

    def keeps(width_tx: Fraction) -> bool:
        return width_tx > 0 if n == 0 else width_tx >= n

    survivors: list[Itemset] = []
    theta: dict[Itemset, float] = {}
    level = []
    for a in range(d.k_attrs):
        x = Itemset.of(a)
        lo, hi = _bounds_for_itemset(d, x)
        if keeps((hi - lo) * d.m_rows):
            level.append(x)
            theta[x] = d.cover_count(x) / d.m_rows
    survivors.extend(level)

    size = 1
    while level and size < max_size:
        size += 1
        survivor_set = set(survivors)
        candidates = _prefix_join(level)
        level = []
        for cand in candidates:
            if any(sub not in survivor_set for sub in cand.immediate_subsets()):
                continue
            lo, hi = _bounds_for_itemset(d, cand)
            if keeps((hi - lo) * d.m_rows):
                level.append(cand)
                theta[cand] = d.cover_count(cand) / d.m_rows
        survivors.extend(level)

    return ItemsetFamily(members=tuple(survivors), theta=theta)


def _prefix_join(level: list[Itemset]) -> list[Itemset]:
    """Join k-itemsets sharing their first k-1 attributes, in sorted order."""
    out = []
    items = sorted(x.indices() for x in level)
    for i, left in enumerate(items):
        for right in items[i + 1 :]:
            if left[:-1] != right[:-1]:
                break
            out.append(Itemset.from_indices(left + right[-1:]))
    return out
