"""Binary transaction data: parsing, projection, and empirical frequencies.

A dataset is a list of M binary rows over K attributes. Attributes are
identified by dense 0-based column indices; an optional table of raw item
IDs is kept so reports can render itemsets in the ID space of the source
file. Internally each attribute is stored as one M-bit integer (bit i is
row i), which makes cover counting a popcount and keeps huge sparse ID
spaces cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "Itemset",
    "Dataset",
    "ProjectedDataset",
    "EmpiricalDistribution",
    "ParseError",
    "parse_fimi",
    "parse_dense",
    "frequency",
    "project",
    "empirical_distribution",
    "entropy_sparse",
    "to_fimi",
    "to_dense",
    "subset_count_table",
]


class ParseError(ValueError):
    """Malformed input text; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, order=True)
class Itemset:
    """A set of attributes, stored as a bit mask over column indices.

    Ordering is by (cardinality, bit pattern) so sorted containers list
    small itemsets first and are deterministic.
    """

    sort_key: tuple[int, int] = field(init=False, repr=False)
    bits: int = 0

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("itemset bits must be non-negative")
        object.__setattr__(self, "sort_key", (self.bits.bit_count(), self.bits))

    @classmethod
    def of(cls, *indices: int) -> "Itemset":
        return cls.from_indices(indices)

    @classmethod
    def from_indices(cls, indices: Iterable[int]) -> "Itemset":
        bits = 0
        for i in indices:
            if i < 0:
                raise ValueError(f"negative attribute index {i}")
            bits |= 1 << i
        return cls(bits=bits)

    @property
    def size(self) -> int:
        return self.bits.bit_count()

    def __len__(self) -> int:
        return self.size

    def __bool__(self) -> bool:
        return self.bits != 0

    def indices(self) -> tuple[int, ...]:
        """Attribute indices in ascending order."""
        bits, out = self.bits, []
        while bits:
            low = bits & -bits
            out.append(low.bit_length() - 1)
            bits ^= low
        return tuple(out)

    def issubset(self, other: "Itemset") -> bool:
        return self.bits & other.bits == self.bits

    def is_proper_subset(self, other: "Itemset") -> bool:
        return self.bits != other.bits and self.issubset(other)

    def union(self, other: "Itemset") -> "Itemset":
        return Itemset(bits=self.bits | other.bits)

    def intersection(self, other: "Itemset") -> "Itemset":
        return Itemset(bits=self.bits & other.bits)

    def difference(self, other: "Itemset") -> "Itemset":
        return Itemset(bits=self.bits & ~other.bits)

    def with_item(self, index: int) -> "Itemset":
        return Itemset(bits=self.bits | (1 << index))

    def subsets(self, proper: bool = False, nonempty: bool = False) -> Iterator["Itemset"]:
        """All subsets, enumerated by ascending bit pattern."""
        sub = self.bits
        while True:
            if not (proper and sub == self.bits) and not (nonempty and sub == 0):
                yield Itemset(bits=sub)
            if sub == 0:
                return
            sub = (sub - 1) & self.bits

    def immediate_subsets(self) -> Iterator["Itemset"]:
        for i in self.indices():
            yield Itemset(bits=self.bits & ~(1 << i))

    def fits(self, k: int) -> bool:
        return self.bits < (1 << k)


@dataclass(frozen=True)
class Dataset:
    """Immutable binary dataset: K attribute columns over M transactions.

    ``cols[j]`` is an M-bit integer whose bit i is the value of attribute j
    in row i. ``item_ids[j]`` is the raw item ID rendered in reports.
    """

    cols: tuple[int, ...]
    m_rows: int
    item_ids: tuple[int, ...]

    def __post_init__(self):
        if self.m_rows < 1:
            raise ValueError("dataset must have at least one transaction")
        if len(self.item_ids) != len(self.cols):
            raise ValueError("item_ids length must match attribute count")

    @classmethod
    def from_rows(
        cls,
        rows: Iterable[int],
        k: int,
        item_ids: Iterable[int] | None = None,
    ) -> "Dataset":
        """Build from row bit masks (bit j of a row = attribute j)."""
        cols = [0] * k
        m = 0
        for i, row in enumerate(rows):
            if row >> k:
                raise ValueError(f"row {i} sets attributes beyond K={k}")
            m += 1
            while row:
                low = row & -row
                cols[low.bit_length() - 1] |= 1 << i
                row ^= low
        ids = tuple(item_ids) if item_ids is not None else tuple(range(k))
        return cls(cols=tuple(cols), m_rows=m, item_ids=ids)

    @classmethod
    def from_matrix(cls, matrix, item_ids=None) -> "Dataset":
        """Build from an M x K array-like of 0/1 values."""
        arr = np.asarray(matrix, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError("matrix must be two-dimensional")
        m, k = arr.shape
        cols = tuple(
            int.from_bytes(np.packbits(arr[:, j], bitorder="little").tobytes(), "little")
            for j in range(k)
        )
        ids = tuple(item_ids) if item_ids is not None else tuple(range(k))
        return cls(cols=cols, m_rows=m, item_ids=ids)

    @property
    def k_attrs(self) -> int:
        return len(self.cols)

    def full_itemset(self) -> Itemset:
        return Itemset(bits=(1 << self.k_attrs) - 1)

    def column_array(self, j: int) -> np.ndarray:
        """Attribute j as a 0/1 uint8 array of length M, row order preserved."""
        nbytes = (self.m_rows + 7) // 8
        raw = np.frombuffer(self.cols[j].to_bytes(nbytes, "little"), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.m_rows]

    def to_matrix(self) -> np.ndarray:
        return np.stack([self.column_array(j) for j in range(self.k_attrs)], axis=1)

    def rows(self) -> Iterator[int]:
        mat = self.to_matrix()
        weights = 1 << np.arange(self.k_attrs, dtype=object)
        for i in range(self.m_rows):
            yield int((mat[i].astype(object) * weights).sum())

    def cover_count(self, x: Itemset) -> int:
        """Number of transactions with a 1 on every attribute of x."""
        if not x.fits(self.k_attrs):
            raise ValueError("itemset uses attributes beyond this dataset")
        mask = (1 << self.m_rows) - 1
        for j in x.indices():
            mask &= self.cols[j]
            if not mask:
                return 0
        return mask.bit_count()

    def itemset_from_ids(self, ids: Iterable[int]) -> Itemset:
        """Translate raw item IDs into a dense-index itemset."""
        lookup = {raw: j for j, raw in enumerate(self.item_ids)}
        try:
            return Itemset.from_indices(lookup[i] for i in ids)
        except KeyError as exc:
            raise ValueError(f"unknown item ID {exc.args[0]}") from None

    def render_itemset(self, x: Itemset) -> str:
        return " ".join(str(self.item_ids[j]) for j in x.indices())

    def take_rows(self, n: int) -> "Dataset":
        """First n transactions (row-cap preprocessing)."""
        if n >= self.m_rows:
            return self
        if n < 1:
            raise ValueError("row cap must keep at least one transaction")
        mask = (1 << n) - 1
        return Dataset(
            cols=tuple(c & mask for c in self.cols), m_rows=n, item_ids=self.item_ids
        )

    def select_top_columns(self, n: int) -> "Dataset":
        """Keep the n most frequent attributes (ties broken by index)."""
        if n >= self.k_attrs:
            return self
        if n < 1:
            raise ValueError("column cap must keep at least one attribute")
        counts = [(-(c.bit_count()), j) for j, c in enumerate(self.cols)]
        keep = sorted(j for _, j in sorted(counts)[:n])
        return Dataset(
            cols=tuple(self.cols[j] for j in keep),
            m_rows=self.m_rows,
            item_ids=tuple(self.item_ids[j] for j in keep),
        )


@dataclass(frozen=True)
class ProjectedDataset:
    """Rows of a parent dataset restricted to the attributes of one itemset.

    Outcome encoding: the smallest attribute index in ``attrs`` maps to the
    least-significant bit of the outcome index. This convention is fixed so
    that golden outputs are stable.
    """

    attrs: tuple[int, ...]
    outcomes: np.ndarray  # per-row outcome index, parent row order

    @property
    def dim(self) -> int:
        return len(self.attrs)

    @property
    def m_rows(self) -> int:
        return len(self.outcomes)

    def row_vectors(self) -> np.ndarray:
        out = np.zeros((self.m_rows, self.dim), dtype=np.uint8)
        for j in range(self.dim):
            out[:, j] = (self.outcomes >> j) & 1
        return out


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sparse probability table over the 2^dim projected outcomes.

    ``counts`` keeps the exact transaction counts so downstream checks can
    avoid float round-off; ``mass`` is counts/M.
    """

    dim: int
    mass: dict[int, float]
    counts: dict[int, int]
    m_rows: int

    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.counts))

    def dense(self) -> np.ndarray:
        p = np.zeros(1 << self.dim)
        for omega, q in self.mass.items():
            p[omega] = q
        return p


def parse_fimi(text: str | bytes) -> Dataset:
    """Parse sparse transaction lines of whitespace-separated item IDs.

    The attribute universe is 0-based contiguous: K = 1 + the largest item
    ID seen, and item j occupies column j. Duplicate IDs within one line
    collapse to a single 1. Blank lines are skipped.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    rows: list[int] = []
    max_id = -1
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        bits = 0
        for token in stripped.split():
            try:
                item = int(token)
            except ValueError:
                raise ParseError(f"non-integer item ID {token!r}", lineno) from None
            if item < 0:
                raise ParseError(f"negative item ID {item}", lineno)
            bits |= 1 << item
            max_id = max(max_id, item)
        rows.append(bits)
    if not rows:
        raise ParseError("no transactions")
    return Dataset.from_rows(rows, max_id + 1)


def parse_dense(text: str | bytes) -> Dataset:
    """Parse one fixed-width 0/1 row per line; single spaces are allowed."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    rows: list[int] = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip().replace(" ", "")
        if not stripped:
            continue
        if width is None:
            width = len(stripped)
        elif len(stripped) != width:
            raise ParseError(
                f"expected {width} columns, found {len(stripped)}", lineno
            )
        bits = 0
        for j, ch in enumerate(stripped):
            if ch == "1":
                bits |= 1 << j
            elif ch != "0":
                raise ParseError(f"invalid character {ch!r}", lineno)
        rows.append(bits)
    if not rows:
        raise ParseError("no transactions")
    return Dataset.from_rows(rows, width)


def to_dense(d: Dataset) -> str:
    """Canonical dense serialization: K characters per row, LF endings."""
    mat = d.to_matrix()
    return "".join("".join("1" if v else "0" for v in row) + "\n" for row in mat)


def to_fimi(d: Dataset) -> str:
    """Sparse serialization using the dataset's raw item IDs.

    The format cannot express an all-zero transaction (a blank line is
    skipped on parse), so those raise rather than vanish silently.
    """
    mat = d.to_matrix()
    lines = []
    for i, row in enumerate(mat):
        items = np.nonzero(row)[0]
        if len(items) == 0:
            raise ValueError(
                f"transaction {i} is empty; the sparse format cannot express it"
            )
        lines.append(" ".join(str(d.item_ids[j]) for j in items))
    return "\n".join(lines) + "\n"


def frequency(d: Dataset, x: Itemset) -> float:
    """Fraction of transactions covering x; the empty itemset has frequency 1."""
    if not x:
        return 1.0
    return d.cover_count(x) / d.m_rows


def project(d: Dataset, g: Itemset) -> ProjectedDataset:
    """Restrict every row to the attributes of g, preserving row order."""
    if not g:
        raise ValueError("cannot project onto the empty itemset")
    attrs = g.indices()
    if not g.fits(d.k_attrs):
        raise ValueError("itemset uses attributes beyond this dataset")
    outcomes = np.zeros(d.m_rows, dtype=np.int64)
    for j, a in enumerate(attrs):
        outcomes += d.column_array(a).astype(np.int64) << j
    return ProjectedDataset(attrs=attrs, outcomes=outcomes)


def empirical_distribution(pd: ProjectedDataset) -> EmpiricalDistribution:
    """Outcome histogram of a projected dataset, normalized by row count."""
    if pd.m_rows == 0:
        raise ValueError("empty projected dataset")
    counts = np.bincount(pd.outcomes, minlength=1 << pd.dim)
    m = pd.m_rows
    nz = np.nonzero(counts)[0]
    return EmpiricalDistribution(
        dim=pd.dim,
        mass={int(w): counts[w] / m for w in nz},
        counts={int(w): int(counts[w]) for w in nz},
        m_rows=m,
    )


def entropy_sparse(q: EmpiricalDistribution) -> float:
    """Shannon entropy in nats over the nonzero outcomes (0 log 0 = 0)."""
    total = 0.0
    for p in q.mass.values():
        if p > 0.0:
            total -= p * np.log(p)
    return float(total)


def subset_count_table(d: Dataset, g: Itemset) -> np.ndarray:
    """Cover counts for every sub-itemset of g in one pass.

    Entry s (a bit mask in g's outcome coordinates) is the number of rows
    covering the corresponding sub-itemset. Computed from the projected
    outcome histogram by a superset-sum (zeta) transform, so the whole
    table costs O(M + 2^|g| |g|) instead of 2^|g| scans.
    """
    pd = project(d, g)
    counts = np.bincount(pd.outcomes, minlength=1 << pd.dim).astype(np.int64)
    for j in range(pd.dim):
        bit = 1 << j
        idx = np.arange(1 << pd.dim)
        lo = idx[(idx & bit) == 0]
        counts[lo] += counts[lo | bit]
    return counts


def sub_itemset(g: Itemset, mask: int) -> Itemset:
    """Translate a mask in g's outcome coordinates back to attribute space."""
    attrs = g.indices()
    bits = 0
    for j, a in enumerate(attrs):
        if mask >> j & 1:
            bits |= 1 << a
    return Itemset(bits=bits)
