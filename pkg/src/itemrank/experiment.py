"""Batch evaluation of rank measures plus the derived analysis tables.

The measure matrix holds one row per queried itemset and one column per
measure. Derived tables reproduce the standard analyses: significance
fractions by itemset size, pairwise Pearson correlations between the
measures, monotonicity and anti-monotonicity rates against sub-itemsets,
greedy-family usage ratios, and flexible-model win rates.

Tables carry a schema version and serialize to CSV (6 significant digits)
or JSON (full precision). Cell markers: NaN for a per-query evaluation
error, +inf for the collective-strength sentinel, None for an undefined
statistic such as the correlation of a constant column.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .baselines import brin_chi2, collective_strength, frequency_rank
from .dataset import Dataset, Itemset
from .family import ItemsetFamily
from .maxent import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, SolverError
from .rank import DEFAULT_ALPHA, greedy_family_rank, rank_normalized

__all__ = [
    "MEASURES",
    "RANK_MEASURES",
    "TABLE_SCHEMA_VERSION",
    "Table",
    "MeasureMatrix",
    "run_queries",
    "significance_table",
    "correlation_table",
    "monotonicity_table",
    "used_itemset_ratios",
    "flexible_win_table",
    "resolve_threads",
]

RANK_MEASURES = ("nrank_ind", "nrank_cov", "nrank_all", "nrank_tree", "nrank_greedy")
BASE_MEASURES = ("freq", "brin", "cs")
MEASURES = RANK_MEASURES + BASE_MEASURES

TABLE_SCHEMA_VERSION = 1

_FLEX_PAIRS = (
    ("nrank_tree", ("nrank_ind", "nrank_cov", "nrank_all")),
    ("nrank_greedy", ("nrank_ind", "nrank_cov", "nrank_all", "nrank_tree")),
)


@dataclass(frozen=True)
class Table:
    """A small labelled table with versioned CSV/JSON emission."""

    kind: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_csv_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "schema_version": TABLE_SCHEMA_VERSION,
            "kind": self.kind,
            "columns": list(self.columns),
            "rows": [[_json_cell(v) for v in row] for row in self.rows],
            "meta": self.meta,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".6g")
    return str(v)


def _json_cell(v):
    if isinstance(v, float) and (math.isnan(v) or math.isinf(v)):
        return {"nan": "nan", "inf": "inf", "-inf": "-inf"}[_csv_cell(v)]
    return v


@dataclass
class MeasureMatrix:
    """One row per queried itemset, one column per measure."""

    itemsets: list[Itemset]
    sizes: list[int]
    freqs: list[float]
    columns: dict[str, list[float]]
    errors: dict[tuple[str, int], str]
    greedy_families: dict[Itemset, ItemsetFamily]
    m_rows: int
    item_ids: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.itemsets)

    def row_index(self) -> dict[int, int]:
        return {x.bits: i for i, x in enumerate(self.itemsets)}

    def to_table(self) -> Table:
        cols = ("itemset", "size", "frequency") + tuple(self.columns)
        rows = []
        for i, x in enumerate(self.itemsets):
            label = " ".join(str(self.item_ids[j]) for j in x.indices())
            rows.append(
                (label, self.sizes[i], self.freqs[i])
                + tuple(self.columns[m][i] for m in self.columns)
            )
        return Table(
            kind="measures",
            columns=cols,
            rows=tuple(rows),
            meta={"m_rows": self.m_rows, "n_queries": len(self)},
        )


_WORKER_DATASET: Dataset | None = None
_WORKER_ARGS: tuple = ()


def _pool_init(d: Dataset, measures, tol, max_sweeps):
    global _WORKER_DATASET, _WORKER_ARGS
    _WORKER_DATASET = d
    _WORKER_ARGS = (measures, tol, max_sweeps)


def _eval_in_worker(bits: int):
    measures, tol, max_sweeps = _WORKER_ARGS
    return _eval_query(_WORKER_DATASET, Itemset(bits=bits), measures, tol, max_sweeps)


def _eval_query(d: Dataset, g: Itemset, measures, tol, max_sweeps):
    """All requested measures for one itemset; errors become cell markers."""
    values: dict[str, float] = {}
    errors: dict[str, str] = {}
    greedy_family = None
    for m in measures:
        try:
            if m in RANK_MEASURES:
                kind = m.removeprefix("nrank_")
                if kind == "greedy":
                    result, greedy_family = greedy_family_rank(
                        g, d, tol=tol, max_sweeps=max_sweeps
                    )
                else:
                    result = rank_normalized(g, kind, d, tol=tol, max_sweeps=max_sweeps)
                values[m] = result.normalized
            elif m == "freq":
                values[m] = frequency_rank(g, d)
            elif m == "brin":
                values[m] = brin_chi2(g, d)
            elif m == "cs":
                values[m] = collective_strength(g, d) if g.size >= 2 else math.nan
            else:
                raise ValueError(f"unknown measure {m!r}")
        except (SolverError, ValueError) as exc:
            values[m] = math.nan
            errors[m] = str(exc)
    return values, errors, greedy_family


def resolve_threads(explicit: int | None = None) -> int:
    """Pool size: explicit flag, then ITEMRANK_THREADS, then CPU count."""
    if explicit is not None:
        return max(1, explicit)
    env = os.environ.get("ITEMRANK_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_queries(
    d: Dataset,
    family: ItemsetFamily,
    measures: Sequence[str] = MEASURES,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    threads: int = 1,
) -> MeasureMatrix:
    """Evaluate every requested measure on every family member.

    Queries are independent, so they fan out over a process pool when
    ``threads`` > 1; results merge back in the family's sorted order, so
    the matrix is identical for any pool size.
    """
    if len(family) == 0:
        raise ValueError("query family is empty")
    measures = tuple(measures)
    queries = list(family.members)

    if threads > 1 and len(queries) > 1:
        with ProcessPoolExecutor(
            max_workers=threads,
            initializer=_pool_init,
            initargs=(d, measures, tol, max_sweeps),
        ) as pool:
            chunk = max(1, len(queries) // (4 * threads))
            outcomes = list(
                pool.map(_eval_in_worker, [x.bits for x in queries], chunksize=chunk)
            )
    else:
        outcomes = [_eval_query(d, x, measures, tol, max_sweeps) for x in queries]

    columns: dict[str, list[float]] = {m: [] for m in measures}
    errors: dict[tuple[str, int], str] = {}
    greedy_families: dict[Itemset, ItemsetFamily] = {}
    freqs = []
    for i, (x, (values, errs, fam)) in enumerate(zip(queries, outcomes)):
        freqs.append(frequency_rank(x, d))
        for m in measures:
            columns[m].append(values[m])
        for m, msg in errs.items():
            errors[(m, i)] = msg
        if fam is not None:
            greedy_families[x] = fam
    return MeasureMatrix(
        itemsets=queries,
        sizes=[x.size for x in queries],
        freqs=freqs,
        columns=columns,
        errors=errors,
        greedy_families=greedy_families,
        m_rows=d.m_rows,
        item_ids=d.item_ids,
    )


def _sizes_present(mm: MeasureMatrix, minimum: int = 1) -> list[int]:
    return sorted({s for s in mm.sizes if s >= minimum})


def significance_table(mm: MeasureMatrix, alpha: float = DEFAULT_ALPHA) -> Table:
    """Fraction of itemsets significant (normalized > 1 - alpha) by size.

    The All column is the fraction over every query regardless of size
    (equivalently the row-count-weighted mean of the per-size fractions).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    cut = 1.0 - alpha
    sizes = _sizes_present(mm)
    rows = []
    for m in RANK_MEASURES:
        if m not in mm.columns:
            continue
        col = mm.columns[m]
        cells: list = [m]
        for s in sizes + [None]:
            vals = [
                v
                for v, sz in zip(col, mm.sizes)
                if (s is None or sz == s) and not math.isnan(v)
            ]
            cells.append(sum(v > cut for v in vals) / len(vals) if vals else None)
        rows.append(tuple(cells))
    return Table(
        kind="significance",
        columns=("measure",) + tuple(str(s) for s in sizes) + ("All",),
        rows=tuple(rows),
        meta={"alpha": alpha},
    )


def correlation_table(mm: MeasureMatrix) -> Table:
    """Pairwise Pearson correlations between the measure columns.

    Rows with NaN or +-inf in either column are dropped pairwise; a
    constant column yields an undefined (None) cell.
    """
    if len(mm) < 2:
        raise ValueError("correlations need at least two queries")
    names = list(mm.columns)
    rows = []
    for a in names:
        cells: list = [a]
        for b in names:
            cells.append(_pearson(mm.columns[a], mm.columns[b]))
        rows.append(tuple(cells))
    return Table(
        kind="correlation",
        columns=("measure",) + tuple(names),
        rows=tuple(rows),
        meta={"n_queries": len(mm)},
    )


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    pairs = [
        (x, y)
        for x, y in zip(xs, ys)
        if math.isfinite(x) and math.isfinite(y)
    ]
    if len(pairs) < 2:
        return None
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        return None
    r = float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))
    return min(1.0, max(-1.0, r))


def monotonicity_table(
    mm: MeasureMatrix, family: ItemsetFamily
) -> tuple[Table, Table]:
    """Monotonicity and anti-monotonicity rates of the rank measures.

    An itemset G of size >= 3 is monotone for a measure when its value is
    >= the value of every sub-itemset H with |H| >= 2 (size-1 sub-itemsets
    are ignored: their ranks are uniformly extreme), and anti-monotone
    under the reversed comparison. Queries whose sub-itemsets are missing
    from the matrix or errored are skipped and counted in the metadata.
    """
    index = mm.row_index()
    sizes = _sizes_present(mm, minimum=3)
    mono_rows, anti_rows = [], []
    skipped: dict[str, int] = {}
    for m in RANK_MEASURES:
        if m not in mm.columns:
            continue
        col = mm.columns[m]
        mono_cells: list = [m]
        anti_cells: list = [m]
        mono_all = [0, 0]
        anti_all = [0, 0]
        for s in sizes:
            mono_n, anti_n, total = 0, 0, 0
            for i, g in enumerate(mm.itemsets):
                if mm.sizes[i] != s or math.isnan(col[i]):
                    continue
                sub_vals = []
                ok = True
                for sub in g.subsets(proper=True, nonempty=True):
                    if sub.size < 2:
                        continue
                    j = index.get(sub.bits)
                    if j is None or math.isnan(col[j]):
                        ok = False
                        break
                    sub_vals.append(col[j])
                if not ok:
                    skipped[m] = skipped.get(m, 0) + 1
                    continue
                total += 1
                if all(col[i] >= v for v in sub_vals):
                    mono_n += 1
                if all(col[i] <= v for v in sub_vals):
                    anti_n += 1
            mono_cells.append(mono_n / total if total else None)
            anti_cells.append(anti_n / total if total else None)
            mono_all[0] += mono_n
            anti_all[0] += anti_n
            mono_all[1] += total
            anti_all[1] += total
        mono_cells.append(mono_all[0] / mono_all[1] if mono_all[1] else None)
        anti_cells.append(anti_all[0] / anti_all[1] if anti_all[1] else None)
        mono_rows.append(tuple(mono_cells))
        anti_rows.append(tuple(anti_cells))
    columns = ("measure",) + tuple(str(s) for s in sizes) + ("All",)
    meta = {"skipped": skipped}
    return (
        Table(kind="monotonicity", columns=columns, rows=tuple(mono_rows), meta=meta),
        Table(
            kind="anti_monotonicity", columns=columns, rows=tuple(anti_rows), meta=meta
        ),
    )


def used_itemset_ratios(
    greedy_outputs: Iterable[tuple[Itemset, ItemsetFamily]]
) -> Table:
    """Greedy-family usage: itemsets of each size over the possible maximum.

    For size L >= 2, the ratio is the total number of size-L members over
    all returned families divided by the total number of size-L subsets the
    queries could have contributed. Size 1 is excluded: initialization
    always uses every singleton.
    """
    outputs = list(greedy_outputs)
    if not outputs:
        raise ValueError("no greedy outputs supplied")
    max_l = max(g.size for g, _ in outputs)
    cells: list = ["r_L"]
    sizes = list(range(2, max_l + 1))
    for level in sizes:
        used = sum(
            sum(1 for x in fam.members if x.size == level) for _, fam in outputs
        )
        possible = sum(comb(g.size, level) for g, _ in outputs)
        cells.append(used / possible if possible else None)
    return Table(
        kind="used_itemset_ratios",
        columns=("ratio",) + tuple(str(s) for s in sizes),
        rows=(tuple(cells),),
        meta={"n_queries": len(outputs)},
    )


def flexible_win_table(mm: MeasureMatrix) -> Table:
    """Fractions of size >= 3 queries where a flexible model is at least as
    good (normalized rank <=) as a fixed one. Ties count as wins."""
    rows = []
    for flex, fixed_list in _FLEX_PAIRS:
        if flex not in mm.columns:
            continue
        cells: list = [flex]
        for fixed in fixed_list:
            if fixed not in mm.columns:
                cells.append(None)
                continue
            wins, total = 0, 0
            for i in range(len(mm)):
                if mm.sizes[i] < 3:
                    continue
                a, b = mm.columns[flex][i], mm.columns[fixed][i]
                if math.isnan(a) or math.isnan(b):
                    continue
                total += 1
                wins += a <= b
            cells.append(wins / total if total else None)
        while len(cells) < 5:
            cells.append(None)
        rows.append(tuple(cells))
    return Table(
        kind="flexible_wins",
        columns=("flexible", "vs_nrank_ind", "vs_nrank_cov", "vs_nrank_all", "vs_nrank_tree"),
        rows=tuple(rows),
        meta={},
    )
