import json
import math

import numpy as np
import pytest

from itemrank import Itemset, ItemsetFamily, brin_chi2, rank_normalized
from itemrank.baselines import collective_strength, frequency_rank
from itemrank.experiment import (
    MEASURES,
    MeasureMatrix,
    RANK_MEASURES,
    Table,
    correlation_table,
    flexible_win_table,
    monotonicity_table,
    run_queries,
    significance_table,
    used_itemset_ratios,
)

from .conftest import all_nonempty_itemsets

A, B, C = Itemset.of(0), Itemset.of(1), Itemset.of(2)
AB = Itemset.of(0, 1)
ABC = Itemset.of(0, 1, 2)


def matrix_for(d, members=None, measures=MEASURES, threads=1):
    fam = ItemsetFamily.of(members or all_nonempty_itemsets(d.k_attrs))
    return run_queries(d, fam, measures=measures, threads=threads)


def synthetic_matrix(columns, sizes):
    n = len(sizes)
    itemsets = []
    used = set()
    # fabricate distinct itemsets of the requested sizes
    next_attr = 0
    for s in sizes:
        x = Itemset.from_indices(range(next_attr, next_attr + s))
        next_attr += s
        itemsets.append(x)
    return MeasureMatrix(
        itemsets=itemsets,
        sizes=list(sizes),
        freqs=[0.5] * n,
        columns={k: list(v) for k, v in columns.items()},
        errors={},
        greedy_families={},
        m_rows=100,
        item_ids=tuple(range(next_attr)),
    )


class TestRunQueries:
    @pytest.mark.parametrize("name", ["d1", "d2", "d3", "d4"])
    def test_cells_match_module_level_calls(self, name, request):
        d = request.getfixturevalue(name)
        mm = matrix_for(d)
        for i, g in enumerate(mm.itemsets):
            for kind in ("ind", "cov", "all", "tree", "greedy"):
                want = rank_normalized(g, kind, d).normalized
                assert mm.columns[f"nrank_{kind}"][i] == pytest.approx(want, abs=1e-12)
            assert mm.columns["freq"][i] == frequency_rank(g, d)
            assert mm.columns["brin"][i] == pytest.approx(brin_chi2(g, d), abs=1e-12)
            if g.size >= 2:
                want_cs = collective_strength(g, d)
                got_cs = mm.columns["cs"][i]
                assert got_cs == want_cs or (math.isinf(want_cs) and math.isinf(got_cs))
            else:
                assert math.isnan(mm.columns["cs"][i])

    def test_empty_measure_set_keeps_identity_columns(self, d1):
        mm = matrix_for(d1, measures=())
        assert mm.columns == {}
        table = mm.to_table()
        assert table.columns == ("itemset", "size", "frequency")
        assert len(table.rows) == 7

    def test_singleton_family_makes_rank_columns_identical(self, d4):
        mm = matrix_for(d4, members=[A, B, C])
        base = mm.columns["nrank_ind"]
        for m in RANK_MEASURES:
            assert mm.columns[m] == base

    def test_threads_do_not_change_the_matrix(self, d2):
        serial = matrix_for(d2, threads=1)
        parallel = matrix_for(d2, threads=2)
        assert serial.itemsets == parallel.itemsets
        for m in serial.columns:
            np.testing.assert_array_equal(serial.columns[m], parallel.columns[m])

    def test_greedy_families_recorded(self, d4):
        mm = matrix_for(d4, measures=("nrank_greedy",))
        assert ABC in mm.greedy_families

    def test_empty_family_rejected(self, d1):
        with pytest.raises(ValueError):
            run_queries(d1, ItemsetFamily.of([]))


class TestSignificanceTable:
    def test_all_zero_column(self):
        mm = synthetic_matrix({"nrank_ind": [0.0, 0.0, 0.0]}, [1, 2, 2])
        t = significance_table(mm, alpha=0.05)
        assert t.rows[0] == ("nrank_ind", 0.0, 0.0, 0.0)

    def test_counts_only_above_threshold(self):
        mm = synthetic_matrix({"nrank_ind": [0.99, 0.94, 0.96, 0.2]}, [1, 1, 2, 2])
        t = significance_table(mm, alpha=0.05)
        # size 1: one of two significant; size 2: one of two
        assert t.rows[0] == ("nrank_ind", 0.5, 0.5, 0.5)

    def test_alpha_validated(self, d1):
        mm = matrix_for(d1, measures=("nrank_ind",))
        with pytest.raises(ValueError):
            significance_table(mm, alpha=0.0)


class TestCorrelationTable:
    def test_self_correlation_is_one(self):
        vals = [0.1, 0.5, 0.9, 0.3]
        mm = synthetic_matrix({"nrank_ind": vals, "brin": vals}, [2, 2, 3, 3])
        t = correlation_table(mm)
        assert t.rows[0][1] == pytest.approx(1.0)
        assert t.rows[0][2] == pytest.approx(1.0)

    def test_negation_is_minus_one(self):
        vals = [0.1, 0.5, 0.9, 0.3]
        mm = synthetic_matrix(
            {"a": vals, "b": [-v for v in vals]}, [2, 2, 3, 3]
        )
        t = correlation_table(mm)
        assert t.rows[0][2] == pytest.approx(-1.0)

    def test_constant_column_is_undefined(self):
        mm = synthetic_matrix({"a": [1.0, 1.0, 1.0], "b": [0.1, 0.2, 0.3]}, [2, 2, 3])
        t = correlation_table(mm)
        assert t.rows[0][1] is None
        assert t.rows[0][2] is None

    def test_infinite_cells_dropped_pairwise(self):
        mm = synthetic_matrix(
            {"a": [0.1, 0.2, 0.9, 0.4], "cs": [1.0, math.inf, 2.0, 3.0]},
            [2, 2, 2, 2],
        )
        t = correlation_table(mm)
        assert t.rows[0][2] is not None


class TestMonotonicityTable:
    def test_constant_measure_satisfies_both(self, d1):
        mm = matrix_for(d1, measures=("nrank_ind",))
        mm.columns["nrank_ind"] = [0.5] * len(mm)
        fam = ItemsetFamily.of(mm.itemsets)
        mono, anti = monotonicity_table(mm, fam)
        assert mono.rows[0][1] == 1.0
        assert anti.rows[0][1] == 1.0

    def test_size_increasing_column(self, d1):
        mm = matrix_for(d1, measures=("nrank_ind",))
        mm.columns["nrank_ind"] = [0.1 * s for s in mm.sizes]
        fam = ItemsetFamily.of(mm.itemsets)
        mono, anti = monotonicity_table(mm, fam)
        assert mono.rows[0][1] == 1.0
        assert anti.rows[0][1] == 0.0

    def test_d1_all_subsets_ranks_are_tied_at_zero(self, d1):
        mm = matrix_for(d1, measures=("nrank_all",))
        fam = ItemsetFamily.of(mm.itemsets)
        mono, anti = monotonicity_table(mm, fam)
        assert mono.rows[0][1] == 1.0 and anti.rows[0][1] == 1.0

    def test_missing_subitemsets_are_skipped_and_counted(self, d1):
        fam_members = [x for x in all_nonempty_itemsets(3) if x.size != 2]
        mm = matrix_for(d1, members=fam_members, measures=("nrank_ind",))
        fam = ItemsetFamily.of(fam_members)
        mono, _ = monotonicity_table(mm, fam)
        assert mono.meta["skipped"].get("nrank_ind") == 1
        assert mono.rows[0][1] is None


class TestUsedItemsetRatios:
    def test_initialization_only_gives_zero(self):
        fam = ItemsetFamily.of([A, B, C])
        t = used_itemset_ratios([(ABC, fam)])
        assert t.rows[0][1] == 0.0

    def test_every_pair_used_gives_one(self):
        fam = ItemsetFamily.of([A, B, C, AB, Itemset.of(0, 2), Itemset.of(1, 2)])
        t = used_itemset_ratios([(ABC, fam)])
        assert t.rows[0][1] == 1.0

    def test_mixed_queries(self):
        t = used_itemset_ratios(
            [
                (ABC, ItemsetFamily.of([A, B, C, AB])),
                (AB, ItemsetFamily.of([A, B])),
            ]
        )
        # one pair used out of C(3,2) + C(2,2) = 4 possible
        assert t.rows[0][1] == 0.25

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            used_itemset_ratios([])


class TestFlexibleWins:
    def test_greedy_always_beats_independence(self, d4):
        mm = matrix_for(d4)
        t = flexible_win_table(mm)
        greedy_row = [r for r in t.rows if r[0] == "nrank_greedy"][0]
        assert greedy_row[1] == 1.0

    def test_identical_columns_count_as_wins(self):
        vals = [0.3, 0.6, 0.8]
        mm = synthetic_matrix(
            {"nrank_tree": vals, "nrank_ind": list(vals)}, [3, 3, 4]
        )
        t = flexible_win_table(mm)
        tree_row = [r for r in t.rows if r[0] == "nrank_tree"][0]
        assert tree_row[1] == 1.0

    def test_only_size_three_and_larger_counted(self):
        mm = synthetic_matrix(
            {"nrank_tree": [0.9, 0.1], "nrank_ind": [0.1, 0.9]}, [2, 3]
        )
        t = flexible_win_table(mm)
        tree_row = [r for r in t.rows if r[0] == "nrank_tree"][0]
        assert tree_row[1] == 1.0  # only the size-3 row counts


class TestTableSerialization:
    def test_csv_formatting(self):
        t = Table(
            kind="demo",
            columns=("measure", "x"),
            rows=(("m", 0.123456789), ("n", math.inf), ("o", None)),
        )
        text = t.to_csv()
        assert text.splitlines() == ["measure,x", "m,0.123457", "n,inf", "o,"]

    def test_json_round_trip(self):
        t = Table(
            kind="demo",
            columns=("measure", "x"),
            rows=(("m", 0.123456789), ("n", math.nan)),
            meta={"alpha": 0.05},
        )
        payload = json.loads(t.to_json())
        assert payload["kind"] == "demo"
        assert payload["schema_version"] == 1
        assert payload["rows"][0] == ["m", 0.123456789]
        assert payload["rows"][1] == ["n", "nan"]

    def test_measure_matrix_csv_has_inf_sentinel(self, d4):
        mm = matrix_for(d4, measures=("cs",))
        text = mm.to_table().to_csv()
        assert ",inf" in text
