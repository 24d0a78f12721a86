import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itemrank import (
    Itemset,
    ParseError,
    empirical_distribution,
    entropy_sparse,
    frequency,
    parse_dense,
    parse_fimi,
    project,
    to_dense,
    to_fimi,
)
from itemrank.dataset import Dataset, subset_count_table, sub_itemset

from .conftest import all_nonempty_itemsets

A1, A2, A3 = Itemset.of(0), Itemset.of(1), Itemset.of(2)
ABC = Itemset.of(0, 1, 2)

# Frequencies of every nonempty itemset on the four toy datasets.
TOY_FREQUENCIES = {
    "d1": {(0,): 0.5, (1,): 0.5, (2,): 0.5, (0, 1): 0.25, (0, 2): 0.25, (1, 2): 0.25, (0, 1, 2): 0.125},
    "d2": {(0,): 0.5, (1,): 0.5, (2,): 0.5, (0, 1): 0.25, (0, 2): 0.25, (1, 2): 0.25, (0, 1, 2): 0.0},
    "d3": {(0,): 0.5, (1,): 0.5, (2,): 0.5, (0, 1): 0.25, (0, 2): 0.25, (1, 2): 0.25, (0, 1, 2): 0.25},
    "d4": {(0,): 0.5, (1,): 0.5, (2,): 0.5, (0, 1): 0.5, (0, 2): 0.0, (1, 2): 0.0, (0, 1, 2): 0.0},
}


class TestItemset:
    def test_ordering_is_size_then_pattern(self):
        xs = sorted([Itemset.of(2), Itemset.of(0, 1), Itemset.of(0), Itemset.of(1)])
        assert [x.indices() for x in xs] == [(0,), (1,), (2,), (0, 1)]

    def test_subset_relations(self):
        assert A1.issubset(ABC)
        assert A1.is_proper_subset(ABC)
        assert not ABC.is_proper_subset(ABC)
        assert ABC.issubset(ABC)

    def test_cardinality(self):
        assert ABC.size == 3
        assert Itemset().size == 0
        assert not Itemset()

    def test_subset_enumeration(self):
        subs = list(ABC.subsets(proper=True, nonempty=True))
        assert len(subs) == 6
        assert all(s.is_proper_subset(ABC) for s in subs)


class TestParseFimi:
    def test_direct_encoding(self):
        d = parse_fimi("0 1\n2\n")
        assert d.k_attrs == 3 and d.m_rows == 2
        assert list(d.rows()) == [0b011, 0b100]

    def test_duplicate_ids_collapse(self):
        d = parse_fimi("0 0 0\n")
        assert d.k_attrs == 1 and d.m_rows == 1
        assert list(d.rows()) == [1]

    def test_d4_as_item_lists_matches_toy_frequencies(self):
        text = "2\n2\n2\n2\n0 1\n0 1\n0 1\n0 1\n"
        d = parse_fimi(text)
        for ids, want in TOY_FREQUENCIES["d4"].items():
            assert frequency(d, Itemset.from_indices(ids)) == want

    def test_non_integer_token_reports_line(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_fimi("0 1\n2 x\n")

    def test_empty_input(self):
        with pytest.raises(ParseError, match="no transactions"):
            parse_fimi("\n\n")


class TestParseDense:
    def test_small(self):
        d = parse_dense("000\n111\n")
        assert d.k_attrs == 3 and d.m_rows == 2

    def test_spaces_allowed(self):
        d = parse_dense("0 0 1\n1 1 0\n")
        assert list(d.rows()) == [0b100, 0b011]

    def test_d1_matches_all_toy_frequencies(self, d1):
        for ids, want in TOY_FREQUENCIES["d1"].items():
            assert frequency(d1, Itemset.from_indices(ids)) == want

    def test_ragged_rejected(self):
        with pytest.raises(ParseError, match="expected 3 columns"):
            parse_dense("010\n01\n")

    def test_bad_character_rejected(self):
        with pytest.raises(ParseError, match="invalid character"):
            parse_dense("012\n")

    def test_empty_rejected(self):
        with pytest.raises(ParseError, match="no transactions"):
            parse_dense("")


@pytest.mark.parametrize("name", ["d1", "d2", "d3", "d4"])
def test_table_of_toy_frequencies(name, request):
    d = request.getfixturevalue(name)
    for ids, want in TOY_FREQUENCIES[name].items():
        assert frequency(d, Itemset.from_indices(ids)) == want


def test_empty_itemset_has_frequency_one(d3):
    assert frequency(d3, Itemset()) == 1.0


class TestProjection:
    def test_d1_first_column(self, d1):
        pd = project(d1, A1)
        assert list(pd.outcomes) == [0, 0, 0, 0, 1, 1, 1, 1]

    def test_identity_projection(self, d2):
        pd = project(d2, ABC)
        assert list(pd.outcomes) == list(d2.rows())

    def test_d4_pair(self, d4):
        pd = project(d4, Itemset.of(0, 1))
        assert sorted(np.bincount(pd.outcomes, minlength=4).tolist()) == [0, 0, 4, 4]
        assert list(pd.outcomes[:4]) == [0, 0, 0, 0]
        assert list(pd.outcomes[4:]) == [3, 3, 3, 3]

    def test_empty_projection_rejected(self, d1):
        with pytest.raises(ValueError):
            project(d1, Itemset())


class TestEmpiricalDistribution:
    def test_d4_triple(self, d4):
        q = empirical_distribution(project(d4, ABC))
        # Outcome bit j is attribute j: rows 001 -> index 4, 110 -> index 3.
        assert q.mass == {3: 0.5, 4: 0.5}
        assert q.counts == {3: 4, 4: 4}

    def test_d1_triple_uniform(self, d1):
        q = empirical_distribution(project(d1, ABC))
        assert q.mass == {w: 0.125 for w in range(8)}

    def test_single_row_point_mass(self):
        d = parse_dense("101\n")
        q = empirical_distribution(project(d, ABC))
        assert q.mass == {0b101: 1.0}

    def test_mass_sums_to_one(self, d2):
        q = empirical_distribution(project(d2, ABC))
        assert abs(sum(q.mass.values()) - 1.0) < 1e-12


class TestEntropySparse:
    def test_uniform_eight(self, d1):
        q = empirical_distribution(project(d1, ABC))
        assert entropy_sparse(q) == pytest.approx(math.log(8), abs=1e-12)

    def test_point_mass(self):
        q = empirical_distribution(project(parse_dense("11\n"), Itemset.of(0, 1)))
        assert entropy_sparse(q) == 0.0

    def test_two_equal_masses(self, d4):
        q = empirical_distribution(project(d4, ABC))
        assert entropy_sparse(q) == pytest.approx(math.log(2), abs=1e-12)


@st.composite
def dense_datasets(draw):
    k = draw(st.integers(1, 5))
    m = draw(st.integers(1, 12))
    rows = draw(st.lists(st.integers(0, (1 << k) - 1), min_size=m, max_size=m))
    return Dataset.from_rows(rows, k)


@given(dense_datasets())
@settings(max_examples=60, deadline=None)
def test_frequency_is_anti_monotone(d):
    for x in all_nonempty_itemsets(d.k_attrs):
        fx = frequency(d, x)
        for sub in x.subsets(nonempty=True):
            assert frequency(d, sub) >= fx


@given(dense_datasets())
@settings(max_examples=60, deadline=None)
def test_frequency_agrees_with_projected_counts(d):
    # Covering outcomes of the projection are exactly the all-ones index.
    for x in all_nonempty_itemsets(d.k_attrs):
        q = empirical_distribution(project(d, x))
        full = (1 << x.size) - 1
        covered = q.counts.get(full, 0)
        assert covered == d.cover_count(x)


@given(dense_datasets())
@settings(max_examples=40, deadline=None)
def test_dense_roundtrip_identity(d):
    assert parse_dense(to_dense(d)).cols == d.cols


def test_fimi_roundtrip(d4):
    again = parse_fimi(to_fimi(d4))
    assert again.cols == d4.cols and again.m_rows == d4.m_rows


def test_subset_count_table_matches_direct(d2):
    counts = subset_count_table(d2, ABC)
    for mask in range(8):
        x = sub_itemset(ABC, mask)
        assert counts[mask] == d2.cover_count(x) if x else d2.m_rows


class TestPreprocessing:
    def test_take_rows(self, d1):
        top = d1.take_rows(4)
        assert top.m_rows == 4
        assert list(top.rows()) == list(d1.rows())[:4]

    def test_select_top_columns_keeps_ids(self):
        d = parse_fimi("0 2\n2\n2 1\n")
        top = d.select_top_columns(2)
        assert top.item_ids == (0, 2) or top.item_ids == (2, 0)
        assert top.k_attrs == 2
        # item 2 appears three times and must survive
        assert 2 in top.item_ids
