"""Comparison measures: plain frequency, the cell-wise chi-squared statistic
against the independence model, and collective strength.

Collective strength is implemented exactly as defined, i.e. the ratio
(q(good)/p(good)) * (p(bad)/q(bad)) where a projected transaction is
"good" when it is all zeros or all ones. Note the statistic equals 1, not
a small value, when the data matches the independence model exactly; it
exceeds 1 when good transactions are over-represented.
"""

from __future__ import annotations

import math

import numpy as np

from .dataset import Dataset, Itemset, frequency
from .maxent import empirical_of, independence_distribution

__all__ = ["brin_chi2", "collective_strength", "frequency_rank"]


def _independence_table(d: Dataset, g: Itemset) -> np.ndarray:
    thetas = [frequency(d, Itemset.of(a)) for a in g.indices()]
    return independence_distribution(thetas).p


def brin_chi2(g: Itemset, d: Dataset) -> float:
    """Sum over all 2^|g| cells of (q - p)^2 / p against independence.

    Cells where p and q both vanish contribute nothing; q > 0 on a p = 0
    cell makes the statistic infinite (returned as math.inf).
    """
    if not g:
        raise ValueError("query itemset must be nonempty")
    p = _independence_table(d, g)
    q = empirical_of(d, g).dense()
    total = 0.0
    for cell in range(len(p)):
        if p[cell] > 0.0:
            total += (q[cell] - p[cell]) ** 2 / p[cell]
        elif q[cell] > 0.0:
            return math.inf
    return float(total)


def collective_strength(g: Itemset, d: Dataset) -> float:
    """Good-versus-bad transaction ratio relative to the independence model.

    Good outcomes are the all-zeros and all-ones cells. Degenerate cases:
    no observed bad transactions gives +inf; an independence model that
    assigns zero mass to both good cells is an error (a constant column
    both set and unset, impossible for marginals from one dataset).
    """
    if g.size < 2:
        raise ValueError("collective strength needs at least two attributes")
    p = _independence_table(d, g)
    q = empirical_of(d, g).dense()
    hi = len(p) - 1
    p_good = float(p[0] + p[hi])
    q_good = float(q[0] + q[hi])
    p_bad = 1.0 - p_good
    q_bad = 1.0 - q_good
    if p_good <= 0.0:
        raise ValueError("degenerate marginals: independence model has no good mass")
    if q_bad <= 0.0:
        return math.inf
    return (q_good / p_good) * (p_bad / q_bad)


def frequency_rank(g: Itemset, d: Dataset) -> float:
    """Plain support ranking; identical to the dataset frequency."""
    return frequency(d, g)
