"""Maximum-entropy distributions over projected outcome spaces.

The general solver is cyclic iterative proportional fitting over the
constraint list: each step rescales the cells covering one itemset so its
marginal matches the target, which preserves normalization exactly. The
independence and tree models additionally have closed forms.

When the solution has zero cells that are not forced by a 0/1-valued
constraint, plain IPF approaches them at rate O(1/sweep). The solver
therefore watches for stalling cells and settles each one with a small
linear program (maximize the cell's mass subject to the constraints): a
cell whose maximum feasible mass is zero is zero in every feasible
distribution, hence zero in the solution, and may be removed outright.
IPF restarted on the restricted support converges geometrically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .dataset import Dataset, EmpiricalDistribution, Itemset, project
from .family import ConstraintSet

__all__ = [
    "JointDistribution",
    "TreeModel",
    "SolverError",
    "InfeasibleError",
    "AbsoluteContinuityError",
    "independence_distribution",
    "iterative_scaling",
    "chow_liu_tree",
    "tree_distribution",
    "entropy_dense",
    "kl_divergence",
    "DEFAULT_TOL",
    "DEFAULT_MAX_SWEEPS",
]

DEFAULT_TOL = 1e-9
DEFAULT_MAX_SWEEPS = 100_000

# Entries below this are treated as exact zeros.
UNDERFLOW_FLOOR = 1e-300

# Stall checks start this many sweeps in and back off 4x while nothing is
# found; a support restriction re-arms the short interval, so layered
# boundary structure resolves without waiting out the backoff.
_CHECK_GAP = 8
_CHECK_GAP_MAX = 32768
_FORCED_ZERO_CUT = 1e-9


class SolverError(RuntimeError):
    """Iterative scaling failed to converge; carries the worst violation."""

    def __init__(self, message: str, worst_violation: float | None = None):
        super().__init__(message)
        self.worst_violation = worst_violation


class InfeasibleError(SolverError):
    """The constraint set admits no distribution."""


class AbsoluteContinuityError(ValueError):
    """KL divergence undefined: q has mass where p vanishes."""


@dataclass(frozen=True)
class JointDistribution:
    """Dense probability table over the 2^dim outcomes of a projected space."""

    dim: int
    p: np.ndarray

    def __post_init__(self):
        if self.p.shape != (1 << self.dim,):
            raise ValueError("table size must be 2^dim")
        if (self.p < 0.0).any():
            raise ValueError("negative probability entry")
        if abs(float(self.p.sum()) - 1.0) > 1e-10:
            raise ValueError(f"table sums to {self.p.sum()}, expected 1")

    def marginal(self, outcome_mask: int) -> float:
        omega = np.arange(1 << self.dim)
        return float(self.p[(omega & outcome_mask) == outcome_mask].sum())


def independence_distribution(marginals) -> JointDistribution:
    """Product distribution with the given per-attribute 1-probabilities."""
    thetas = list(marginals)
    for t in thetas:
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"marginal {t} outside [0, 1]")
    dim = len(thetas)
    p = np.ones(1)
    for t in thetas:
        p = np.concatenate([p * (1.0 - t), p * t])
    return JointDistribution(dim=dim, p=p)


def _constraint_rows(dim: int, outcome_constraints) -> tuple[np.ndarray, np.ndarray]:
    n = 1 << dim
    omega = np.arange(n)
    rows = [np.ones(n)]
    rhs = [1.0]
    for mask, theta in outcome_constraints:
        rows.append(((omega & mask) == mask).astype(float))
        rhs.append(theta)
    return np.array(rows), np.array(rhs)


def _forced_zero(
    dim: int, outcome_constraints, suspects: list[int]
) -> list[int] | None:
    """Cells among ``suspects`` whose maximum feasible mass is zero.

    Verdicts come from LP optimal values (robust against degenerate
    vertices, unlike solution coordinates). One aggregate LP maximizes the
    total suspect mass: an optimum of zero proves every suspect is zero in
    all feasible distributions at once; otherwise each suspect is settled
    by its own LP. Returns None when the constraints are infeasible.
    """
    n = 1 << dim
    a_eq, b_eq = _constraint_rows(dim, outcome_constraints)
    bounds = [(0, None)] * n
    c = np.zeros(n)
    c[suspects] = -1.0
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status == 2:
        return None
    if res.success and -res.fun < _FORCED_ZERO_CUT:
        return list(suspects)
    forced = []
    for w in suspects:
        c = np.zeros(n)
        c[w] = -1.0
        res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if res.status == 2:
            return None
        if res.success and -res.fun < _FORCED_ZERO_CUT:
            forced.append(w)
    return forced


def iterative_scaling(
    c: ConstraintSet,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> JointDistribution:
    """Maximum-entropy table matching every constraint within ``tol``.

    Starts from the uniform distribution and cycles over the constraints in
    their sorted order. A constraint with frequency 0 permanently zeroes
    its covering cells on first visit (and symmetrically frequency 1 zeroes
    the rest); other zero cells are discovered by the stall detector.

    Raises InfeasibleError when the targets cannot be met jointly and
    SolverError when ``max_sweeps`` passes without convergence.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    dim = c.query.size
    n = 1 << dim
    cons = c.outcome_constraints()
    cover = [
        [w for w in range(n) if w & mask == mask] for mask, _ in cons
    ]
    outside = [sorted(set(range(n)) - set(cov)) for cov in cover]
    thetas = [t for _, t in cons]

    p = [1.0 / n] * n
    snapshot: list[float] | None = None
    check_gap = _CHECK_GAP
    next_check = _CHECK_GAP
    worst = np.inf

    def verified(table) -> bool:
        return all(
            abs(sum(table[w] for w in cov) - theta) <= tol
            for cov, theta in zip(cover, thetas)
        )

    sweep = 0
    while sweep <= max_sweeps:
        if sweep >= next_check:
            restarted = False
            if snapshot is not None:
                cut = 8.0 / sweep
                suspects = [
                    w
                    for w in range(n)
                    if 0.0 < p[w] < cut and p[w] < 0.8 * snapshot[w]
                ]
                if suspects:
                    forced = _forced_zero(dim, cons, suspects)
                    if forced is None:
                        raise InfeasibleError("constraints are jointly unsatisfiable")
                    if forced:
                        for w in forced:
                            p[w] = 0.0
                        live = [w for w in range(n) if p[w] > 0.0]
                        if not live:
                            raise InfeasibleError("constraints force an empty support")
                        p = [0.0] * n
                        for w in live:
                            p[w] = 1.0 / len(live)
                        restarted = True
            if restarted:
                check_gap = _CHECK_GAP
                snapshot = None
            else:
                if snapshot is not None:
                    check_gap = min(check_gap * 4, _CHECK_GAP_MAX)
                snapshot = list(p)
            next_check = sweep + check_gap

        # Each constraint's pre-update violation doubles as the convergence
        # signal: a sweep whose worst pre-update gap is within tolerance is
        # confirmed by one explicit verification pass.
        worst = 0.0
        for cov, out, theta in zip(cover, outside, thetas):
            m = sum([p[w] for w in cov])
            gap = m - theta
            if gap < 0.0:
                gap = -gap
            if gap > worst:
                worst = gap
            if theta <= 0.0:
                for w in cov:
                    p[w] = 0.0
                rest = sum(p)
                if rest <= 0.0:
                    raise InfeasibleError(
                        "zero-frequency constraint covers the whole support"
                    )
                for w in range(n):
                    p[w] /= rest
                continue
            if theta >= 1.0:
                for w in out:
                    p[w] = 0.0
                m = sum(p[w] for w in cov)
                if m <= 0.0:
                    raise InfeasibleError("constraint of frequency 1 has no support")
                for w in cov:
                    p[w] /= m
                continue
            if m <= 0.0:
                raise InfeasibleError(
                    "constraint requires mass on an empty covering set"
                )
            if 1.0 - m <= 0.0:
                raise InfeasibleError(
                    "constraint requires mass outside an exhausted covering set"
                )
            f_cov = theta / m
            f_out = (1.0 - theta) / (1.0 - m)
            for w in cov:
                p[w] *= f_cov
            for w in out:
                p[w] *= f_out
        for w in range(n):
            if p[w] < UNDERFLOW_FLOOR:
                p[w] = 0.0
        sweep += 1
        if worst <= tol and verified(p):
            return JointDistribution(dim=dim, p=np.array(p))

    raise SolverError(
        f"no convergence after {max_sweeps} sweeps (worst violation {worst:.3e})",
        worst_violation=worst,
    )


@dataclass(frozen=True)
class TreeModel:
    """Spanning tree over an itemset's attributes with empirical marginals.

    ``edges`` are (a, b) attribute pairs with a < b; ``edge_marginals`` maps
    each edge to a 2x2 table indexed [value_a][value_b].
    """

    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    node_marginals: dict[int, float]
    edge_marginals: dict[tuple[int, int], np.ndarray]
    total_mi: float

    def __post_init__(self):
        if len(self.edges) != max(len(self.nodes) - 1, 0):
            raise ValueError("a spanning tree on n nodes has n - 1 edges")


def _pair_table(d: Dataset, a: int, b: int) -> np.ndarray:
    """Empirical 2x2 joint of attributes a and b (exact counts / M)."""
    ca, cb = d.cols[a], d.cols[b]
    n11 = (ca & cb).bit_count()
    n10 = (ca & ~cb & ((1 << d.m_rows) - 1)).bit_count()
    n01 = (cb & ~ca & ((1 << d.m_rows) - 1)).bit_count()
    n00 = d.m_rows - n11 - n10 - n01
    return np.array([[n00, n01], [n10, n11]], dtype=float) / d.m_rows


def mutual_information(pair: np.ndarray) -> float:
    """MI in nats of a 2x2 joint table (0 log 0 = 0)."""
    pa = pair.sum(axis=1)
    pb = pair.sum(axis=0)
    total = 0.0
    for va in (0, 1):
        for vb in (0, 1):
            joint = pair[va, vb]
            if joint > 0.0:
                total += joint * np.log(joint / (pa[va] * pb[vb]))
    return float(max(total, 0.0))


def chow_liu_tree(g: Itemset, d: Dataset) -> TreeModel:
    """Spanning tree maximizing summed pairwise mutual information.

    Kruskal over edges sorted by (-MI, a, b): equal-MI ties always resolve
    to the lexicographically smallest edge, keeping trees reproducible.
    """
    if not g:
        raise ValueError("query itemset must be nonempty")
    attrs = g.indices()
    node_marg = {a: d.cover_count(Itemset.of(a)) / d.m_rows for a in attrs}
    if len(attrs) == 1:
        return TreeModel(
            nodes=attrs, edges=(), node_marginals=node_marg,
            edge_marginals={}, total_mi=0.0,
        )
    pairs = {}
    scored = []
    for i, a in enumerate(attrs):
        for b in attrs[i + 1 :]:
            table = _pair_table(d, a, b)
            pairs[(a, b)] = table
            scored.append((-mutual_information(table), a, b))
    scored.sort()

    parent = {a: a for a in attrs}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    total = 0.0
    for neg_mi, a, b in scored:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            edges.append((a, b))
            total -= neg_mi
            if len(edges) == len(attrs) - 1:
                break
    edges.sort()
    return TreeModel(
        nodes=attrs,
        edges=tuple(edges),
        node_marginals=node_marg,
        edge_marginals={e: pairs[e] for e in edges},
        total_mi=total,
    )


def tree_distribution(t: TreeModel) -> JointDistribution:
    """Closed-form maxent table for a tree model.

    p(omega) is the product of the node marginals times, per edge, the
    dependence ratio q(a,b) / (q(a) q(b)); equivalently the edge joints
    divided by node marginals raised to (degree - 1). Cells whose edge
    joint is zero get probability zero.
    """
    dim = len(t.nodes)
    pos = {a: j for j, a in enumerate(t.nodes)}
    omega = np.arange(1 << dim)
    p = np.ones(1 << dim)
    for a in t.nodes:
        va = (omega >> pos[a]) & 1
        theta = t.node_marginals[a]
        p *= np.where(va == 1, theta, 1.0 - theta)
    for (a, b), table in t.edge_marginals.items():
        va = (omega >> pos[a]) & 1
        vb = (omega >> pos[b]) & 1
        joint = table[va, vb]
        ta, tb = t.node_marginals[a], t.node_marginals[b]
        denom = np.where(va == 1, ta, 1.0 - ta) * np.where(vb == 1, tb, 1.0 - tb)
        bad = (joint > 0.0) & (denom <= 0.0)
        if bad.any():
            raise ValueError("pair marginal positive where a node marginal is zero")
        ratio = np.divide(joint, denom, out=np.zeros_like(joint), where=denom > 0.0)
        p *= ratio
    total = p.sum()
    if not np.isclose(total, 1.0, atol=1e-9):
        raise ValueError(f"tree product table sums to {total}, expected 1")
    return JointDistribution(dim=dim, p=p / total)


def tree_constraint_itemsets(t: TreeModel) -> tuple[Itemset, ...]:
    """The itemset family a tree model constrains: nodes plus edges."""
    singles = [Itemset.of(a) for a in t.nodes]
    pairs = [Itemset.of(a, b) for a, b in t.edges]
    return tuple(sorted(singles + pairs))


def entropy_dense(p: JointDistribution) -> float:
    """Shannon entropy in nats of a dense table (0 log 0 = 0)."""
    pos = p.p[p.p > 0.0]
    return float(-(pos * np.log(pos)).sum())


def kl_divergence(q: EmpiricalDistribution, p: JointDistribution) -> float:
    """KL(q || p) in nats over q's support.

    Requires absolute continuity: q(omega) > 0 implies p(omega) > 0. A
    violation signals a solver or constraint bug, since the maxent table
    only vanishes where every feasible distribution (q included) does.
    """
    if q.dim != p.dim:
        raise ValueError("dimension mismatch between q and p")
    total = 0.0
    for omega, mass in q.mass.items():
        if mass <= 0.0:
            continue
        denom = p.p[omega]
        if denom <= UNDERFLOW_FLOOR:
            raise AbsoluteContinuityError(
                f"q has mass {mass} at outcome {omega:0{q.dim}b} where p vanishes"
            )
        total += mass * np.log(mass / denom)
    return float(max(total, 0.0))


def empirical_of(d: Dataset, g: Itemset) -> EmpiricalDistribution:
    """Convenience: empirical distribution of d projected onto g."""
    from .dataset import empirical_distribution

    return empirical_distribution(project(d, g))
