"""Maximum-entropy significance ranking for itemsets in binary data."""

from .baselines import brin_chi2, collective_strength, frequency_rank
from .dataset import (
    Dataset,
    EmpiricalDistribution,
    Itemset,
    ParseError,
    ProjectedDataset,
    empirical_distribution,
    entropy_sparse,
    frequency,
    parse_dense,
    parse_fimi,
    project,
    to_dense,
    to_fimi,
)
from .derivability import FrequencyBounds, ie_bounds, is_derivable, mine_andi
from .family import (
    ConstraintSet,
    ItemsetFamily,
    canonical_family,
    is_downward_closed,
    negative_border,
    project_family,
)
from .maxent import (
    AbsoluteContinuityError,
    InfeasibleError,
    JointDistribution,
    SolverError,
    TreeModel,
    chow_liu_tree,
    entropy_dense,
    independence_distribution,
    iterative_scaling,
    kl_divergence,
    tree_distribution,
)
from .rank import (
    MODEL_KINDS,
    RankResult,
    chi2_cdf,
    degrees_of_freedom,
    greedy_family_rank,
    optimal_tree_rank,
    rank_normalized,
    rank_raw,
    rank_single,
)
from .synth import GenConfig, gen_copy, gen_ind

__version__ = "0.1.0"
