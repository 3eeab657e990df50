"""Personalized QoS ranking prediction for cloud services.

Predicts how an active user would rank a set of cloud services from other
users' past QoS observations: rank-correlation similarity, Top-K neighbor
selection, pairwise preference/confidence inference and greedy rank
aggregation, plus a small VM-allocation simulator for generating synthetic
QoS matrices under different placement policies.
"""

from .allocsim import (
    AllocationPlan,
    AllocPolicy,
    Cloudlet,
    Host,
    Scenario,
    VirtualMachine,
    allocate,
    default_scenario,
    load_scenario,
    simulate_qos,
    synth_matrix,
)
from .errors import (
    AllocationError,
    BadValueError,
    ConfigError,
    DataError,
    DomainError,
    DuplicateKeyError,
    ParseError,
    QosRankError,
)
from .experiment import (
    ExperimentConfig,
    QoSPerformanceRow,
    load_config,
    run_experiment,
)
from .matrix import (
    MetricOrientation,
    QoSMatrix,
    SplitSpec,
    load_matrix,
    save_matrix,
    split_train_test,
)
from .metrics import (
    ExperimentReport,
    RankScore,
    ScoreRow,
    SummaryRow,
    aggregate,
    kendall_tau_score,
)
from .preference import (
    PairNeighborhood,
    PreferenceTable,
    PreferenceValue,
    Provenance,
    build_preference_table,
    pair_confidence,
    pair_neighborhood,
    pair_weights,
    preference_sum,
    preference_value,
)
from .ranker import (
    RankerKind,
    Ranking,
    correct_observed_order,
    greedy_rank,
    rank,
)
from .similarity import (
    Neighborhood,
    SimilarityRow,
    krcc,
    select_neighbors,
    similarity_row,
)

__version__ = "0.1.0"
