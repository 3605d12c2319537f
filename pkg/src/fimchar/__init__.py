"""Characterize transactional databases for frequent itemset mining benchmarks."""

from .analysis import (
    Benchmark,
    ClusterModel,
    DecisionTree,
    FeatureMatrix,
    check_representative,
    fit_tree,
    kmeans,
    minimum_representative_benchmarks,
    read_benchmark,
    read_metric_table,
    robust_scale,
)
from .corpus import (
    ElementalStats,
    TransactionDatabase,
    elemental_stats,
    parse_transactions,
    read_transactions,
    support,
    write_transactions,
)
from .errors import CapacityError, EmptyDatabaseError, FimcharError, ParseError, UndefinedMetricError
from .metrics import (
    MetricVector,
    SupportSchedule,
    SweepCurves,
    area_under_curve,
    auto_schedule,
    entropy_k,
    gaifman_density,
    metric_vector,
    sweep,
    sweep_metrics,
)
from .miner import BorderSet, FrequentItemsetCollection, mine_frequent, negative_border, positive_border

__version__ = "0.1.0"
