"""Published characterization of 21 public FIM databases, shipped as package data.

The metric table, the four-cluster partition of those databases, and the
benchmark sets of eleven published empirical studies serve as fixtures for
the clustering and representativeness analyses.
"""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

from .analysis import Benchmark, ClusterModel, FeatureMatrix, read_benchmark, read_metric_table
from .metrics import SupportSchedule

# Dataset ids of each published cluster, in label order 0..3.
REFERENCE_CLUSTERS = (
    frozenset({4, 8, 10, 11, 14, 21}),
    frozenset({12, 16, 17, 20}),
    frozenset({15}),
    frozenset({1, 2, 3, 5, 6, 7, 9, 13, 18, 19}),
)


def data_path(name: str) -> Path:
    return Path(str(resources.files("fimchar") / "data" / name))


def reference_rows() -> list[dict]:
    with open(data_path("reference_metrics.csv"), newline="") as fp:
        return list(csv.DictReader(fp))


def reference_table() -> FeatureMatrix:
    return read_metric_table(data_path("reference_metrics.csv"))


def reference_names() -> dict[int, str]:
    return {int(r["id"]): r["name"] for r in reference_rows()}


def reference_schedules() -> dict[str, SupportSchedule]:
    """Per-database support schedules, keyed by dataset name."""
    return {r["name"]: SupportSchedule.parse(r["schedule"]) for r in reference_rows()}


def reference_clusters() -> ClusterModel:
    return ClusterModel.from_partition(REFERENCE_CLUSTERS, reference_names())


def reference_benchmarks() -> list[Benchmark]:
    id_by_name = {n: i for i, n in reference_names().items()}
    folder = data_path("benchmarks")
    return [read_benchmark(p, id_by_name) for p in sorted(folder.glob("*.txt"))]
