"""Corpus-level analysis: scaling, k-means, tree explanation, benchmark audits."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

# Metric-table columns usable as clustering features, in table order.
NUMERIC_COLUMNS = (
    "ds", "as", "ats", "mts", "f1", "ggd", "h1", "h2",
    "mss", "mcd", "asd", "fal", "pbc", "pbl", "nbc", "nbl",
)
# Everything except DS and the negative-border block.
DEFAULT_FEATURES = tuple(c for c in NUMERIC_COLUMNS if c not in ("ds", "nbc", "nbl"))
# Drops the raw count columns (DS, AS, MTS) whose heavy tails let one or two
# very large databases dominate robust-scaled distances.
SCALE_FREE_FEATURES = tuple(c for c in DEFAULT_FEATURES if c not in ("as", "mts"))
FEATURE_PRESETS = {"default": DEFAULT_FEATURES, "scale-free": SCALE_FREE_FEATURES}


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows are databases, columns are metric names; NaN marks a missing value.

    ``imputed`` flags cells that were filled in by :func:`robust_scale`.
    """

    ids: tuple[int, ...]
    names: tuple[str, ...]
    columns: tuple[str, ...]
    values: np.ndarray
    imputed: np.ndarray | None = None
    center: np.ndarray | None = None
    scale: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.ids), len(self.columns)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{len(self.ids)} rows x {len(self.columns)} columns"
            )
        if len(self.names) != len(self.ids):
            raise ValueError("names and ids differ in length")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate row ids")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def select(self, columns: Sequence[str]) -> FeatureMatrix:
        missing = [c for c in columns if c not in self.columns]
        if missing:
            raise KeyError(f"unknown feature columns: {missing}")
        idx = [self.columns.index(c) for c in columns]
        return FeatureMatrix(self.ids, self.names, tuple(columns), self.values[:, idx])

    def drop_incomplete_columns(self) -> FeatureMatrix:
        keep = [c for j, c in enumerate(self.columns) if not np.isnan(self.values[:, j]).any()]
        return self.select(keep)

    def name_of(self, id_: int) -> str:
        return self.names[self.ids.index(id_)]


def read_metric_table(path: str | Path, columns: Sequence[str] | None = None) -> FeatureMatrix:
    """Load a metric CSV (as written by the profile command) into a FeatureMatrix.

    Empty cells become NaN. Rows without an ``id`` column are numbered from 1.
    """
    with open(path, newline="") as fp:
        rows = list(csv.DictReader(fp))
    if not rows:
        raise ValueError(f"{path}: metric table has no rows")
    header = rows[0].keys()
    if columns is None:
        columns = [c for c in NUMERIC_COLUMNS if c in header and any(r[c] for r in rows)]
    ids = tuple(int(r["id"]) if r.get("id") else n for n, r in enumerate(rows, start=1))
    names = tuple(r.get("name") or str(i) for r, i in zip(rows, ids))
    values = [[float(r[c]) if r.get(c) else math.nan for c in columns] for r in rows]
    return FeatureMatrix(ids, names, tuple(columns), np.array(values, dtype=np.float64))


def _impute_median(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    missing = np.isnan(values)
    if missing.all(axis=0).any():
        raise ValueError("every column needs at least one non-missing value")
    filled = np.where(missing, np.nanmedian(values, axis=0), values)
    return filled, missing


def robust_scale(m: FeatureMatrix) -> FeatureMatrix:
    """Per column, subtract the median and divide by the interquartile range.

    Missing cells are replaced by the column median first. Quantiles use
    linear interpolation between order statistics; a column with zero IQR
    becomes all zeros.
    """
    if m.values.size == 0:
        raise ValueError("cannot scale an empty feature matrix")
    filled, missing = _impute_median(m.values)
    center = np.median(filled, axis=0)
    q1, q3 = np.percentile(filled, [25, 75], axis=0, method="linear")
    iqr = q3 - q1
    safe = np.where(iqr > 0, iqr, 1.0)
    scaled = np.where(iqr > 0, (filled - center) / safe, 0.0)
    return FeatureMatrix(m.ids, m.names, m.columns, scaled, missing, center, iqr)


@dataclass
class ClusterModel:
    k: int
    ids: tuple[int, ...]
    labels: np.ndarray
    centroids: np.ndarray | None = None
    inertia: float | None = None
    seed: int | None = None
    restarts: int | None = None
    columns: tuple[str, ...] = ()
    names: tuple[str, ...] = ()

    @classmethod
    def from_partition(cls, clusters: Sequence[Iterable[int]], names: Mapping[int, str] | None = None) -> ClusterModel:
        """Model for a known partition, given as one id collection per label."""
        pairs = sorted((id_, label) for label, members in enumerate(clusters) for id_ in members)
        ids = tuple(p[0] for p in pairs)
        if len(set(ids)) != len(ids):
            raise ValueError("clusters overlap")
        names = names or {}
        return cls(
            k=len(clusters), ids=ids, labels=np.array([p[1] for p in pairs]),
            names=tuple(names.get(i, str(i)) for i in ids),
        )

    @property
    def assignment(self) -> dict[int, int]:
        return {i: int(label) for i, label in zip(self.ids, self.labels)}

    def clusters(self) -> list[frozenset[int]]:
        """Members of each label 0..k-1 (possibly empty)."""
        return [frozenset(i for i, lb in zip(self.ids, self.labels) if lb == c) for c in range(self.k)]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "restarts": self.restarts,
            "inertia": self.inertia,
            "features": list(self.columns),
            "assignment": [
                {"id": i, "name": n, "cluster": int(c)}
                for i, n, c in zip(self.ids, self.names or [""] * len(self.ids), self.labels)
            ],
            "centroids": self.centroids.tolist() if self.centroids is not None else None,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> ClusterModel:
        rows = doc["assignment"]
        centroids = doc.get("centroids")
        return cls(
            k=int(doc["k"]),
            ids=tuple(int(r["id"]) for r in rows),
            labels=np.array([int(r["cluster"]) for r in rows]),
            centroids=np.array(centroids) if centroids is not None else None,
            inertia=doc.get("inertia"),
            seed=doc.get("seed"),
            restarts=doc.get("restarts"),
            columns=tuple(doc.get("features") or ()),
            names=tuple(r.get("name", "") for r in rows),
        )


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = [x[rng.integers(n)]]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _sq_distances(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Lloyd iterations until the assignment stops changing.

    Returns labels, centroids and the inertia after each update step.
    """
    k = len(centers)
    labels = None
    history = []
    for _ in range(max_iter):
        d2 = _sq_distances(x, centers)
        new = d2.argmin(axis=1)  # first (lowest) index wins ties
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = centers.copy()
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = x[members].mean(axis=0)
            else:
                # repair: move the empty centroid onto the worst-fitted point
                own = d2[np.arange(len(x)), labels]
                far = int(own.argmax())
                centers[c] = x[far]
                labels[far] = c
                d2[far] = 0.0
        history.append(float(_sq_distances(x, centers)[np.arange(len(x)), labels].sum()))
    return labels, centers, history


def _canonical_labels(labels: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Relabel clusters in order of first appearance over the rows."""
    order = list(dict.fromkeys(labels.tolist()))
    order += [c for c in range(len(centers)) if c not in order]
    remap = {old: new for new, old in enumerate(order)}
    return np.array([remap[c] for c in labels]), centers[order]


def kmeans(
    m: FeatureMatrix,
    k: int,
    restarts: int = 500,
    seed: int = 0,
    max_iter: int = 300,
) -> ClusterModel:
    """Best-of-``restarts`` k-means with k-means++ seeding.

    Each restart draws from its own child of ``np.random.SeedSequence(seed)``,
    so the selected model depends only on (seed, restarts). Ties in inertia go
    to the earliest restart.
    """
    x = m.values
    if np.isnan(x).any():
        raise ValueError("k-means input contains missing values; scale or impute first")
    if not 1 <= k <= len(x):
        raise ValueError(f"k must lie in [1, {len(x)}], got {k}")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    best = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        labels, centers, history = _lloyd(x, _kmeanspp(x, k, rng), max_iter)
        inertia = history[-1]
        if best is None or inertia < best[0] - 1e-12 * max(1.0, abs(best[0])):
            best = (inertia, labels, centers)
    inertia, labels, centers = best
    labels, centers = _canonical_labels(labels, centers)
    return ClusterModel(
        k=k, ids=m.ids, labels=labels, centroids=centers, inertia=inertia,
        seed=seed, restarts=restarts, columns=m.columns, names=m.names,
    )


@dataclass
class TreeNode:
    n_samples: int
    label: int
    feature: str | None = None
    threshold: float | None = None
    left: TreeNode | None = None
    right: TreeNode | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class DecisionTree:
    root: TreeNode
    columns: tuple[str, ...]
    accuracy: float = field(default=math.nan)

    def predict_row(self, row: np.ndarray) -> int:
        node = self.root
        while not node.is_leaf:
            value = row[self.columns.index(node.feature)]
            node = node.left if value <= node.threshold else node.right
        return node.label

    def predict(self, values: np.ndarray) -> np.ndarray:
        return np.array([self.predict_row(r) for r in np.asarray(values)])

    def internal_nodes(self) -> list[TreeNode]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if not node.is_leaf:
                out.append(node)
                stack.extend((node.right, node.left))
        return out

    @property
    def depth(self) -> int:
        def walk(node):
            return 0 if node.is_leaf else 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def render(self) -> str:
        lines = []

        def walk(node, indent):
            pad = "  " * indent
            if node.is_leaf:
                lines.append(f"{pad}cluster {node.label} (n={node.n_samples})")
                return
            lines.append(f"{pad}{node.feature} <= {node.threshold:.6g}")
            walk(node.left, indent + 1)
            lines.append(f"{pad}{node.feature} > {node.threshold:.6g}")
            walk(node.right, indent + 1)

        walk(self.root, 0)
        return "\n".join(lines) + "\n"


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    return 1.0 - float(((counts / n) ** 2).sum()) if n else 0.0


def _best_split(x: np.ndarray, y: np.ndarray, n_classes: int):
    """Lowest weighted-Gini split over all features and midpoint thresholds.

    Ties keep the first feature (column order) and the lowest threshold.
    """
    n = len(y)
    best = None
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        xs, ys = x[order, j], y[order]
        left = np.zeros(n_classes)
        right = np.bincount(ys, minlength=n_classes).astype(float)
        for i in range(n - 1):
            left[ys[i]] += 1
            right[ys[i]] -= 1
            if xs[i] == xs[i + 1]:
                continue
            score = ((i + 1) * _gini(left) + (n - i - 1) * _gini(right)) / n
            if best is None or score < best[0] - 1e-12:
                best = (score, j, (xs[i] + xs[i + 1]) / 2.0)
    return best


def fit_tree(m: FeatureMatrix, labels: Sequence[int] | np.ndarray, max_depth: int | None = None) -> DecisionTree:
    """Greedy binary CART tree with Gini impurity on the (unscaled) features.

    Grows until leaves are pure, ``max_depth`` is reached, or no split lowers
    the impurity. Missing cells are replaced by the column median.
    """
    x = m.values
    if np.isnan(x).any():
        x, _ = _impute_median(x)
    classes, y = np.unique(np.asarray(labels), return_inverse=True)
    if len(y) != len(x):
        raise ValueError("one label per row is required")
    n_classes = len(classes)

    def grow(rows: np.ndarray, depth: int) -> TreeNode:
        counts = np.bincount(y[rows], minlength=n_classes)
        node = TreeNode(n_samples=len(rows), label=int(classes[counts.argmax()]))
        if counts.max() == len(rows) or (max_depth is not None and depth >= max_depth):
            return node
        split = _best_split(x[rows], y[rows], n_classes)
        if split is None or split[0] >= _gini(counts) - 1e-12:
            return node
        _, j, threshold = split
        go_left = x[rows, j] <= threshold
        node.feature, node.threshold = m.columns[j], float(threshold)
        node.left = grow(rows[go_left], depth + 1)
        node.right = grow(rows[~go_left], depth + 1)
        return node

    tree = DecisionTree(grow(np.arange(len(x)), 0), m.columns)
    tree.accuracy = float((tree.predict(x) == classes[y]).mean())
    return tree


@dataclass(frozen=True)
class Benchmark:
    name: str
    members: frozenset[int]


@dataclass(frozen=True)
class Verdict:
    representative: bool
    missing_clusters: frozenset[int]


def read_benchmark(path: str | Path, id_by_name: Mapping[str, int] | None = None) -> Benchmark:
    """Read a study file: a header line with the study name, then one dataset per line.

    Datasets may be given as integer ids or, when ``id_by_name`` is supplied,
    by name. Blank lines and ``#`` comments are ignored.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError(f"{path}: empty benchmark file")
    name, members = lines[0], set()
    for token in lines[1:]:
        if token.isdigit():
            members.add(int(token))
        elif id_by_name and token in id_by_name:
            members.add(id_by_name[token])
        else:
            raise ValueError(f"study {name!r}: unknown dataset {token!r}")
    return Benchmark(name, frozenset(members))


def check_representative(b: Benchmark, model: ClusterModel) -> Verdict:
    """A benchmark is representative iff it hits every non-empty cluster."""
    assignment = model.assignment
    for id_ in sorted(b.members):
        if id_ not in assignment:
            raise ValueError(f"study {b.name!r}: dataset id {id_} is not in the clustered corpus")
    hit = {assignment[i] for i in b.members}
    present = {c for c, members in enumerate(model.clusters()) if members}
    missing = frozenset(present - hit)
    return Verdict(not missing, missing)


@dataclass(frozen=True)
class MinimumBenchmarks:
    size: int
    total: int
    examples: tuple[tuple[int, ...], ...]


def minimum_representative_benchmarks(model: ClusterModel, limit: int = 10) -> MinimumBenchmarks:
    """Minimum hitting sets of the cluster family.

    Clusters are disjoint, so a minimum hitting set takes exactly one member
    from each non-empty cluster; all of them are the cross product.
    """
    groups = [sorted(c) for c in model.clusters() if c]
    if not groups:
        raise ValueError("model has no non-empty cluster")
    examples = tuple(
        tuple(sorted(combo)) for combo in itertools.islice(itertools.product(*groups), limit)
    )
    return MinimumBenchmarks(len(groups), math.prod(len(g) for g in groups), examples)

