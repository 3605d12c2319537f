"""Graph, entropy and support-sweep metrics for one database."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy import sparse

from .corpus import TransactionDatabase, elemental_stats
from .errors import CapacityError, UndefinedMetricError
from .miner import DEFAULT_MAX_ITEMSETS, mine_frequent, negative_border, positive_border

SCHEMA_VERSION = 1
DEFAULT_PAIR_CAP = 50_000_000

PERCENT_OF_MAX = "percent_of_max"
RAW = "raw"
NORMALIZATIONS = (PERCENT_OF_MAX, RAW)

# Column order of the metric table: elemental block first, then sweep block.
COLUMNS = (
    "id", "name", "ds", "as", "ats", "mts", "f1", "ggd", "h1", "h2",
    "mss", "schedule", "mcd", "asd", "fal", "pbc", "pbl", "nbc", "nbl",
)


@dataclass(frozen=True)
class SupportSchedule:
    """Ascending support levels, in percent of the database size."""

    levels: tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(s) for s in self.levels)
        if len(levels) < 2:
            raise ValueError("a support schedule needs at least two levels")
        if levels[0] <= 0:
            raise ValueError(f"support levels must be positive, got {levels[0]}")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError(f"support levels must be strictly ascending: {levels}")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def arange(cls, start: float, stop: float, step: float) -> SupportSchedule:
        """Levels start, start+step, ... up to and including ``stop``."""
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return cls(tuple(round(start + i * step, 10) for i in range(n)))

    @classmethod
    def parse(cls, text: str) -> SupportSchedule:
        """Parse ``"10,20,30"`` or the range form ``"10:90:10"``."""
        text = text.strip()
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            return cls.arange(start, stop, step)
        return cls(tuple(float(v) for v in text.replace(" ", "").split(",") if v))

    def __len__(self) -> int:
        return len(self.levels)

    def __iter__(self):
        return iter(self.levels)

    @property
    def width(self) -> float:
        return self.levels[-1] - self.levels[0]

    def check(self, db: TransactionDatabase) -> None:
        mss = elemental_stats(db).mss
        if self.levels[-1] > mss + 1e-9:
            raise ValueError(
                f"top support level {self.levels[-1]}% exceeds MSS {mss:.4f}% of {db.name or 'database'}"
            )

    def __str__(self) -> str:
        return ",".join(_fmt_level(s) for s in self.levels)


def _fmt_level(s: float) -> str:
    return f"{s:g}"


def auto_schedule(db: TransactionDatabase, start: float = 10.0, step: float = 10.0) -> SupportSchedule:
    """Equidistant levels from ``start`` up to the largest multiple within MSS.

    When fewer than two levels fit below MSS, start and step shrink tenfold
    (10% -> 1% -> 0.1% ...), which is how low-MSS databases are swept.
    """
    mss = elemental_stats(db).mss
    for _ in range(12):
        if start + step <= mss + 1e-9:
            return SupportSchedule.arange(start, mss + 1e-9, step)
        start, step = start / 10, step / 10
    raise ValueError(f"cannot build a schedule below MSS={mss}% for {db.name or 'database'}")


def minsup_count(level: float, ds: int) -> int:
    """Absolute threshold for a percentage: ceil(level * ds / 100).

    The product is taken on the decimal form of ``level``; a result within
    1e-9 of an integer is snapped to it so that levels derived in floating
    point (100 * 2 / 3) do not overshoot by one transaction.
    """
    exact = Fraction(repr(level)) * ds / 100
    nearest = round(exact)
    if abs(exact - nearest) <= Fraction(1, 10**9):
        exact = Fraction(nearest)
    return max(1, math.ceil(exact))


def _incidence(db: TransactionDatabase) -> sparse.csr_matrix:
    items = db.items
    col = {item: j for j, item in enumerate(items)}
    indptr = [0]
    indices = []
    for t in db.transactions:
        indices.extend(col[i] for i in t)
        indptr.append(len(indices))
    data = np.ones(len(indices), dtype=np.int64)
    return sparse.csr_matrix((data, indices, indptr), shape=(len(db), len(items)))


def _pair_expansions(db: TransactionDatabase, k: int) -> int:
    return sum(math.comb(len(t), k) for t in db.transactions)


def _cooccurrence(db: TransactionDatabase) -> sparse.coo_matrix:
    """Upper-triangular pair supports (strictly above the diagonal)."""
    m = _incidence(db)
    return sparse.triu(m.T @ m, k=1).tocoo()


def gaifman_density(db: TransactionDatabase) -> float:
    """Edge density of the item co-occurrence graph, in percent."""
    n = len(db.alphabet)
    if n < 2:
        raise UndefinedMetricError(f"GGD needs at least two items, alphabet has {n}")
    edges = _cooccurrence(db).nnz
    return 100.0 * 2 * edges / (n * (n - 1))


def _entropy_bits(counts: np.ndarray) -> float:
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def entropy_k(db: TransactionDatabase, k: int, pair_cap: int = DEFAULT_PAIR_CAP) -> float:
    """Shannon entropy (bits) of the relative supports of occurring k-itemsets.

    ``pair_cap`` bounds the number of per-transaction k-subset expansions;
    beyond it the metric is reported undefined instead of computed.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k == 1:
        counts = np.fromiter(db.singleton_support.values(), dtype=np.float64)
    else:
        expansions = _pair_expansions(db, k)
        if expansions > pair_cap:
            raise UndefinedMetricError(
                f"H{k} needs {expansions} subset expansions, above the cap of {pair_cap}"
            )
        if k == 2:
            counts = _cooccurrence(db).data.astype(np.float64)
        else:
            tally = Counter(
                x for t in db.transactions for x in combinations(sorted(t), k)
            )
            counts = np.fromiter(tally.values(), dtype=np.float64)
    if counts.size == 0:
        raise UndefinedMetricError(f"no {k}-itemset occurs in {db.name or 'database'}")
    return _entropy_bits(counts)


def area_under_curve(points: Iterable[tuple[float, float]]) -> float:
    """Trapezoidal area under a piecewise-linear curve given as (x, y) pairs."""
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError("area_under_curve needs at least two points")
    x, y = pts[:, 0], pts[:, 1]
    dx = np.diff(x)
    if np.any(dx <= 0):
        raise ValueError("x values must be strictly ascending")
    return float(np.sum(dx * (y[1:] + y[:-1]) / 2.0))


@dataclass(frozen=True)
class LevelMeasurement:
    """Measurements at one support level. Means are NaN for an empty set."""

    level: float
    minsup_count: int
    fi_count: int
    pb_count: int
    gamma: float
    lam: float
    pb_mean_len: float
    nb_count: int | None = None
    nb_mean_len: float | None = None


@dataclass(frozen=True)
class SweepCurves:
    schedule: SupportSchedule
    measurements: tuple[LevelMeasurement, ...]
    include_negative: bool

    def curve(self, attr: str) -> np.ndarray:
        return np.array([getattr(m, attr) for m in self.measurements], dtype=np.float64)

    @property
    def levels(self) -> np.ndarray:
        return np.array(self.schedule.levels)

    def to_dict(self) -> dict:
        return {
            "schedule": list(self.schedule.levels),
            "include_negative": self.include_negative,
            "levels": [
                {
                    "level": m.level,
                    "minsup_count": m.minsup_count,
                    "fi_count": m.fi_count,
                    "pb_count": m.pb_count,
                    "nb_count": m.nb_count,
                    "gamma": _json_float(m.gamma),
                    "lambda": _json_float(m.lam),
                    "pb_mean_len": _json_float(m.pb_mean_len),
                    "nb_mean_len": _json_float(m.nb_mean_len),
                }
                for m in self.measurements
            ],
        }


def _mean_or_nan(n: int, fn) -> float:
    return fn() if n else math.nan


def sweep(
    db: TransactionDatabase,
    schedule: SupportSchedule,
    include_negative: bool = True,
    max_itemsets: int = DEFAULT_MAX_ITEMSETS,
) -> SweepCurves:
    """Mine FI and borders at every level of ``schedule``.

    The database is mined once at the lowest level; higher levels are exact
    sub-collections obtained by filtering on support.
    """
    schedule.check(db)
    ds = len(db)
    counts = [minsup_count(s, ds) for s in schedule]
    try:
        base = mine_frequent(db, counts[0], max_itemsets=max_itemsets)
    except CapacityError as exc:
        raise exc.at_level(schedule.levels[0]) from None

    measurements = []
    for s, c in zip(schedule, counts):
        fi = base.at_least(c)
        pb = positive_border(fi)
        nb = negative_border(db, fi) if include_negative else None
        measurements.append(
            LevelMeasurement(
                level=s,
                minsup_count=c,
                fi_count=len(fi),
                pb_count=len(pb),
                gamma=_mean_or_nan(len(fi), lambda: 100.0 * fi.mean_support() / ds),
                lam=_mean_or_nan(len(fi), fi.mean_length),
                pb_mean_len=_mean_or_nan(len(pb), pb.mean_length),
                nb_count=len(nb) if nb is not None else None,
                nb_mean_len=_mean_or_nan(len(nb), nb.mean_length) if nb is not None else None,
            )
        )
    return SweepCurves(schedule, tuple(measurements), include_negative)


@dataclass(frozen=True)
class SweepMetrics:
    mcd: float
    asd: float
    fal: float
    pbc: float
    pbl: float
    nbc: float | None = None
    nbl: float | None = None


def _cardinality_area(levels: np.ndarray, counts: np.ndarray, normalization: str) -> float:
    if normalization == PERCENT_OF_MAX:
        top = counts.max()
        counts = 100.0 * counts / top if top > 0 else np.zeros_like(counts)
    elif normalization != RAW:
        raise ValueError(f"unknown normalization {normalization!r}")
    return area_under_curve(zip(levels, counts))


def sweep_metrics(curves: SweepCurves, normalization: str = PERCENT_OF_MAX) -> SweepMetrics:
    """Areas under the sweep curves.

    Cardinality curves (MCD, PBC, NBC) are rescaled to percent of their own
    maximum first unless ``normalization="raw"``; ASD, FAL, PBL and NBL are
    raw areas. NBL is None when some level has an empty negative border.
    """
    levels = curves.levels
    for m in curves.measurements:
        if m.fi_count == 0:
            raise UndefinedMetricError(f"FI is empty at support level {m.level:g}%")

    def raw(attr):
        return area_under_curve(zip(levels, curves.curve(attr)))

    nbc = nbl = None
    if curves.include_negative:
        nbc = _cardinality_area(levels, curves.curve("nb_count"), normalization)
        if all(m.nb_count for m in curves.measurements):
            nbl = raw("nb_mean_len")
    return SweepMetrics(
        mcd=_cardinality_area(levels, curves.curve("fi_count"), normalization),
        asd=raw("gamma"),
        fal=raw("lam"),
        pbc=_cardinality_area(levels, curves.curve("pb_count"), normalization),
        pbl=raw("pb_mean_len"),
        nbc=nbc,
        nbl=nbl,
    )


@dataclass
class MetricVector:
    """All metrics of one database. None marks an unavailable value."""

    name: str
    schedule: SupportSchedule | None
    ds: int
    as_: int
    ats: float
    mts: int
    f1: float
    mss: float
    ggd: float | None = None
    h1: float | None = None
    h2: float | None = None
    mcd: float | None = None
    asd: float | None = None
    fal: float | None = None
    pbc: float | None = None
    pbl: float | None = None
    nbc: float | None = None
    nbl: float | None = None
    curves: SweepCurves | None = field(default=None, repr=False)
    notes: list[str] = field(default_factory=list, repr=False)

    def row(self, id_: int | str = "") -> dict:
        values = {
            "id": id_, "name": self.name, "ds": self.ds, "as": self.as_,
            "ats": self.ats, "mts": self.mts, "f1": self.f1, "ggd": self.ggd,
            "h1": self.h1, "h2": self.h2, "mss": self.mss,
            "schedule": str(self.schedule) if self.schedule else None,
            "mcd": self.mcd, "asd": self.asd, "fal": self.fal,
            "pbc": self.pbc, "pbl": self.pbl, "nbc": self.nbc, "nbl": self.nbl,
        }
        return {c: values[c] for c in COLUMNS}

    def to_dict(self, id_: int | str = "") -> dict:
        doc = {"schema_version": SCHEMA_VERSION}
        doc.update({k: _json_float(v) for k, v in self.row(id_).items()})
        doc["schedule"] = list(self.schedule.levels) if self.schedule else None
        doc["curves"] = self.curves.to_dict() if self.curves else None
        doc["notes"] = list(self.notes)
        return doc


def _json_float(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def metric_vector(
    db: TransactionDatabase,
    schedule: SupportSchedule | None,
    include_negative: bool = True,
    normalization: str = PERCENT_OF_MAX,
    pair_cap: int = DEFAULT_PAIR_CAP,
    max_itemsets: int = DEFAULT_MAX_ITEMSETS,
    strict: bool = True,
) -> MetricVector:
    """Assemble the full metric vector of ``db``.

    H2 always degrades to None on failure. With ``strict=False`` every other
    failing metric does too, and the reason is appended to ``notes``;
    otherwise the error propagates. A None schedule skips the sweep block.
    """
    stats = elemental_stats(db)
    vec = MetricVector(
        name=db.name, schedule=schedule, ds=stats.ds, as_=stats.as_,
        ats=stats.ats, mts=stats.mts, f1=stats.f1, mss=stats.mss,
    )

    def attempt(label, fn, lenient=False):
        try:
            return fn()
        except (UndefinedMetricError, CapacityError, ValueError) as exc:
            if strict and not lenient:
                raise
            vec.notes.append(f"{label}: {exc}")
            return None

    vec.ggd = attempt("ggd", lambda: gaifman_density(db))
    vec.h1 = attempt("h1", lambda: entropy_k(db, 1))
    vec.h2 = attempt("h2", lambda: entropy_k(db, 2, pair_cap=pair_cap), lenient=True)
    if schedule is None:
        return vec
    curves = attempt("sweep", lambda: sweep(db, schedule, include_negative, max_itemsets))
    if curves is None:
        return vec
    vec.curves = curves
    sm = attempt("sweep metrics", lambda: sweep_metrics(curves, normalization))
    if sm is not None:
        vec.mcd, vec.asd, vec.fal, vec.pbc, vec.pbl = sm.mcd, sm.asd, sm.fal, sm.pbc, sm.pbl
        vec.nbc, vec.nbl = sm.nbc, sm.nbl
    return vec


def convention_variance_notes(
    vec: MetricVector, reference: dict, tolerance: float = 0.15
) -> list[str]:
    """Notes for MCD/PBC values that differ from ``reference`` by more than ``tolerance``.

    The normalization of cardinality areas is a convention; a mismatch
    against published figures is reported, not hidden.
    """
    notes = []
    for key in ("mcd", "pbc"):
        ours, theirs = getattr(vec, key), reference.get(key)
        if ours is None or theirs in (None, 0):
            continue
        rel = abs(ours - theirs) / abs(theirs)
        if rel > tolerance:
            notes.append(
                f"convention variance: {key.upper()}={ours:.2f} vs reference {theirs:.2f} "
                f"({100 * rel:.1f}% apart, tolerance {100 * tolerance:.0f}%)"
            )
    return notes


def _csv_cell(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(round(v, 10))
    return str(v)


def write_metric_csv(rows: Sequence[dict], fp: TextIO) -> None:
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c)) for c in COLUMNS])


def dump_metric_json(docs: Sequence[dict], fp: TextIO) -> None:
    json.dump({"schema_version": SCHEMA_VERSION, "databases": list(docs)}, fp, indent=2)
    fp.write("\n")
