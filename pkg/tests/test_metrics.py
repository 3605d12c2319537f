import io
import json
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fimchar import (
    CapacityError,
    SupportSchedule,
    TransactionDatabase,
    UndefinedMetricError,
    area_under_curve,
    auto_schedule,
    entropy_k,
    gaifman_density,
    metric_vector,
    sweep,
    sweep_metrics,
)
from fimchar.metrics import (
    COLUMNS,
    RAW,
    LevelMeasurement,
    SweepCurves,
    convention_variance_notes,
    minsup_count,
    write_metric_csv,
)

from oracles import entropy_bits, midpoint_area, oracle_curves, pair_counts, random_transactions


def db_of(rows, name=""):
    return TransactionDatabase.from_iterable(rows, name)


# area under curve

def test_area_constant_and_triangle():
    assert area_under_curve([(2, 5), (3, 5), (7, 5)]) == 25
    assert area_under_curve([(0, 0), (10, 10)]) == 50


def test_area_needs_two_ascending_points():
    with pytest.raises(ValueError):
        area_under_curve([(1, 1)])
    with pytest.raises(ValueError):
        area_under_curve([(1, 1), (1, 2)])


def test_area_matches_dense_midpoint_sum():
    rng = random.Random(3)
    for _ in range(5):
        xs = sorted(rng.sample(range(1, 500), rng.randint(2, 9)))
        pts = [(x / 7, rng.uniform(-5, 50)) for x in xs]
        ref = midpoint_area(pts)
        assert area_under_curve(pts) == pytest.approx(ref, rel=1e-9, abs=1e-9)


# graph and entropy

def test_gaifman_complete_and_empty():
    assert gaifman_density(db_of([{1, 2, 3, 4}])) == 100.0
    assert gaifman_density(db_of([{1}, {2}, {3}])) == 0.0


def test_gaifman_counts_distinct_pairs():
    # edges 1-2, 2-3 out of 3 possible
    assert gaifman_density(db_of([{1, 2}, {2, 3}, {1, 2}])) == pytest.approx(200 / 3)


def test_gaifman_undefined_below_two_items():
    with pytest.raises(UndefinedMetricError):
        gaifman_density(db_of([{5}, {5}]))


@pytest.mark.parametrize("n", [1, 2, 5, 16])
def test_uniform_singletons_entropy(n):
    assert entropy_k(db_of([{i} for i in range(n)]), 1) == pytest.approx(math.log2(n), abs=1e-12)


def test_entropy_matches_direct_formula():
    rng = random.Random(5)
    for _ in range(30):
        rows = random_transactions(rng)
        db = db_of(rows)
        h1 = entropy_bits(list(db.singleton_support.values()))
        assert entropy_k(db, 1) == pytest.approx(h1, abs=1e-12)
        pairs = pair_counts(rows)
        if pairs:
            assert entropy_k(db, 2) == pytest.approx(entropy_bits(list(pairs.values())), abs=1e-12)
            assert entropy_k(db, 2) <= math.log2(len(pairs)) + 1e-12
        assert entropy_k(db, 1) <= math.log2(len(db.alphabet)) + 1e-12


def test_entropy_k3_generic_path():
    db = db_of([{1, 2, 3}, {1, 2, 3}, {1, 2, 3, 4}])
    # 3-itemsets: 123 x3, 124, 134, 234 once each
    assert entropy_k(db, 3) == pytest.approx(entropy_bits([3, 1, 1, 1]))


def test_entropy_undefined_and_capped():
    with pytest.raises(UndefinedMetricError):
        entropy_k(db_of([{1}, {2}]), 2)
    with pytest.raises(UndefinedMetricError, match="cap"):
        entropy_k(db_of([set(range(10))]), 2, pair_cap=10)


# schedules

def test_schedule_validation():
    with pytest.raises(ValueError):
        SupportSchedule((10,))
    with pytest.raises(ValueError):
        SupportSchedule((0, 10))
    with pytest.raises(ValueError):
        SupportSchedule((20, 10))


@pytest.mark.parametrize(
    "text, levels",
    [("10,20,30", (10, 20, 30)), ("30:90:10", (30, 40, 50, 60, 70, 80, 90)),
     ("0.1:0.6:0.1", (0.1, 0.2, 0.3, 0.4, 0.5, 0.6))],
)
def test_schedule_parse(text, levels):
    assert SupportSchedule.parse(text).levels == levels


def test_schedule_must_stay_below_mss():
    db = db_of([{1}, {1}, {2}, {3}])  # MSS 50%
    SupportSchedule((25, 50)).check(db)
    with pytest.raises(ValueError, match="MSS"):
        SupportSchedule((25, 60)).check(db)


def test_auto_schedule_tenfold_fallback():
    dense = db_of([{1}] * 95 + [{2}] * 5)  # MSS 95%
    assert auto_schedule(dense).levels == (10, 20, 30, 40, 50, 60, 70, 80, 90)
    sparse_db = db_of([{1}] * 6 + [{i} for i in range(2, 96)])  # MSS 6%
    assert auto_schedule(sparse_db).levels == (1, 2, 3, 4, 5, 6)
    tiny = db_of([{1}] * 6 + [{i} for i in range(2, 996)])  # MSS 0.6%
    assert auto_schedule(tiny).levels == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)


@pytest.mark.parametrize("level, ds, count", [(50, 4, 2), (75, 4, 3), (0.3, 1000, 3), (10, 3196, 320), (0.1, 4141, 5), (100 * 2 / 3, 3, 2), (100 / 3, 3, 1)])
def test_minsup_count_is_exact_ceiling(level, ds, count):
    assert minsup_count(level, ds) == count


# sweep

def test_sweep_hand_example():
    db = db_of([{1, 2}, {1, 2}, {1}, {1}])
    curves = sweep(db, SupportSchedule((50, 75)))
    lo, hi = curves.measurements
    assert (lo.minsup_count, lo.fi_count, lo.pb_count) == (2, 3, 1)
    assert (hi.minsup_count, hi.fi_count, hi.pb_count) == (3, 1, 1)
    assert lo.gamma == pytest.approx(100 * (4 + 2 + 2) / 3 / 4)
    assert lo.lam == pytest.approx(4 / 3)
    assert hi.gamma == 100.0
    assert hi.nb_count == 1  # {2}


def test_sweep_at_mss_keeps_top_singleton():
    rng = random.Random(8)
    for _ in range(10):
        db = db_of(random_transactions(rng))
        mss = 100 * max(db.singleton_support.values()) / len(db)
        curves = sweep(db, SupportSchedule((mss / 2, mss)))
        assert curves.measurements[-1].fi_count >= 1


def test_sweep_capacity_error_names_level():
    db = db_of([set(range(18))] * 10)
    with pytest.raises(CapacityError) as err:
        sweep(db, SupportSchedule((10, 20)), max_itemsets=1000)
    assert err.value.level == 10


def test_sweep_matches_oracle_curves():
    rng = random.Random(21)
    checked = 0
    while checked < 25:
        rows = random_transactions(rng, max_items=9, max_rows=30)
        db = db_of(rows)
        mss = 100 * max(db.singleton_support.values()) / len(db)
        levels = sorted({round(rng.uniform(1, mss), 3) for _ in range(3)})
        if len(levels) < 2:
            continue
        curves = sweep(db, SupportSchedule(levels))
        for m, ref in zip(curves.measurements, oracle_curves(rows, levels)):
            assert (m.minsup_count, m.fi_count, m.pb_count, m.nb_count) == (
                ref["count"], ref["fi"], ref["pb"], ref["nb"])
            assert m.gamma == pytest.approx(ref["gamma"])
            assert m.lam == pytest.approx(ref["lam"])
            assert m.pb_mean_len == pytest.approx(ref["pb_len"])
            assert m.nb_mean_len == pytest.approx(ref["nb_len"], nan_ok=True)
            assert m.gamma >= m.level - 1e-9
        fi = curves.curve("fi_count")
        assert np.all(np.diff(fi) <= 0)
        checked += 1


def _curves(levels, fi, pb, gamma, lam, pb_len, nb=None, nb_len=None):
    ms = []
    for i, s in enumerate(levels):
        ms.append(LevelMeasurement(
            level=s, minsup_count=1, fi_count=fi[i], pb_count=pb[i], gamma=gamma[i],
            lam=lam[i], pb_mean_len=pb_len[i],
            nb_count=None if nb is None else nb[i], nb_mean_len=None if nb_len is None else nb_len[i],
        ))
    return SweepCurves(SupportSchedule(levels), tuple(ms), nb is not None)


def test_sweep_metrics_constant_curves():
    c = _curves([10, 20, 40], fi=[7, 7, 7], pb=[3, 3, 3], gamma=[55] * 3, lam=[2] * 3, pb_len=[3] * 3,
                nb=[4, 4, 4], nb_len=[2.5] * 3)
    sm = sweep_metrics(c)
    assert sm.mcd == 100 * 30
    assert sm.pbc == 100 * 30
    assert sm.nbc == 100 * 30
    assert sm.asd == 55 * 30
    assert sm.fal == 60
    assert sm.pbl == 90
    assert sm.nbl == 75


def test_sweep_metrics_percent_of_max_vs_raw():
    c = _curves([1, 2, 3], fi=[10, 5, 1], pb=[2, 4, 1], gamma=[3, 4, 5], lam=[1, 1, 1], pb_len=[1, 1, 1])
    sm = sweep_metrics(c)
    assert sm.mcd == pytest.approx((100 + 50) / 2 + (50 + 10) / 2)
    assert sm.pbc == pytest.approx((50 + 100) / 2 + (100 + 25) / 2)
    assert sm.nbc is None and sm.nbl is None
    raw = sweep_metrics(c, normalization=RAW)
    assert raw.mcd == pytest.approx(7.5 + 3)
    assert raw.pbc == pytest.approx(3 + 2.5)
    assert raw.asd == sm.asd


def test_sweep_metrics_empty_level_is_undefined():
    c = _curves([1, 2], fi=[3, 0], pb=[1, 0], gamma=[5, math.nan], lam=[1, math.nan], pb_len=[1, math.nan])
    with pytest.raises(UndefinedMetricError, match="2"):
        sweep_metrics(c)


def test_sweep_metrics_from_oracle_curves():
    rng = random.Random(4)
    for _ in range(10):
        rows = random_transactions(rng, max_items=8, max_rows=25)
        db = db_of(rows)
        mss = 100 * max(db.singleton_support.values()) / len(db)
        levels = [mss / 3, mss / 2, mss]
        ref = oracle_curves(rows, levels)
        sm = sweep_metrics(sweep(db, SupportSchedule(levels)))
        fi = [r["fi"] for r in ref]
        pb = [r["pb"] for r in ref]
        assert sm.mcd == pytest.approx(area_under_curve(zip(levels, [100 * v / max(fi) for v in fi])))
        assert sm.pbc == pytest.approx(area_under_curve(zip(levels, [100 * v / max(pb) for v in pb])))
        assert sm.asd == pytest.approx(area_under_curve(zip(levels, [r["gamma"] for r in ref])))
        assert sm.fal == pytest.approx(area_under_curve(zip(levels, [r["lam"] for r in ref])))
        width = levels[-1] - levels[0]
        assert 0 <= sm.mcd <= 100 * width + 1e-9
        assert sm.asd >= levels[0] * width - 1e-9
        assert sm.fal >= width - 1e-9


# metric vector

def test_metric_vector_tiny_database_from_first_principles():
    rows = [{1, 2, 3}, {1, 2}, {2, 4}]
    db = db_of(rows, "tiny")
    vec = metric_vector(db, SupportSchedule((30, 60)))
    assert (vec.ds, vec.as_, vec.mts) == (3, 4, 3)
    assert vec.ats == pytest.approx(7 / 3)
    assert vec.f1 == pytest.approx(100 * 7 / 12)
    assert vec.mss == pytest.approx(100.0)
    # edges 12 13 23 24 of 6
    assert vec.ggd == pytest.approx(100 * 4 / 6)
    assert vec.h1 == pytest.approx(entropy_bits([2, 3, 1, 1]))
    assert vec.h2 == pytest.approx(entropy_bits([2, 1, 1, 1]))
    # 30% -> count 1: the 7 subsets of 123 plus 4 and 24; 60% -> count 2: 1, 2, 12
    assert [m.fi_count for m in vec.curves.measurements] == [9, 3]
    assert vec.mcd == pytest.approx(30 * (100 + 100 / 3) / 2)
    assert vec.pbc == pytest.approx(30 * (100 + 50) / 2)
    gamma30 = 100 * (2 + 3 + 1 + 1 + 2 + 1 + 1 + 1 + 1) / 9 / 3
    gamma60 = 100 * (2 + 3 + 2) / 3 / 3
    assert vec.asd == pytest.approx(30 * (gamma30 + gamma60) / 2)
    lam30 = (4 * 1 + 4 * 2 + 1 * 3) / 9
    assert vec.fal == pytest.approx(30 * (lam30 + 4 / 3) / 2)


def test_metric_vector_single_item_surfaces_ggd_error():
    db = db_of([{3}, {3}])
    with pytest.raises(UndefinedMetricError):
        metric_vector(db, SupportSchedule((50, 100)))
    lenient = metric_vector(db, SupportSchedule((50, 100)), strict=False)
    assert lenient.ggd is None and lenient.h2 is None
    assert lenient.mcd == 5000


def test_metric_vector_h2_downgrades_even_when_strict():
    db = db_of([set(range(8))] * 4)
    vec = metric_vector(db, None, pair_cap=5)
    assert vec.h2 is None
    assert any("h2" in n for n in vec.notes)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.frozensets(st.integers(0, 7), min_size=1, max_size=6), min_size=2, max_size=20), st.integers(2, 4))
def test_duplication_leaves_percentages_unchanged(rows, times):
    db = db_of(rows)
    mss = 100 * max(db.singleton_support.values()) / len(db)
    schedule = SupportSchedule((mss / 2, mss))
    a = metric_vector(db, schedule, strict=False)
    b = metric_vector(db.duplicated(times), schedule, strict=False)
    assert b.ds == times * a.ds
    for key in ("f1", "mss", "ggd", "h1", "h2", "mcd", "asd", "fal", "pbc", "pbl", "nbc", "nbl"):
        va, vb = getattr(a, key), getattr(b, key)
        assert (va is None) == (vb is None), key
        if va is not None:
            assert vb == pytest.approx(va, rel=1e-9, abs=1e-9), key


def test_csv_and_json_serialization():
    db = db_of([{1, 2}, {1}], "small")
    vec = metric_vector(db, SupportSchedule((50, 100)))
    buf = io.StringIO()
    write_metric_csv([vec.row(1)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert lines[1].startswith("1,small,2,2,1.5,2,75.0,100.0,")
    assert '"50,100"' in lines[1]
    doc = vec.to_dict(1)
    assert doc["schema_version"] == 1
    assert doc["schedule"] == [50.0, 100.0]
    assert len(doc["curves"]["levels"]) == 2
    json.dumps(doc, allow_nan=False)


def test_convention_variance_notes():
    vec = metric_vector(db_of([{1, 2}, {1}], "x"), SupportSchedule((50, 100)))
    assert convention_variance_notes(vec, {"mcd": vec.mcd, "pbc": vec.pbc}) == []
    notes = convention_variance_notes(vec, {"mcd": vec.mcd * 2, "pbc": vec.pbc * 1.1})
    assert len(notes) == 1 and notes[0].startswith("convention variance: MCD")
