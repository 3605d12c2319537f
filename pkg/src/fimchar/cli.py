"""Command-line entry point: ``fimchar {profile,sweep,cluster,mrb,check-benchmark}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, metrics
from .corpus import read_transactions
from .errors import FimcharError
from .miner import DEFAULT_MAX_ITEMSETS, mine_frequent, write_itemsets
from .reference import data_path, reference_rows

log = logging.getLogger("fimchar")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    inputs: list[Path] = field(default_factory=list)
    schedule: str | None = None
    schedules_file: Path | None = None
    start: float = 10.0
    step: float = 10.0
    include_negative: bool = True
    normalization: str = metrics.PERCENT_OF_MAX
    k: int = 4
    restarts: int = 500
    seed: int = 0
    out: Path = Path(".")
    format: str = "csv"
    workers: int = 1
    max_itemsets: int = DEFAULT_MAX_ITEMSETS
    pair_cap: int = metrics.DEFAULT_PAIR_CAP
    reference_check: bool = True

    def describe(self) -> dict:
        doc = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(self).items()}
        doc["inputs"] = [str(p) for p in self.inputs]
        return doc


def _write_json(path: Path, doc) -> None:
    with open(path, "w") as fp:
        json.dump(doc, fp, indent=2)
        fp.write("\n")


def _expand_inputs(paths: list[Path]) -> list[Path]:
    files = []
    for p in paths:
        if p.is_dir():
            files.extend(sorted(q for q in p.iterdir() if q.is_file() and not q.name.startswith(".")))
        else:
            files.append(p)
    return files


def _load_schedules(path: Path) -> dict[str, str]:
    with open(path, newline="") as fp:
        return {r["name"]: r["schedule"] for r in csv.DictReader(fp) if r.get("schedule")}


def _resolve_schedule(cfg: RunConfig, db, per_name: dict[str, str]) -> metrics.SupportSchedule:
    if db.name in per_name:
        return metrics.SupportSchedule.parse(per_name[db.name])
    if cfg.schedule:
        return metrics.SupportSchedule.parse(cfg.schedule)
    return metrics.auto_schedule(db, cfg.start, cfg.step)


def _profile_one(args: tuple[RunConfig, Path, dict[str, str]]) -> tuple[dict | None, str | None]:
    cfg, path, per_name = args
    try:
        db = read_transactions(path)
    except (OSError, UnicodeDecodeError, FimcharError) as exc:
        return None, f"{path}: {exc}"
    try:
        schedule = _resolve_schedule(cfg, db, per_name)
    except ValueError as exc:
        schedule = None
        log.warning("%s: no valid schedule (%s); sweep metrics left unavailable", db.name, exc)
    vec = metrics.metric_vector(
        db, schedule,
        include_negative=cfg.include_negative,
        normalization=cfg.normalization,
        pair_cap=cfg.pair_cap,
        max_itemsets=cfg.max_itemsets,
        strict=False,
    )
    if cfg.reference_check:
        vec.notes.extend(_reference_notes(vec))
    return {"row": vec.row(), "doc": vec.to_dict()}, None


def _reference_notes(vec: metrics.MetricVector) -> list[str]:
    """Compare MCD/PBC with the shipped reference row of the same name and schedule."""
    for row in reference_rows():
        if row["name"] != vec.name or vec.schedule is None:
            continue
        if metrics.SupportSchedule.parse(row["schedule"]).levels != vec.schedule.levels:
            continue
        ref = {k: float(row[k]) for k in ("mcd", "pbc") if row.get(k)}
        return metrics.convention_variance_notes(vec, ref)
    return []


def cmd_profile(cfg: RunConfig) -> int:
    files = _expand_inputs(cfg.inputs)
    if not files:
        raise UsageError("no input files found")
    per_name = _load_schedules(cfg.schedules_file) if cfg.schedules_file else {}
    jobs = [(cfg, f, per_name) for f in files]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_profile_one, jobs))
    else:
        results = [_profile_one(j) for j in jobs]

    rows, docs = [], []
    for result, error in results:
        if error:
            print(f"error: {error}", file=sys.stderr)
            continue
        n = len(rows) + 1
        result["row"]["id"] = n
        result["doc"]["id"] = n
        rows.append(result["row"])
        docs.append(result["doc"])
    if not rows:
        print("error: no database could be profiled", file=sys.stderr)
        return EXIT_FAILED

    cfg.out.mkdir(parents=True, exist_ok=True)
    if cfg.format == "json":
        target = cfg.out / "metrics.json"
        _write_json(target, {"schema_version": metrics.SCHEMA_VERSION, "config": cfg.describe(), "databases": docs})
    else:
        target = cfg.out / "metrics.csv"
        with open(target, "w", newline="") as fp:
            metrics.write_metric_csv(rows, fp)
        _write_json(cfg.out / "metrics.run.json", {"schema_version": metrics.SCHEMA_VERSION, "config": cfg.describe()})

    for row, doc in zip(rows, docs):
        summary = " ".join(
            f"{k}={_short(row[k])}" for k in ("ds", "as", "ats", "mts", "f1", "ggd", "h1", "h2", "mss", "mcd", "asd", "fal", "pbc", "pbl")
        )
        print(f"{row['id']:>3} {row['name']}: {summary}")
        for note in doc["notes"]:
            print(f"    note: {note}")
    print(f"wrote {target}")
    return EXIT_OK


def _short(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.2f}"
    return str(v)


def cmd_sweep(cfg: RunConfig, dump_itemsets: bool = False) -> int:
    files = _expand_inputs(cfg.inputs)
    if len(files) != 1:
        raise UsageError("sweep takes exactly one database file")
    db = read_transactions(files[0])
    per_name = _load_schedules(cfg.schedules_file) if cfg.schedules_file else {}
    schedule = _resolve_schedule(cfg, db, per_name)
    curves = metrics.sweep(db, schedule, cfg.include_negative, cfg.max_itemsets)
    cfg.out.mkdir(parents=True, exist_ok=True)
    doc = {"schema_version": metrics.SCHEMA_VERSION, "name": db.name, "config": cfg.describe()}
    doc.update(curves.to_dict())
    try:
        sm = metrics.sweep_metrics(curves, cfg.normalization)
        doc["metrics"] = {k: getattr(sm, k) for k in ("mcd", "asd", "fal", "pbc", "pbl", "nbc", "nbl")}
    except FimcharError as exc:
        doc["metrics"] = None
        doc["notes"] = [str(exc)]
    _write_json(cfg.out / f"{db.name}.sweep.json", doc)
    with open(cfg.out / f"{db.name}.sweep.csv", "w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        keys = list(doc["levels"][0])
        writer.writerow(keys)
        for level in doc["levels"]:
            writer.writerow(["" if level[k] is None else level[k] for k in keys])
    if dump_itemsets:
        fi = mine_frequent(db, metrics.minsup_count(schedule.levels[0], len(db)), cfg.max_itemsets)
        with open(cfg.out / f"{db.name}.itemsets.txt", "w") as fp:
            write_itemsets(fi, fp)
    for level in doc["levels"]:
        print(f"{level['level']:>8g}%  FI={level['fi_count']}  Bd+={level['pb_count']}  Bd-={level['nb_count']}")
    print(f"wrote {cfg.out / (db.name + '.sweep.json')}")
    return EXIT_OK


def _feature_columns(spec: str, include_ds: bool) -> list[str]:
    if spec in analysis.FEATURE_PRESETS:
        cols = list(analysis.FEATURE_PRESETS[spec])
    else:
        cols = [c.strip() for c in spec.split(",") if c.strip()]
    if include_ds and "ds" not in cols:
        cols.insert(0, "ds")
    return cols


def _load_model(spec: str) -> analysis.ClusterModel:
    path = data_path("reference_clusters.json") if spec == "reference" else Path(spec)
    with open(path) as fp:
        return analysis.ClusterModel.from_dict(json.load(fp))


def cmd_cluster(cfg: RunConfig, table: Path, features: str, include_ds: bool,
                missing: str, max_depth: int | None, tree_labels: str | None) -> int:
    table_m = analysis.read_metric_table(table)
    cols = [c for c in _feature_columns(features, include_ds) if c in table_m.columns]
    m = table_m.select(cols)
    if missing == "drop":
        m = m.drop_incomplete_columns()
    if not 1 <= cfg.k <= m.shape[0]:
        raise UsageError(f"k={cfg.k} is not in [1, {m.shape[0]}] (rows in {table})")
    scaled = analysis.robust_scale(m)
    model = analysis.kmeans(scaled, cfg.k, restarts=cfg.restarts, seed=cfg.seed)

    labels = model.labels
    if tree_labels:
        given = _load_model(tree_labels).assignment
        labels = np.array([given[i] for i in m.ids])
    tree = analysis.fit_tree(m, labels, max_depth=max_depth)

    cfg.out.mkdir(parents=True, exist_ok=True)
    doc = {"schema_version": metrics.SCHEMA_VERSION}
    doc.update(model.to_dict())
    doc["missing"] = missing
    doc["imputed"] = [
        {"id": i, "feature": c}
        for r, i in enumerate(m.ids) for j, c in enumerate(m.columns) if scaled.imputed[r, j]
    ]
    doc["tree"] = {
        "labels": "given" if tree_labels else "kmeans",
        "accuracy": tree.accuracy,
        "internal_nodes": len(tree.internal_nodes()),
        "depth": tree.depth,
    }
    _write_json(cfg.out / "cluster.json", doc)
    (cfg.out / "tree.txt").write_text(tree.render())
    with open(cfg.out / "coords.csv", "w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["id", "name", "asd", "pbc", "cluster"])
        asd = table_m.column("asd") if "asd" in table_m.columns else [None] * len(m.ids)
        pbc = table_m.column("pbc") if "pbc" in table_m.columns else [None] * len(m.ids)
        for i, n, a, p, c in zip(m.ids, m.names, asd, pbc, model.labels):
            writer.writerow([i, n, a, p, int(c)])

    print(f"features: {','.join(m.columns)}")
    for c, members in enumerate(model.clusters()):
        print(f"cluster {c}: {' '.join(str(i) for i in sorted(members))}")
    print(f"inertia={model.inertia:.6f} seed={cfg.seed} restarts={cfg.restarts}")
    print(tree.render(), end="")
    print(f"tree accuracy={tree.accuracy:.4f} internal_nodes={len(tree.internal_nodes())}")
    return EXIT_OK


def _audit(model: analysis.ClusterModel, files: list[Path]) -> list[dict]:
    id_by_name = {n: i for i, n in zip(model.ids, model.names) if n}
    rows = []
    for f in files:
        b = analysis.read_benchmark(f, id_by_name)
        v = analysis.check_representative(b, model)
        rows.append({
            "study": b.name,
            "size": len(b.members),
            "representative": v.representative,
            "missing_count": len(v.missing_clusters),
            "missing_clusters": " ".join(map(str, sorted(v.missing_clusters))),
            "members": " ".join(map(str, sorted(b.members))),
        })
    return rows


def _write_audit(path: Path, rows: list[dict]) -> None:
    keys = ["study", "size", "representative", "missing_count", "missing_clusters", "members"]
    with open(path, "w", newline="") as fp:
        writer = csv.DictWriter(fp, keys, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def cmd_mrb(cfg: RunConfig, cluster: str, benchmarks: list[Path], limit: int) -> int:
    model = _load_model(cluster)
    mrb = analysis.minimum_representative_benchmarks(model, limit)
    names = dict(zip(model.ids, model.names))
    doc = {
        "schema_version": metrics.SCHEMA_VERSION,
        "seed": model.seed,
        "minimum_size": mrb.size,
        "total_minimum_benchmarks": mrb.total,
        "examples": [[{"id": i, "name": names.get(i, "")} for i in ex] for ex in mrb.examples],
    }
    audit = _audit(model, _expand_inputs(benchmarks)) if benchmarks else []
    if audit:
        doc["audit"] = audit
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_json(cfg.out / "mrb.json", doc)
    if audit:
        _write_audit(cfg.out / "audit.csv", audit)
    print(f"minimum representative benchmark size: {mrb.size}")
    print(f"number of minimum benchmarks: {mrb.total}")
    for ex in mrb.examples:
        print("  " + ", ".join(f"{i}:{names.get(i, '')}" for i in ex))
    _print_audit(audit)
    return EXIT_OK


def _print_audit(rows: list[dict]) -> None:
    for r in rows:
        verdict = "representative" if r["representative"] else f"missing clusters {r['missing_clusters']}"
        print(f"  {r['study']}: {verdict}")


def cmd_check_benchmark(cfg: RunConfig, cluster: str, benchmarks: list[Path]) -> int:
    model = _load_model(cluster)
    files = _expand_inputs(benchmarks)
    if not files:
        raise UsageError("no benchmark files given")
    audit = _audit(model, files)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_audit(cfg.out / "audit.csv", audit)
    _print_audit(audit)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fimchar", description="Characterize transactional databases and audit mining benchmarks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, default=0)

    def add_schedule(p):
        p.add_argument("--schedule", help='explicit levels "10,20,30" or range "10:90:10" (percent)')
        p.add_argument("--schedules", type=Path, dest="schedules_file",
                       help="CSV with name,schedule columns giving per-database schedules")
        p.add_argument("--start", type=float, default=10.0, help="auto schedule start (percent)")
        p.add_argument("--step", type=float, default=10.0, help="auto schedule step (percent)")
        p.add_argument("--no-negative", dest="include_negative", action="store_false",
                       help="skip negative borders (NBC/NBL)")
        p.add_argument("--normalization", choices=metrics.NORMALIZATIONS, default=metrics.PERCENT_OF_MAX)
        p.add_argument("--max-itemsets", type=int, default=DEFAULT_MAX_ITEMSETS)

    p = sub.add_parser("profile", help="compute the metric table of one or more databases")
    p.add_argument("inputs", nargs="+", type=Path)
    add_common(p)
    add_schedule(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--pair-cap", type=int, default=metrics.DEFAULT_PAIR_CAP)
    p.add_argument("--no-reference-check", dest="reference_check", action="store_false",
                   help="skip the MCD/PBC comparison against shipped reference rows")

    p = sub.add_parser("sweep", help="per-level curves of one database")
    p.add_argument("inputs", nargs=1, type=Path)
    add_common(p)
    add_schedule(p)
    p.add_argument("--dump-itemsets", action="store_true",
                   help="also write the frequent itemsets of the lowest level")

    p = sub.add_parser("cluster", help="cluster a metric table and explain it with a tree")
    p.add_argument("table", type=Path)
    add_common(p)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--restarts", type=int, default=500)
    p.add_argument("--features", default="default",
                   help=f"preset ({', '.join(analysis.FEATURE_PRESETS)}) or comma-separated columns")
    p.add_argument("--include-ds", action="store_true")
    p.add_argument("--missing", choices=("impute", "drop"), default="impute")
    p.add_argument("--max-depth", type=int)
    p.add_argument("--tree-labels", help="cluster report whose labels train the tree ('reference' for the shipped one)")

    p = sub.add_parser("mrb", help="minimum representative benchmarks of a cluster report")
    p.add_argument("cluster", help="cluster.json path, or 'reference'")
    p.add_argument("--benchmarks", nargs="*", type=Path, default=[])
    p.add_argument("--limit", type=int, default=10)
    add_common(p)

    p = sub.add_parser("check-benchmark", help="audit benchmark files against a cluster report")
    p.add_argument("cluster", help="cluster.json path, or 'reference'")
    p.add_argument("benchmarks", nargs="+", type=Path)
    add_common(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")

    cfg = RunConfig(out=args.out, seed=args.seed)
    for key in ("schedule", "schedules_file", "start", "step", "include_negative", "normalization",
                "k", "restarts", "format", "workers", "max_itemsets", "pair_cap", "reference_check"):
        if hasattr(args, key):
            setattr(cfg, key, getattr(args, key))
    if hasattr(args, "inputs"):
        cfg.inputs = list(args.inputs)

    try:
        if args.command == "profile":
            return cmd_profile(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.dump_itemsets)
        if args.command == "cluster":
            return cmd_cluster(cfg, args.table, args.features, args.include_ds,
                               args.missing, args.max_depth, args.tree_labels)
        if args.command == "mrb":
            return cmd_mrb(cfg, args.cluster, args.benchmarks, args.limit)
        return cmd_check_benchmark(cfg, args.cluster, args.benchmarks)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FimcharError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
