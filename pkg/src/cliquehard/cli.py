"""Batch command line: one subcommand per pipeline stage, files in between.

Stages and their outputs (all under the output directory):

    features   features.csv, features_diagnostics.csv
    label      dataset.csv, results.csv, label_diagnostics.csv
    train      models.json, trajectory.csv
    mine       bins.json, transactions.txt, rules.csv
    runtime    runtime.json
    report     report.json
    synthesize dataset.csv from a synthetic generator (demos and tests)

Exit codes: 0 success, 1 usage, 2 data error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .arm import RULE_HEADER, RuleConsistencyError, mine_class_rules
from .config import DEFAULTS_TEXT, ConfigError, PipelineConfig, load_config
from .dataset import (HARD, NOT_HARD, Dataset, DatasetError, MinMaxScaler, quartile_bins,
                      random_split_indices, read_csv, read_dataset_csv, stratified_split,
                      to_transactions, write_csv, write_dataset_csv, write_transactions)
from .features import FEATURE_NAMES, extract_features
from .graph import GraphFormatError, GraphValidationError, load_tudataset, parse_dimacs, parse_edge_list
from .metrics import regression_metrics
from .models import ClassifierSpec, TrainingError, train_regressor
from .selection import evaluate_classifier, forward_feature_selection, grid_search, grid_search_regressor
from .solvers import InvariantViolation, run_portfolio

log = logging.getLogger("cliquehard")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3

DIMACS_SUFFIXES = {".clq", ".dimacs", ".col"}
EDGELIST_SUFFIXES = {".txt", ".edges", ".el", ".edgelist"}
PCT_RMSE_DEFINITION = "100 * rmse / mean(actual)"


class DataError(RuntimeError):
    """Input data that cannot support the requested stage."""


# ---------------------------------------------------------------------------
# corpus loading
# ---------------------------------------------------------------------------

def _is_tudataset(directory: Path) -> bool:
    return any(directory.glob("*_A.txt")) and any(directory.glob("*_graph_indicator.txt"))


def load_corpus(cfg: PipelineConfig):
    """Return ``(graphs, failures)``: lists of (id, Graph) and (source, message)."""
    if cfg.input is None:
        raise DataError("no input configured; set [data] input")
    src = cfg.input
    if not src.exists():
        raise DataError(f"input {src} does not exist")
    fmt = cfg.format
    if fmt == "tudataset" or (fmt == "auto" and src.is_dir() and _is_tudataset(src)):
        try:
            graphs = load_tudataset(src, cfg.tudataset_name)
        except (GraphFormatError, GraphValidationError, OSError) as exc:
            raise DataError(f"{src}: {exc}") from None
        name = cfg.tudataset_name or src.name
        return [(f"{name}-{i + 1}", g) for i, g in enumerate(graphs)], []

    if src.is_dir():
        files = sorted(p for p in src.iterdir()
                       if p.is_file() and p.suffix.lower() in DIMACS_SUFFIXES | EDGELIST_SUFFIXES)
    else:
        files = [src]
    graphs, failures = [], []
    for path in files:
        kind = fmt
        if kind == "auto":
            kind = "dimacs" if path.suffix.lower() in DIMACS_SUFFIXES else "edgelist"
        try:
            text = path.read_text(encoding="utf-8")
            g = parse_dimacs(text) if kind == "dimacs" else parse_edge_list(text)
        except (GraphFormatError, GraphValidationError, UnicodeDecodeError) as exc:
            log.warning("skipping %s: %s", path.name, exc)
            failures.append((path.name, str(exc)))
            continue
        graphs.append((path.stem if src.is_dir() else path.name, g))
    return graphs, failures


def _map(fn, items, jobs: int):
    """Order-preserving map, across processes when ``jobs > 1``."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _features_job(args):
    gid, g, tol = args
    try:
        return gid, extract_features(g, tol), None
    except (GraphValidationError, ValueError, np.linalg.LinAlgError) as exc:
        return gid, None, str(exc)


def _label_job(args):
    gid, g, portfolio = args
    try:
        return run_portfolio(g, portfolio, gid), None
    except InvariantViolation:
        raise
    except (GraphValidationError, ValueError) as exc:
        return None, f"{gid}: {exc}"


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def _out(cfg: PipelineConfig) -> Path:
    cfg.output.mkdir(parents=True, exist_ok=True)
    return cfg.output


def cmd_features(cfg: PipelineConfig) -> Path:
    graphs, failures = load_corpus(cfg)
    results = _map(_features_job, [(gid, g, cfg.tolerance) for gid, g in graphs], cfg.jobs)
    rows = []
    for gid, fv, err in results:
        if fv is None:
            log.warning("features failed for %s: %s", gid, err)
            failures.append((gid, err))
        else:
            rows.append([gid, *fv.values(), fv.used_largest_component])
    out = _out(cfg)
    write_csv(out / "features_diagnostics.csv", ["source", "error"], failures, cfg.fingerprint)
    if not rows:
        raise DataError("no graph could be parsed and featurized")
    path = out / "features.csv"
    write_csv(path, ["graph_id", *FEATURE_NAMES, "used_largest_component"], rows, cfg.fingerprint)
    log.info("wrote %d feature rows to %s", len(rows), path)
    return path


RESULT_HEADER = ["graph_id", "solver", "clique_size", "proven_optimal", "timed_out",
                 "runtime", "work", "vertices"]


def cmd_label(cfg: PipelineConfig) -> Path:
    graphs, failures = load_corpus(cfg)
    jobs = [(gid, g, cfg.portfolio) for gid, g in graphs]
    outcomes = _map(_label_job, jobs, cfg.jobs)
    solvers = ("exact_bnb", *cfg.portfolio.alternates)
    result_rows, diag = [], [list(f) for f in failures]
    X, labels, ids, lcc = [], [], [], []
    runtimes = {s: [] for s in solvers}
    for record, err in outcomes:
        if record is None:
            diag.append(["", err])
            continue
        for s in solvers:
            r = record.results[s]
            result_rows.append([record.graph_id, s, r.size, r.proven_optimal, r.timed_out,
                                record.runtimes[s], r.work, " ".join(map(str, sorted(r.vertices)))])
        if not record.resolved:
            log.warning("%s unresolved: %s", record.graph_id, "; ".join(record.notes))
            diag.append([record.graph_id, "; ".join(record.notes) or "unresolved"])
            continue
        X.append(record.features.values())
        labels.append(int(record.label.hard))
        ids.append(record.graph_id)
        lcc.append(record.features.used_largest_component)
        for s in solvers:
            runtimes[s].append(record.runtimes[s])
    out = _out(cfg)
    write_csv(out / "results.csv", RESULT_HEADER, result_rows, cfg.fingerprint)
    write_csv(out / "label_diagnostics.csv", ["graph_id", "reason"], diag, cfg.fingerprint)
    if not ids:
        raise DataError("every instance is unresolved; nothing to label")
    d = Dataset(np.array(X), np.array(labels, dtype=np.int64), ids, FEATURE_NAMES,
                {s: np.array(v) for s, v in runtimes.items()})
    path = out / "dataset.csv"
    write_dataset_csv(path, d, cfg.fingerprint, lcc)
    log.info("labelled %d instances (%d hard, %d unresolved)", len(d), int(d.labels.sum()), len(graphs) - len(d))
    return path


def _dataset(cfg: PipelineConfig) -> Dataset:
    path = cfg.output / "dataset.csv"
    if not path.is_file():
        raise DataError(f"{path} not found; run 'label' (or 'synthesize') first")
    return read_dataset_csv(path)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(float(obj)) else float(obj)
    return obj


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(_json_safe(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def cmd_train(cfg: PipelineConfig) -> dict:
    d = _dataset(cfg)
    neg, pos = d.class_counts()
    if neg == 0 or pos == 0:
        raise DataError("training needs both hard and not-hard instances")
    train, test = stratified_split(d, cfg.test_fraction, cfg.seed)
    if min(train.class_counts()) < cfg.cv_folds:
        raise DataError(f"too few minority instances for {cfg.cv_folds}-fold cross-validation")
    families, best_specs = {}, {}
    for fam in cfg.families:
        log.info("grid search: %s", fam)
        gs = grid_search(fam, cfg.grids.get(fam, {}), train, cfg.cv_folds, cfg.seed, cfg.class_weighting)
        best_specs[fam] = gs.best
        report = evaluate_classifier(gs.best, train, test, gs.best_cv).as_dict()
        report["grid"] = [{"params": s.hyper(), "cv_weighted_f1": cv.mean, "cv_weighted_f1_sd": cv.sd}
                          for s, cv in gs.trials]
        families[fam] = report
    best_family = max(cfg.families, key=lambda f: (families[f]["cv"]["weighted_f1_mean"], -cfg.families.index(f)))

    sel_spec = best_specs.get(cfg.selection_family) or ClassifierSpec.make(
        cfg.selection_family, class_weighting=cfg.class_weighting, seed=cfg.seed)
    log.info("forward feature selection with %s", cfg.selection_family)
    steps = forward_feature_selection(sel_spec, train, cfg.cv_folds, cfg.seed, cfg.selection_max_features)
    out = _out(cfg)
    write_csv(out / "trajectory.csv",
              ["n_features", "added", "weighted_f1", "minority_f1", "roc_auc", "features"],
              [[s.n_features, s.added, s.weighted_f1, s.minority_f1, s.roc_auc, ";".join(s.features)]
               for s in steps], cfg.fingerprint)
    best_step = max(steps, key=lambda s: (round(s.weighted_f1, 12), -s.n_features))
    selected = evaluate_classifier(sel_spec, train.select_features(best_step.features),
                                   test.select_features(best_step.features)).as_dict()

    payload = {
        "config_sha256": cfg.fingerprint,
        "split": {"seed": cfg.seed, "test_fraction": cfg.test_fraction,
                  "train": dict(zip((NOT_HARD, HARD), train.class_counts())),
                  "test": dict(zip((NOT_HARD, HARD), test.class_counts()))},
        "selection_criterion": "cv weighted F1",
        "best_family": best_family,
        "families": families,
        "feature_selection": {"family": cfg.selection_family,
                              "order": [s.added for s in steps],
                              "best_n_features": best_step.n_features,
                              "model": selected},
    }
    _write_json(out / "models.json", payload)
    log.info("best family %s: test weighted F1 %.4f", best_family, families[best_family]["weighted_f1"])
    return payload


def cmd_mine(cfg: PipelineConfig):
    d = _dataset(cfg)
    hard_rows = np.flatnonzero(d.labels == 1)
    if len(hard_rows) == 0:
        raise DataError("no hard instances to mine rules from")
    bins = quartile_bins(d, hard_rows if cfg.bin_source == "hard" else None)
    diagnostics: dict = {}
    transactions = to_transactions(d, bins, diagnostics=diagnostics)
    reports = mine_class_rules(transactions, cfg.min_support, cfg.min_confidence,
                               cfg.antecedent_floor, cfg.max_antecedent, HARD)
    out = _out(cfg)
    (out / "bins.json").write_text(bins.to_json(), encoding="utf-8")
    (out / "transactions.txt").write_text(write_transactions(transactions), encoding="utf-8")
    write_csv(out / "rules.csv", RULE_HEADER, [r.row() for r in reports], cfg.fingerprint)
    log.info("%d rules from %d hard of %d instances (evaluated on the full corpus)",
             len(reports), len(hard_rows), len(d))
    return reports


def cmd_runtime(cfg: PipelineConfig) -> dict:
    d = _dataset(cfg)
    if not d.runtimes:
        raise DataError("dataset has no runtime columns")
    train_rows, test_rows = random_split_indices(len(d), cfg.runtime_test_fraction, cfg.seed)
    reports = {}
    for solver in sorted(d.runtimes):
        y = d.runtimes[solver].astype(float)
        if cfg.log_target:
            if np.any(y <= 0):
                raise DataError(f"log target needs positive runtimes ({solver})")
            y = np.log(y)
        spec, cv_score, trials = grid_search_regressor(cfg.runtime_grid, d.X[train_rows], y[train_rows],
                                                       cfg.runtime_cv_folds, cfg.seed)
        scaler = MinMaxScaler().fit(d.X[train_rows])
        model = train_regressor(spec, scaler.transform(d.X[train_rows]), y[train_rows])
        scores = regression_metrics(model.predict(scaler.transform(d.X[test_rows])), y[test_rows])
        reports[solver] = {
            "spec": spec.as_dict(),
            "cv_neg_rmse": cv_score,
            "grid": [{"params": s.hyper(), "cv_neg_rmse": v} for s, v in trials],
            "target_space": "log" if cfg.log_target else "linear",
            "percentage_rmse_definition": PCT_RMSE_DEFINITION,
            "n_train": len(train_rows), "n_test": len(test_rows),
            **scores.as_dict(),
        }
        log.info("%s: rmse %.4g, r2 %s", solver, scores.rmse, scores.r2)
    payload = {"config_sha256": cfg.fingerprint, "solvers": reports}
    _write_json(_out(cfg) / "runtime.json", payload)
    return payload


def cmd_report(cfg: PipelineConfig) -> dict:
    out = cfg.output
    payload: dict = {"config_sha256": cfg.fingerprint, "stages": {}}
    models = out / "models.json"
    if models.is_file():
        m = json.loads(models.read_text(encoding="utf-8"))
        best = m["best_family"]
        payload["stages"]["train"] = {
            "best_family": best,
            "test_weighted_f1": m["families"][best]["weighted_f1"],
            "test_per_class_f1": m["families"][best]["per_class_f1"],
            "test_roc_auc": m["families"][best]["roc_auc"],
            "feature_order": m["feature_selection"]["order"],
        }
    rules = out / "rules.csv"
    if rules.is_file():
        header, rows = read_csv(rules)
        payload["stages"]["mine"] = {"n_rules": len(rows),
                                     "top_rules": [dict(zip(header, r)) for r in rows[:5]],
                                     "evaluation_corpus": "full"}
    runtime = out / "runtime.json"
    if runtime.is_file():
        r = json.loads(runtime.read_text(encoding="utf-8"))
        payload["stages"]["runtime"] = {s: {k: v[k] for k in ("rmse", "percentage_rmse", "r2", "target_space")}
                                        for s, v in r["solvers"].items()}
    if not payload["stages"]:
        raise DataError(f"no stage outputs found in {out}")
    _write_json(_out(cfg) / "report.json", payload)
    return payload


def cmd_synthesize(cfg: PipelineConfig, kind: str, n: int) -> Path:
    from .synthetic import planted_rule_corpus, runtime_corpus

    d = planted_rule_corpus(n, cfg.seed).dataset if kind == "planted" else runtime_corpus(n, cfg.seed)
    path = _out(cfg) / "dataset.csv"
    write_dataset_csv(path, d, cfg.fingerprint)
    return path


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="configuration file (key = value sections)")
    common.add_argument("--seed", type=int, help="overrides [run] seed")
    common.add_argument("--jobs", type=int, help="worker processes for per-instance stages")
    common.add_argument("--out", type=Path, help="output directory (overrides [output] directory)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cliquehard", description="Maximum-clique hardness pipeline.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (("features", "compute graph features"),
                            ("label", "run the solver portfolio and label hardness"),
                            ("train", "grid search, model selection and feature selection"),
                            ("mine", "FP-Growth rules over quartile bands"),
                            ("runtime", "runtime regression per solver"),
                            ("report", "collect stage outputs into report.json")):
        sub.add_parser(name, parents=[common], help=help_text)
    syn = sub.add_parser("synthesize", parents=[common], help="write a synthetic dataset.csv")
    syn.add_argument("--kind", choices=("planted", "runtime"), default="planted")
    syn.add_argument("-n", type=int, default=2400)
    cfgp = sub.add_parser("config", parents=[common], help="show configuration")
    cfgp.add_argument("--print-defaults", action="store_true")
    return parser


def resolve_config(args) -> PipelineConfig:
    overrides = {}
    if args.seed is not None:
        overrides.setdefault("run", {})["seed"] = str(args.seed)
    cfg = load_config(args.config, overrides=overrides)
    if args.jobs is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg.jobs = args.jobs
    if args.out is not None:
        cfg.output = args.out
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command == "config" and args.print_defaults:
        sys.stdout.write(DEFAULTS_TEXT)
        return EXIT_OK
    try:
        cfg = resolve_config(args)
        if args.command == "config":
            sys.stdout.write(cfg.text)
        elif args.command == "synthesize":
            cmd_synthesize(cfg, args.kind, args.n)
        else:
            {"features": cmd_features, "label": cmd_label, "train": cmd_train, "mine": cmd_mine,
             "runtime": cmd_runtime, "report": cmd_report}[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DatasetError, GraphFormatError, GraphValidationError, TrainingError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvariantViolation, RuleConsistencyError) as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
