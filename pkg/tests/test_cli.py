from __future__ import annotations

import json

import numpy as np
import pytest

from cliquehard.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from cliquehard.config import DEFAULTS_TEXT
from cliquehard.dataset import Dataset, read_csv, read_dataset_csv, write_dataset_csv
from cliquehard.features import FEATURE_NAMES, extract_features
from cliquehard.graph import write_dimacs, write_edge_list
from cliquehard.synthetic import (adversarial_clique_graph, complete_graph, gnp_graph, path_graph,
                                  planted_rule_corpus, star_graph)


def run(tmp_path, *args, config=""):
    path = tmp_path / "c.ini"
    path.write_text(config)
    return main([*args, "--config", str(path), "--out", str(tmp_path / "out")])


def graph_dir(tmp_path, graphs):
    d = tmp_path / "graphs"
    d.mkdir(exist_ok=True)
    for name, g in graphs.items():
        (d / f"{name}.txt").write_text(write_edge_list(g))
    return d


def test_print_defaults(capsys):
    assert main(["config", "--print-defaults"]) == EXIT_OK
    assert capsys.readouterr().out == DEFAULTS_TEXT


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["nonsense"])
    assert info.value.code == EXIT_USAGE
    assert run(tmp_path, "features", config="[train]\nunknown = 1\n") == EXIT_USAGE
    assert main(["features", "--config", str(tmp_path / "missing.ini")]) == EXIT_USAGE
    assert run(tmp_path, "features", "--jobs", "0") == EXIT_USAGE


def test_features_three_graphs(tmp_path):
    src = graph_dir(tmp_path, {"k3": complete_graph(3), "p3": path_graph(3), "s3": star_graph(3)})
    assert run(tmp_path, "features", config=f"[data]\ninput = {src}\n") == EXIT_OK
    header, rows = read_csv(tmp_path / "out" / "features.csv")
    assert header == ["graph_id", *FEATURE_NAMES, "used_largest_component"]
    by_id = {r[0]: r for r in rows}
    assert sorted(by_id) == ["k3", "p3", "s3"]
    for gid, g in (("k3", complete_graph(3)), ("p3", path_graph(3)), ("s3", star_graph(3))):
        assert np.allclose([float(x) for x in by_id[gid][1:-1]], extract_features(g).values(), atol=1e-12)


def test_features_empty_directory(tmp_path):
    (tmp_path / "empty").mkdir()
    assert run(tmp_path, "features", config=f"[data]\ninput = {tmp_path / 'empty'}\n") == EXIT_DATA
    assert run(tmp_path, "features", config="[data]\ninput = nowhere\n") == EXIT_DATA
    assert run(tmp_path, "features") == EXIT_DATA


def test_features_mixed_valid_and_corrupt(tmp_path):
    src = graph_dir(tmp_path, {"ok": complete_graph(4)})
    (src / "bad.txt").write_text("0 1\n1 x\n")
    (src / "loop.txt").write_text("0 0\n")
    (src / "tri.clq").write_text(write_dimacs(complete_graph(3)))
    assert run(tmp_path, "features", config=f"[data]\ninput = {src}\n") == EXIT_OK
    _, rows = read_csv(tmp_path / "out" / "features.csv")
    assert sorted(r[0] for r in rows) == ["ok", "tri"]
    _, diag = read_csv(tmp_path / "out" / "features_diagnostics.csv")
    assert sorted(r[0] for r in diag) == ["bad.txt", "loop.txt"]


def test_features_tudataset_directory(tmp_path):
    tu = tmp_path / "TOY"
    tu.mkdir()
    (tu / "TOY_A.txt").write_text("1, 2\n2, 1\n2, 3\n3, 2\n4, 5\n5, 4\n")
    (tu / "TOY_graph_indicator.txt").write_text("1\n1\n1\n2\n2\n")
    assert run(tmp_path, "features", config=f"[data]\ninput = {tu}\n") == EXIT_OK
    _, rows = read_csv(tmp_path / "out" / "features.csv")
    assert [r[0] for r in rows] == ["TOY-1", "TOY-2"]


def test_label_complete_graphs_not_hard(tmp_path):
    src = graph_dir(tmp_path, {f"k{n}": complete_graph(n) for n in range(3, 8)})
    assert run(tmp_path, "label", config=f"[data]\ninput = {src}\n[solvers]\nrepeats = 1\n") == EXIT_OK
    d = read_dataset_csv(tmp_path / "out" / "dataset.csv")
    assert len(d) == 5 and d.labels.sum() == 0
    header, rows = read_csv(tmp_path / "out" / "results.csv")
    assert len(rows) == 15
    sizes = {(r[0], r[1]): int(r[header.index("clique_size")]) for r in rows}
    assert all(sizes[(f"k{n}", s)] == n for n in range(3, 8) for s in ("exact_bnb", "greedy", "local_search"))


def test_label_adversarial_graphs_hard(tmp_path):
    src = graph_dir(tmp_path, {"adv": adversarial_clique_graph(decoy_size=40), "k5": complete_graph(5)})
    cfg = f"[data]\ninput = {src}\n[solvers]\nrepeats = 1\nlocal_search_iterations = 2\n"
    assert run(tmp_path, "label", config=cfg) == EXIT_OK
    d = read_dataset_csv(tmp_path / "out" / "dataset.csv")
    assert dict(zip(d.ids, d.labels.tolist())) == {"adv": 1, "k5": 0}


def test_label_timeout_is_excluded_and_logged(tmp_path, caplog):
    src = graph_dir(tmp_path, {"big": gnp_graph(150, 0.9, 1), "k3": complete_graph(3)})
    cfg = f"[data]\ninput = {src}\n[solvers]\nrepeats = 1\ntime_limit = 0.001\n"
    assert run(tmp_path, "label", config=cfg) == EXIT_OK
    assert read_dataset_csv(tmp_path / "out" / "dataset.csv").ids == ["k3"]
    _, diag = read_csv(tmp_path / "out" / "label_diagnostics.csv")
    assert diag[0][0] == "big" and "timed out" in diag[0][1]
    assert any("big" in rec.getMessage() for rec in caplog.records)


def test_label_all_unresolved_is_a_data_error(tmp_path):
    src = graph_dir(tmp_path, {"big": gnp_graph(150, 0.9, 1)})
    cfg = f"[data]\ninput = {src}\n[solvers]\nrepeats = 1\ntime_limit = 0.001\n"
    assert run(tmp_path, "label", config=cfg) == EXIT_DATA


def test_train_and_mine_need_data(tmp_path):
    assert run(tmp_path, "train") == EXIT_DATA  # no dataset yet
    out = tmp_path / "out"
    out.mkdir()
    rng = np.random.default_rng(0)
    single = Dataset(rng.random((20, 23)), np.zeros(20, int), [f"g{i}" for i in range(20)], FEATURE_NAMES)
    write_dataset_csv(out / "dataset.csv", single, "x")
    assert run(tmp_path, "train") == EXIT_DATA
    assert run(tmp_path, "mine") == EXIT_DATA
    assert run(tmp_path, "runtime") == EXIT_DATA  # no runtime columns
    assert run(tmp_path, "report") == EXIT_DATA


SMALL_TRAIN = """
[train]
selection_max_features = 2
grid_logistic = l2=1e-3
grid_linear-margin = l2=1e-3
grid_gradient-boosted-trees = n_trees=30; max_depth=2
"""


def test_train_mine_report_on_planted_corpus(tmp_path):
    assert run(tmp_path, "synthesize", "-n", "800", config=SMALL_TRAIN) == EXIT_OK
    assert run(tmp_path, "train", config=SMALL_TRAIN) == EXIT_OK
    models = json.loads((tmp_path / "out" / "models.json").read_text())
    assert set(models["families"]) == {"logistic", "linear-margin", "gradient-boosted-trees"}
    best = models["best_family"]
    assert models["families"][best]["cv"]["weighted_f1_mean"] == max(
        f["cv"]["weighted_f1_mean"] for f in models["families"].values())
    _, traj = read_csv(tmp_path / "out" / "trajectory.csv")
    assert [int(r[0]) for r in traj] == [1, 2]

    assert run(tmp_path, "mine", config=SMALL_TRAIN) == EXIT_OK
    header, rows = read_csv(tmp_path / "out" / "rules.csv")
    assert header == ["antecedent", "consequent", "support", "confidence", "lift",
                      "hard_coverage", "nothard_exclusion", "overall_accuracy"]
    acc = [float(r[-1]) for r in rows]
    assert acc == sorted(acc, reverse=True)
    assert all(float(r[4]) == 1.0 for r in rows)

    assert run(tmp_path, "report", config=SMALL_TRAIN) == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert set(report["stages"]) == {"train", "mine"}
    assert report["stages"]["mine"]["evaluation_corpus"] == "full"


def test_mine_full_support_threshold(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    write_dataset_csv(out / "dataset.csv", planted_rule_corpus(400, 1).dataset, "x")
    assert run(tmp_path, "mine", config="[arm]\nmin_support = 1.0\n") == EXIT_OK
    transactions = (out / "transactions.txt").read_text().splitlines()
    hard = [set(t.split(",")) for t in transactions if t.endswith("class:hard")]
    _, rows = read_csv(out / "rules.csv")
    for r in rows:
        terms = {t.replace("∈", ":") for t in r[0].split(";")}
        assert all(terms <= t for t in hard)


def _runtime_dataset(tmp_path, runtimes):
    out = tmp_path / "out"
    out.mkdir(exist_ok=True)
    rng = np.random.default_rng(0)
    X = rng.random((300, 23))
    d = Dataset(X, np.zeros(300, int), [f"g{i}" for i in range(300)], FEATURE_NAMES, runtimes(X))
    write_dataset_csv(out / "dataset.csv", d, "x")
    return out


def test_runtime_affine_target(tmp_path):
    out = _runtime_dataset(tmp_path, lambda X: {"exact_bnb": 3.0 * X[:, 0] + 1.0})
    assert run(tmp_path, "runtime", config="[runtime]\ngrid = n_trees=200; max_depth=3\n") == EXIT_OK
    rep = json.loads((out / "runtime.json").read_text())["solvers"]["exact_bnb"]
    assert rep["r2"] >= 0.99 and rep["target_space"] == "linear"
    assert rep["percentage_rmse_definition"] == "100 * rmse / mean(actual)"


def test_runtime_log_target_and_constant(tmp_path):
    out = _runtime_dataset(tmp_path, lambda X: {"exact_bnb": np.exp(X[:, 1]), "greedy": np.full(len(X), 0.5)})
    cfg = "[runtime]\nlog_target = true\ngrid = n_trees=20; max_depth=2\n"
    assert run(tmp_path, "runtime", config=cfg) == EXIT_OK
    rep = json.loads((out / "runtime.json").read_text())["solvers"]
    assert rep["exact_bnb"]["target_space"] == "log"
    assert rep["greedy"]["r2"] is None and rep["greedy"]["rmse"] == pytest.approx(0.0, abs=1e-12)


def test_runtime_log_target_rejects_nonpositive(tmp_path):
    _runtime_dataset(tmp_path, lambda X: {"exact_bnb": X[:, 0] - 0.5})
    assert run(tmp_path, "runtime", config="[runtime]\nlog_target = true\n") == EXIT_DATA


def test_jobs_do_not_change_outputs(tmp_path):
    src = graph_dir(tmp_path, {f"g{i}": gnp_graph(14, 0.5, i) for i in range(6)})
    cfg = f"[data]\ninput = {src}\n[solvers]\nruntime_measure = work\nrepeats = 1\n"
    (tmp_path / "c.ini").write_text(cfg)
    outs = []
    for jobs in ("1", "2"):
        out = tmp_path / f"out{jobs}"
        for stage in ("features", "label"):
            assert main([stage, "--config", str(tmp_path / "c.ini"), "--out", str(out), "--jobs", jobs]) == 0
        outs.append(out)
    for name in ("features.csv", "results.csv", "dataset.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_every_csv_carries_the_fingerprint(tmp_path):
    src = graph_dir(tmp_path, {"k4": complete_graph(4), "p5": path_graph(5)})
    assert run(tmp_path, "features", config=f"[data]\ninput = {src}\n[solvers]\nrepeats = 1\n") == 0
    assert run(tmp_path, "label", config=f"[data]\ninput = {src}\n[solvers]\nrepeats = 1\n") == 0
    csvs = sorted((tmp_path / "out").glob("*.csv"))
    assert len(csvs) == 5
    firsts = {p.read_text().splitlines()[0] for p in csvs}
    assert len(firsts) == 1 and next(iter(firsts)).startswith("# config-sha256=")


def test_seed_changes_fingerprint(tmp_path):
    src = graph_dir(tmp_path, {"k4": complete_graph(4)})
    lines = []
    for seed in ("0", "1"):
        out = tmp_path / f"o{seed}"
        (tmp_path / "c.ini").write_text(f"[data]\ninput = {src}\n")
        assert main(["features", "--config", str(tmp_path / "c.ini"), "--out", str(out), "--seed", seed]) == 0
        lines.append((out / "features.csv").read_text().splitlines()[0])
    assert lines[0] != lines[1]
