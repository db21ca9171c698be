"""Acceptance gate: one test per top-level criterion, each printing a verdict.

Every test emits a single ``[ACCEPTANCE] PASS/FAIL/SKIP`` line on the real
stdout so the verdicts survive pytest's capture and appear in piped logs.
Dataset-scale criteria skip, with the reason printed, when the public
datasets are not present under ``data/<name>/``.
"""

from __future__ import annotations

import pathlib
import sys
import time

import numpy as np
import pytest

from oracles import (
    fd_gradients,
    gradient_rel_error,
    make_corpus,
    pmi_oracle,
    power_iteration_bound,
    random_corpus,
    random_gradient_instance,
)
from corpusgcn import (
    CooMatrix,
    EdgeConfig,
    TrainConfig,
    build_graph,
    evaluate,
    normalized_adjacency,
    sym_normalize,
)
from corpusgcn.features import onehot_features
from corpusgcn.gcn import backward, forward, predict, train
from corpusgcn.harness import ExperimentConfig, SweepSpec, run_experiment, run_sweep
from corpusgcn.sparse import spmm
from corpusgcn.textgraph import count_windows, pmi_edges

DATA_DIR = pathlib.Path(__file__).resolve().parent.parent / "data"

_capture_manager = None


@pytest.fixture(autouse=True)
def _verdicts_reach_terminal(request):
    # verdict lines must survive output capture and show up in piped logs
    global _capture_manager
    _capture_manager = request.config.pluginmanager.getplugin("capturemanager")
    yield


def _say(line: str) -> None:
    if _capture_manager is not None:
        with _capture_manager.global_and_fixture_disabled():
            print(line, flush=True)
    else:
        print(line, file=sys.__stdout__, flush=True)


def _verdict(name: str, check) -> None:
    try:
        detail = check()
    except pytest.skip.Exception as exc:
        _say(f"[ACCEPTANCE] SKIP {name}: {exc}")
        raise
    except BaseException:
        _say(f"[ACCEPTANCE] FAIL {name}")
        raise
    suffix = f" ({detail})" if detail else ""
    _say(f"[ACCEPTANCE] PASS {name}{suffix}")


def _dataset(name: str):
    meta = DATA_DIR / name / "meta.tsv"
    text = DATA_DIR / name / "text.txt"
    if not (meta.is_file() and text.is_file()):
        pytest.skip(
            f"dataset not present: expected {meta} and {text}"
        )
    return str(meta), str(text)


def _dataset_config(name: str, **overrides) -> ExperimentConfig:
    meta, text = _dataset(name)
    defaults = dict(
        meta_path=meta,
        text_path=text,
        output_dir=str(DATA_DIR.parent / "runs" / f"acceptance_{name}"),
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


def _separable_corpus():
    docs = [[0, 1, 2, i % 2] for i in range(5)]
    docs += [[3, 4, 5, 3 + i % 2] for i in range(5)]
    return make_corpus(docs, labels=[0] * 5 + [1] * 5)


class TestOracleEquivalence:
    def test_pmi_matches_brute_force_windows(self):
        def check():
            rng = np.random.default_rng(1234)
            started = time.perf_counter()
            windows = (2, 3, 20)
            for trial in range(200):
                corpus = random_corpus(rng)
                window = windows[trial % len(windows)]
                got = {
                    (i, j): w for i, j, w in pmi_edges(count_windows(corpus, window))
                }
                want = {(i, j): w for i, j, w in pmi_oracle(corpus, window)}
                assert set(got) == set(want)
                for pair, weight in want.items():
                    assert abs(got[pair] - weight) <= 1e-12
            elapsed = time.perf_counter() - started
            assert elapsed < 10.0
            return f"200 corpora in {elapsed:.2f}s"

        _verdict("PMI brute-force oracle equivalence", check)

    def test_gradients_match_finite_differences(self):
        def check():
            rng = np.random.default_rng(99)
            started = time.perf_counter()
            worst = 0.0
            for _ in range(50):
                model, a_hat, x, labels, mask = random_gradient_instance(rng)
                cache, z = forward(model, a_hat, x)
                analytic = backward(model, a_hat, cache, z, labels, mask)
                numeric = fd_gradients(model, a_hat, x, labels, mask)
                worst = max(worst, gradient_rel_error(analytic, numeric))
                assert worst < 1e-5
            elapsed = time.perf_counter() - started
            assert elapsed < 30.0
            return f"50 configs, worst rel err {worst:.2e}, {elapsed:.2f}s"

        _verdict("gradient finite-difference check", check)

    def test_normalization_properties(self):
        def check():
            rng = np.random.default_rng(7)
            for _ in range(100):
                n = int(rng.integers(1, 13))
                upper = np.triu(rng.random((n, n)) < 0.4, 1)
                weights = rng.uniform(0.1, 3.0, (n, n))
                dense = upper * weights
                dense = dense + dense.T
                triples = [
                    (i, j, float(dense[i, j]))
                    for i in range(n)
                    for j in range(n)
                    if dense[i, j] != 0.0
                ]
                a_hat = sym_normalize(CooMatrix.from_triples(n, n, triples))
                full = spmm(a_hat, np.eye(n))
                assert np.max(np.abs(full - full.T)) < 1e-12
                assert full.min() >= 0.0 and full.max() <= 1.0
                assert power_iteration_bound(full) <= 1.0 + 1e-9
            return "100 graphs"

        _verdict("adjacency normalization properties", check)

    def test_edge_set_monotonicity(self):
        def check():
            rng = np.random.default_rng(55)
            for _ in range(25):
                corpus = random_corpus(rng)
                coords = {}
                for config in EdgeConfig:
                    graph = build_graph(corpus, config, window_size=3)
                    coords[config] = {
                        (i, j) for i, j, _ in graph.adjacency.triples()
                    }
                assert coords[EdgeConfig.D2W_ONLY] <= coords[EdgeConfig.D2W_W2W]
                assert coords[EdgeConfig.D2W_W2W] <= coords[EdgeConfig.D2W_W2W_D2D]
            return "25 corpora"

        _verdict("edge-set monotonicity", check)


class TestModelCapacity:
    def test_overfits_separable_toy_corpus(self):
        def check():
            corpus = _separable_corpus()
            graph = build_graph(corpus, EdgeConfig.D2W_W2W)
            x = onehot_features(graph)
            model, history = train(
                graph, x, corpus, TrainConfig(n_layers=2, seed=0)
            )
            train_docs = corpus.doc_indices("train")
            pred = predict(model, normalized_adjacency(graph), x, train_docs)
            gold = np.array([corpus.documents[d].label for d in train_docs])
            accuracy = evaluate(pred, gold, corpus.n_labels).accuracy
            assert accuracy == 1.0
            assert history.stopping_epoch <= 200
            return f"accuracy 1.0 at epoch {history.stopping_epoch}"

        _verdict("overfit capacity on separable toy corpus", check)

    def test_determinism_of_report_records(self, toy_files, tmp_path):
        def check():
            meta, text = toy_files
            base = ExperimentConfig(
                meta_path=meta,
                text_path=text,
                hidden_dim=8,
                max_epochs=30,
                n_repeats=2,
                output_dir=str(tmp_path / "det"),
            )
            spec = SweepSpec(edge_config=["d2w", "d2w+w2w"])
            first = run_sweep(spec, base)
            second = run_sweep(spec, base)
            views_a = [r.deterministic_view() for r in first.records]
            views_b = [r.deterministic_view() for r in second.records]
            assert views_a == views_b
            assert all(r.status == "ok" for r in first.records)
            return f"{len(views_a)} records bit-identical"

        _verdict("determinism of report records", check)


class TestDatasetReproduction:
    def test_r8_word_word_accuracy(self):
        def check():
            accuracies = []
            for seed in range(5):
                config = _dataset_config(
                    "r8", edge_config="d2w+w2w", n_layers=2, seed=seed
                )
                record = run_experiment(config)
                assert record.status == "ok", record.error
                accuracies.append(record.metrics["accuracy"])
            mean = float(np.mean(accuracies))
            assert abs(mean - 0.9693) <= 0.010
            return f"mean accuracy {mean:.4f} over 5 seeds"

        _verdict("R8 word-word edges accuracy 0.9693 +/- 0.010", check)

    def test_mr_full_graph_accuracy(self):
        def check():
            accuracies = []
            for seed in range(5):
                config = _dataset_config(
                    "mr", edge_config="d2w+w2w+d2d", n_layers=2, seed=seed
                )
                record = run_experiment(config)
                assert record.status == "ok", record.error
                accuracies.append(record.metrics["accuracy"])
            mean = float(np.mean(accuracies))
            assert abs(mean - 0.7641) <= 0.015
            return f"mean accuracy {mean:.4f} over 5 seeds"

        _verdict("MR full graph accuracy 0.7641 +/- 0.015", check)

    def test_word_word_edges_beat_doc_word_only(self):
        def check():
            margins = []
            for name in ("r8", "mr"):
                for seed in range(5):
                    base = _dataset_config(name, seed=seed)
                    d2w = run_experiment(
                        ExperimentConfig.from_dict(
                            {**_asdict(base), "edge_config": "d2w"}
                        )
                    )
                    w2w = run_experiment(
                        ExperimentConfig.from_dict(
                            {**_asdict(base), "edge_config": "d2w+w2w"}
                        )
                    )
                    assert d2w.status == "ok" and w2w.status == "ok"
                    assert (
                        d2w.metrics["accuracy"] < w2w.metrics["accuracy"]
                    ), f"{name} seed {seed}"
                    margins.append(
                        w2w.metrics["accuracy"] - d2w.metrics["accuracy"]
                    )
            return f"margin min {min(margins):.4f}"

        _verdict("d2w-only graphs rank lowest on R8 and MR", check)

    def test_r8_layer_sweep_peaks_at_two(self):
        def check():
            base = _dataset_config("r8", n_repeats=1)
            report = run_sweep(SweepSpec(n_layers=[1, 2, 3, 4, 5]), base)
            assert all(r.status == "ok" for r in report.records)
            by_layers = {
                r.cell["n_layers"]: r.metrics["accuracy"] for r in report.records
            }
            best = max(by_layers, key=by_layers.get)
            assert best == 2, by_layers
            return f"layer accuracies {by_layers}"

        _verdict("R8 layer sweep peaks at 2 layers", check)

    def test_mr_limited_one_percent(self):
        def check():
            config = _dataset_config(
                "mr",
                environment="limited",
                train_fraction=0.01,
                edge_config="d2w+w2w+d2d",
                seed=0,
            )
            record = run_experiment(config)
            assert record.status == "ok", record.error
            for key in ("accuracy", "macro_f1", "weighted_f1"):
                assert 0.0 <= record.metrics[key] <= 1.0
            assert abs(record.metrics["accuracy"] - 0.6178) <= 0.05
            return f"accuracy {record.metrics['accuracy']:.4f}"

        _verdict("MR limited 1% accuracy 0.6178 +/- 0.05", check)


def _asdict(config: ExperimentConfig) -> dict:
    import dataclasses

    return dataclasses.asdict(config)
