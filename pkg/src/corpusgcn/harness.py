"""Experiment runner and ablation sweep engine.

A single experiment is the full pipeline: load corpus, optionally
re-split it for the limited-label environment, build the text graph,
attach node features, train the GCN, predict on test documents, and
evaluate.  A sweep crosses value lists over four axes (node feature,
edge config, layer count, training fraction), repeats every cell with
derived seeds, and emits machine-readable reports.

Failures are contained per cell: an error in any pipeline stage is
recorded with the stage name and the sweep moves on.
"""

from __future__ import annotations

import dataclasses
import json
import os
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, PreprocConfig, load_corpus, sample_limited_split
from .features import FeatureMatrix, load_embedding_file, onehot_features
from .gcn import TrainConfig, predict, save_checkpoint, train
from .metrics import evaluate
from .textgraph import (
    EdgeConfig,
    TextGraph,
    build_graph,
    normalized_adjacency,
    write_graph,
)

NODE_FEATURE_KINDS = ("onehot", "dense_file")
ENVIRONMENTS = ("full", "limited")
SWEEP_AXES = ("node_feature", "edge_config", "n_layers", "train_fraction")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment cell; JSON config files mirror these field names."""

    meta_path: str = ""
    text_path: str = ""
    # preprocessing
    lowercase: bool = True
    clean_chars: bool = True
    remove_stopwords: bool = True
    min_word_freq: int | None = None
    # graph construction
    node_feature: str = "onehot"
    dense_feature_path: str | None = None
    dense_missing_as_zero: bool = False
    edge_config: str = "d2w+w2w+d2d"
    window_size: int = 20
    jaccard_threshold: float = 0.2
    # training
    n_layers: int = 2
    hidden_dim: int = 200
    learning_rate: float = 0.02
    dropout: float = 0.5
    l2_weight: float = 0.0
    max_epochs: int = 200
    patience: int = 10
    val_fraction: float = 0.1
    # environment
    environment: str = "full"
    train_fraction: float = 0.01
    split_seed: int | None = None
    stratified: bool = True
    # bookkeeping
    seed: int = 0
    n_repeats: int = 5
    output_dir: str = "runs"

    def __post_init__(self):
        if self.node_feature not in NODE_FEATURE_KINDS:
            raise ValueError(f"node_feature must be one of {NODE_FEATURE_KINDS}")
        if self.environment not in ENVIRONMENTS:
            raise ValueError(f"environment must be one of {ENVIRONMENTS}")
        if self.node_feature == "dense_file" and not self.dense_feature_path:
            raise ValueError("dense_file node features need dense_feature_path")
        EdgeConfig.parse(self.edge_config)
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def preproc(self) -> PreprocConfig:
        return PreprocConfig(
            lowercase=self.lowercase,
            clean_chars=self.clean_chars,
            remove_stopwords=self.remove_stopwords,
            min_word_freq=self.min_word_freq,
        )

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            n_layers=self.n_layers,
            hidden_dim=self.hidden_dim,
            learning_rate=self.learning_rate,
            dropout=self.dropout,
            l2_weight=self.l2_weight,
            max_epochs=self.max_epochs,
            patience=self.patience,
            val_fraction=self.val_fraction,
            seed=seed,
        )


@dataclass(frozen=True)
class SweepSpec:
    """Value lists per axis; None leaves the axis at the base config value."""

    node_feature: tuple | None = None
    edge_config: tuple | None = None
    n_layers: tuple | None = None
    train_fraction: tuple | None = None

    def __post_init__(self):
        for axis in SWEEP_AXES:
            values = getattr(self, axis)
            if values is not None and len(values) == 0:
                raise ValueError(f"sweep axis {axis} must not be empty")

    def axis_values(self, base: ExperimentConfig) -> dict[str, tuple]:
        out = {}
        for axis in SWEEP_AXES:
            values = getattr(self, axis)
            if values is None:
                if axis == "train_fraction":
                    base_value = (
                        base.train_fraction
                        if base.environment == "limited"
                        else "full"
                    )
                else:
                    base_value = getattr(base, axis)
                values = (base_value,)
            out[axis] = tuple(values)
        return out

    def cells(self, base: ExperimentConfig) -> list[dict]:
        """Cross product in fixed axis order."""
        values = self.axis_values(base)
        cells = [{}]
        for axis in SWEEP_AXES:
            cells = [dict(c, **{axis: v}) for c in cells for v in values[axis]]
        return cells


@dataclass
class ExperimentRecord:
    config: dict
    cell: dict
    repeat: int
    seed: int
    status: str  # "ok" | "error"
    metrics: dict | None = None
    stopping_epoch: int | None = None
    best_epoch: int | None = None
    wall_time_s: float = 0.0
    stage: str | None = None
    error: str | None = None

    def deterministic_view(self) -> dict:
        """Everything re-runnable: the record minus wall-clock time."""
        view = dataclasses.asdict(self)
        view.pop("wall_time_s")
        return view


@dataclass
class EvalReport:
    records: list[ExperimentRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"records": [dataclasses.asdict(r) for r in self.records]}

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls([ExperimentRecord(**r) for r in data["records"]])

    def n_failed(self) -> int:
        return sum(1 for r in self.records if r.status != "ok")


class _Stage(Exception):
    """Wraps a pipeline failure with the stage it occurred in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


class Runtime:
    """Per-process cache of corpora, graphs, and dense features.

    Graph structure depends only on the token streams, never on the
    train/test split, so limited-environment repeats and sweep cells can
    share one graph per (edge_config, window, jaccard) key.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._corpora: dict = {}
        self._graphs: dict = {}
        self._features: dict = {}
        self._persisted_graphs: dict = {}

    def corpus(self, config: ExperimentConfig) -> Corpus:
        key = (
            config.meta_path,
            config.text_path,
            config.lowercase,
            config.clean_chars,
            config.remove_stopwords,
            config.min_word_freq,
        )
        with self._lock:
            if key not in self._corpora:
                self._corpora[key] = load_corpus(
                    config.meta_path, config.text_path, config.preproc()
                )
            return self._corpora[key]

    def graph(self, corpus: Corpus, config: ExperimentConfig) -> TextGraph:
        key = (
            id(corpus),
            config.edge_config,
            config.window_size,
            config.jaccard_threshold,
        )
        with self._lock:
            if key not in self._graphs:
                self._graphs[key] = build_graph(
                    corpus,
                    EdgeConfig.parse(config.edge_config),
                    window_size=config.window_size,
                    jaccard_threshold=config.jaccard_threshold,
                )
            return self._graphs[key]

    def features(self, graph: TextGraph, config: ExperimentConfig) -> FeatureMatrix:
        if config.node_feature == "onehot":
            return onehot_features(graph)
        key = (id(graph), config.dense_feature_path, config.dense_missing_as_zero)
        with self._lock:
            if key not in self._features:
                self._features[key] = load_embedding_file(
                    config.dense_feature_path,
                    graph,
                    missing_as_zero=config.dense_missing_as_zero,
                )
            return self._features[key]

    def persist_graph(self, graph: TextGraph, config: ExperimentConfig) -> str:
        """Write the graph file once per structure key; returns its path."""
        slug = "graph_%s_w%d_j%g.txt" % (
            config.edge_config.replace("+", "-"),
            config.window_size,
            config.jaccard_threshold,
        )
        path = os.path.join(config.output_dir, "graphs", slug)
        with self._lock:
            if self._persisted_graphs.get(slug) is None:
                os.makedirs(os.path.dirname(path), exist_ok=True)
                write_graph(graph, path)
                self._persisted_graphs[slug] = path
            return self._persisted_graphs[slug]


def _limited_resplit(corpus: Corpus, config: ExperimentConfig, seed: int) -> Corpus:
    """Pool all documents and draw a fresh seeded train sample."""
    split_seed = config.split_seed if config.split_seed is not None else seed
    return sample_limited_split(
        corpus,
        config.train_fraction,
        seed=split_seed,
        stratified=config.stratified,
    )


def run_experiment(
    config: ExperimentConfig,
    runtime: Runtime | None = None,
    cell: dict | None = None,
    repeat: int = 0,
    record_dir: str | None = None,
) -> ExperimentRecord:
    """Run one pipeline end to end; every stage failure yields an error record.

    All randomness (limited re-split, validation carve-out, weight init,
    dropout) derives from ``config.seed``, so re-running the recorded
    config echo reproduces the metrics exactly.
    """
    if runtime is None:
        runtime = Runtime()
    if cell is None:
        cell = {
            "node_feature": config.node_feature,
            "edge_config": config.edge_config,
            "n_layers": config.n_layers,
            "train_fraction": config.train_fraction
            if config.environment == "limited"
            else "full",
        }
    if record_dir is None:
        record_dir = config.output_dir
    echo = dataclasses.asdict(config)
    started = time.perf_counter()

    def _record_error(exc: _Stage) -> ExperimentRecord:
        return ExperimentRecord(
            config=echo,
            cell=cell,
            repeat=repeat,
            seed=config.seed,
            status="error",
            wall_time_s=time.perf_counter() - started,
            stage=exc.stage,
            error=str(exc.cause),
        )

    try:
        record = _run_stages(config, runtime, cell, repeat, record_dir, echo, started)
    except _Stage as exc:
        return _record_error(exc)
    return record


def _staged(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:  # noqa: BLE001 - stage isolation is the contract
        raise _Stage(stage, exc) from exc


def _run_stages(config, runtime, cell, repeat, record_dir, echo, started):
    base_corpus = _staged("load", runtime.corpus, config)
    corpus = base_corpus
    if config.environment == "limited":
        corpus = _staged("resplit", _limited_resplit, base_corpus, config, config.seed)
    # Graph structure depends on tokens only, so build (or fetch) it from
    # the shared base corpus and attach the re-split one afterwards.
    graph = _staged("build_graph", runtime.graph, base_corpus, config)
    if corpus is not base_corpus:
        graph = dataclasses.replace(graph, corpus=corpus)
    a_hat = _staged("normalize", normalized_adjacency, graph)
    x = _staged("features", runtime.features, graph, config)
    model, history = _staged("train", train, graph, x, corpus, config.train_config(config.seed))
    test_docs = corpus.doc_indices("test")
    if not test_docs:
        raise _Stage("predict", ValueError("corpus has no test-split documents"))
    pred = _staged("predict", predict, model, a_hat, x, test_docs)
    gold = np.array([corpus.documents[d].label for d in test_docs], dtype=np.int64)
    result = _staged("evaluate", evaluate, pred, gold, corpus.n_labels)

    def _persist():
        os.makedirs(record_dir, exist_ok=True)
        graph_path = runtime.persist_graph(graph, config)
        ckpt_path = os.path.join(record_dir, "model.txt")
        save_checkpoint(model, ckpt_path)
        return graph_path, ckpt_path

    graph_path, ckpt_path = _staged("persist", _persist)
    metrics = result.as_dict()
    metrics["n_test"] = len(test_docs)
    metrics["n_train"] = len(corpus.doc_indices("train"))
    record = ExperimentRecord(
        config=echo,
        cell=cell,
        repeat=repeat,
        seed=config.seed,
        status="ok",
        metrics=metrics,
        stopping_epoch=history.stopping_epoch,
        best_epoch=history.best_epoch,
        wall_time_s=time.perf_counter() - started,
    )
    record_path = os.path.join(record_dir, "record.json")
    payload = dataclasses.asdict(record)
    payload["graph_path"] = graph_path
    payload["checkpoint_path"] = ckpt_path
    with open(record_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    return record


def _cell_config(base: ExperimentConfig, cell: dict, seed: int) -> ExperimentConfig:
    changes: dict = {
        "node_feature": cell["node_feature"],
        "edge_config": cell["edge_config"],
        "n_layers": cell["n_layers"],
        "seed": seed,
    }
    frac = cell["train_fraction"]
    if frac == "full":
        changes["environment"] = "full"
    else:
        changes["environment"] = "limited"
        changes["train_fraction"] = float(frac)
    return dataclasses.replace(base, **changes)


def _cell_slug(cell: dict) -> str:
    frac = cell["train_fraction"]
    frac_part = "full" if frac == "full" else ("%g" % float(frac))
    return "feat-%s_edges-%s_L%d_frac-%s" % (
        cell["node_feature"],
        cell["edge_config"].replace("+", "-"),
        cell["n_layers"],
        frac_part,
    )


def run_sweep(
    spec: SweepSpec, base: ExperimentConfig, jobs: int = 1
) -> EvalReport:
    """Run every cell of the cross product, ``n_repeats`` times each.

    Repeat r of any cell runs with seed ``base.seed + r``.  Cell failures
    are recorded and do not stop the sweep; the report order is the fixed
    cross-product order regardless of execution interleaving.
    """
    runtime = Runtime()
    cells = spec.cells(base)
    tasks = []
    for cell in cells:
        for r in range(base.n_repeats):
            record_dir = os.path.join(
                base.output_dir, _cell_slug(cell), "rep%d" % r
            )
            # An invalid cell config fails that cell, not the sweep.
            try:
                config = _cell_config(base, cell, base.seed + r)
            except (TypeError, ValueError) as exc:
                config = exc
            tasks.append((config, cell, r, record_dir))

    def _run(task):
        config, cell, r, record_dir = task
        if isinstance(config, Exception):
            return ExperimentRecord(
                config=dataclasses.asdict(base),
                cell=cell,
                repeat=r,
                seed=base.seed + r,
                status="error",
                stage="config",
                error=str(config),
            )
        return run_experiment(
            config, runtime=runtime, cell=cell, repeat=r, record_dir=record_dir
        )

    if jobs <= 1:
        records = [_run(t) for t in tasks]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run, tasks))
    return EvalReport(records)


# --- report emission ----------------------------------------------------------


def _varying_axes(report: EvalReport) -> list[str]:
    axes = []
    for axis in SWEEP_AXES:
        values = {str(r.cell[axis]) for r in report.records}
        if len(values) > 1:
            axes.append(axis)
    return axes


def _axis_order(report: EvalReport, axis: str) -> list:
    seen = []
    for r in report.records:
        v = r.cell[axis]
        if v not in seen:
            seen.append(v)
    return seen


def _cell_accuracy(report: EvalReport, fixed: dict) -> tuple[float, float]:
    vals = [
        r.metrics["accuracy"]
        for r in report.records
        if r.status == "ok" and all(r.cell[k] == v for k, v in fixed.items())
    ]
    if not vals:
        return float("nan"), float("nan")
    arr = np.array(vals)
    return float(arr.mean()), float(arr.std())


def emit_report(report: EvalReport, fmt: str, output_dir: str) -> list[str]:
    """Write report files; returns the paths written.

    JSON keeps full precision; pivot tables show accuracy as
    ``mean ± std`` at 4 decimals with rows/columns in first-seen order;
    long-format curve files carry one row per record.
    """
    if not report.records:
        raise ValueError("cannot emit an empty report")
    fmt = fmt.upper()
    os.makedirs(output_dir, exist_ok=True)
    written = []

    if fmt == "JSON":
        path = os.path.join(output_dir, "report.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
        written.append(path)
        return written

    varying = _varying_axes(report)
    if fmt == "CSV_PIVOT":
        if len(varying) >= 2:
            row_axis, col_axis = varying[0], varying[1]
        elif len(varying) == 1:
            row_axis, col_axis = varying[0], None
        else:
            row_axis, col_axis = "edge_config", None
        rows = _axis_order(report, row_axis)
        cols = _axis_order(report, col_axis) if col_axis else [None]
        name = (
            f"table_{row_axis}_{col_axis}.csv" if col_axis else f"table_{row_axis}.csv"
        )
        path = os.path.join(output_dir, name)
        header = [row_axis] + (
            [str(c) for c in cols] if col_axis else ["accuracy"]
        )
        lines = [",".join(header)]
        for rv in rows:
            cells = [str(rv)]
            for cv in cols:
                fixed = {row_axis: rv}
                if col_axis:
                    fixed[col_axis] = cv
                mean, std = _cell_accuracy(report, fixed)
                cells.append(
                    "nan" if mean != mean else "%.4f ± %.4f" % (mean, std)
                )
            lines.append(",".join(cells))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        written.append(path)
        return written

    if fmt == "CSV_LONG":
        axes = varying if varying else [SWEEP_AXES[1]]
        metric_cols = ["accuracy", "macro_f1", "weighted_f1"]
        for axis in axes:
            path = os.path.join(output_dir, f"curve_{axis}.csv")
            header = (
                list(SWEEP_AXES)
                + ["repeat", "seed", "status", "stage"]
                + metric_cols
                + ["stopping_epoch", "wall_time_s"]
            )
            lines = [",".join(header)]
            for r in report.records:
                row = [str(r.cell[a]) for a in SWEEP_AXES]
                row += [str(r.repeat), str(r.seed), r.status, r.stage or ""]
                if r.status == "ok":
                    row += ["%.10g" % r.metrics[m] for m in metric_cols]
                    row += [str(r.stopping_epoch)]
                else:
                    row += ["", "", "", ""]
                row.append("%.3f" % r.wall_time_s)
                lines.append(",".join(row))
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")
            written.append(path)
        return written

    raise ValueError(f"unknown report format {fmt!r}")
