"""Command-line front end.

Verbs: ``build-graph``, ``train``, ``evaluate``, ``sweep``.  Every verb
takes ``--config <json>`` plus targeted overrides; ``sweep`` reads
comma-separated override values as sweep axes.  Exit codes: 0 success,
1 total failure, 2 partial cell failures in a sweep.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import numpy as np

from .features import load_embedding_file, onehot_features
from .gcn import load_checkpoint, predict
from .harness import (
    ExperimentConfig,
    Runtime,
    SweepSpec,
    emit_report,
    run_experiment,
    run_sweep,
)
from .metrics import evaluate
from .textgraph import normalized_adjacency

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--layers", help="GCN layer count override")
    parser.add_argument("--edges", help="edge config override (d2w, d2w+w2w, d2w+w2w+d2d)")
    parser.add_argument("--features", help="node feature override (onehot, dense_file)")
    parser.add_argument(
        "--train-fraction",
        help="labeled fraction override; 'full' keeps the dataset split",
    )
    parser.add_argument("--seed", type=int, help="base seed override")
    parser.add_argument("--output-dir", help="output directory override")
    parser.add_argument("-v", "--verbose", action="store_true")


def _parse_fraction(text: str):
    return "full" if text == "full" else float(text)


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    changes: dict = {}
    if args.layers is not None:
        changes["n_layers"] = int(args.layers)
    if args.edges is not None:
        changes["edge_config"] = args.edges
    if args.features is not None:
        changes["node_feature"] = args.features
    if args.train_fraction is not None:
        frac = _parse_fraction(args.train_fraction)
        if frac == "full":
            changes["environment"] = "full"
        else:
            changes["environment"] = "limited"
            changes["train_fraction"] = frac
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.output_dir is not None:
        changes["output_dir"] = args.output_dir
    return dataclasses.replace(config, **changes) if changes else config


def _load_config(args) -> ExperimentConfig:
    return _apply_overrides(ExperimentConfig.from_json_file(args.config), args)


def _cmd_build_graph(args) -> int:
    config = _load_config(args)
    runtime = Runtime()
    corpus = runtime.corpus(config)
    graph = runtime.graph(corpus, config)
    path = runtime.persist_graph(graph, config)
    print(path)
    return 0


def _cmd_train(args) -> int:
    config = _load_config(args)
    record = run_experiment(config)
    print(json.dumps(dataclasses.asdict(record), indent=2))
    return 0 if record.status == "ok" else 1


def _cmd_evaluate(args) -> int:
    config = _load_config(args)
    runtime = Runtime()
    corpus = runtime.corpus(config)
    graph = runtime.graph(corpus, config)
    a_hat = normalized_adjacency(graph)
    if config.node_feature == "onehot":
        x = onehot_features(graph)
    else:
        x = load_embedding_file(
            config.dense_feature_path, graph, config.dense_missing_as_zero
        )
    model = load_checkpoint(args.checkpoint)
    test_docs = corpus.doc_indices("test")
    if not test_docs:
        raise ValueError("corpus has no test-split documents")
    pred = predict(model, a_hat, x, test_docs)
    gold = np.array([corpus.documents[d].label for d in test_docs], dtype=np.int64)
    result = evaluate(pred, gold, corpus.n_labels)
    print(json.dumps(result.as_dict(), indent=2))
    return 0


def _split_values(text: str) -> tuple:
    values = tuple(v.strip() for v in text.split(",") if v.strip())
    if not values:
        raise ValueError(f"empty axis value list: {text!r}")
    return values


def _cmd_sweep(args) -> int:
    config = _load_config_base(args)
    spec = SweepSpec(
        node_feature=_split_values(args.features) if args.features else None,
        edge_config=_split_values(args.edges) if args.edges else None,
        n_layers=tuple(int(v) for v in _split_values(args.layers))
        if args.layers
        else None,
        train_fraction=tuple(
            _parse_fraction(v) for v in _split_values(args.train_fraction)
        )
        if args.train_fraction
        else None,
    )
    report = run_sweep(spec, config, jobs=args.jobs)
    for fmt in ("JSON", "CSV_PIVOT", "CSV_LONG"):
        for path in emit_report(report, fmt, config.output_dir):
            print(path)
    failed = report.n_failed()
    for record in report.records:
        if record.status != "ok":
            logger.warning(
                "cell %s repeat %d failed at %s: %s",
                record.cell,
                record.repeat,
                record.stage,
                record.error,
            )
    if failed == len(report.records):
        return 1
    return 2 if failed else 0


def _load_config_base(args) -> ExperimentConfig:
    """Sweep base config: scalar overrides apply only to seed/output_dir."""
    config = ExperimentConfig.from_json_file(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.output_dir is not None:
        changes["output_dir"] = args.output_dir
    return dataclasses.replace(config, **changes) if changes else config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corpusgcn",
        description="Corpus-level text-graph GCN: build graphs, train, sweep ablations.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("build-graph", help="build and persist the text graph")
    _add_common(p)
    p.set_defaults(fn=_cmd_build_graph)

    p = sub.add_parser("train", help="run one experiment end to end")
    _add_common(p)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a saved checkpoint on the test split")
    _add_common(p)
    p.add_argument("--checkpoint", required=True, help="model checkpoint file")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("sweep", help="run an ablation sweep (comma-separated axes)")
    _add_common(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel cells (default 1)")
    p.set_defaults(fn=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
