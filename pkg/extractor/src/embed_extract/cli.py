"""Command-line entry point: extract node features from a corpus file pair."""

from __future__ import annotations

import argparse
import logging
import sys

from .extract import DEFAULT_MODEL, ExtractionConfig, run_extraction


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description=(
            "Encode a corpus with a pretrained transformer and write a node "
            "feature file: one CLS row per document, one min-pooled row per "
            "vocabulary word."
        ),
    )
    parser.add_argument("--meta", required=True, help="meta file (doc_id<TAB>split<TAB>label)")
    parser.add_argument("--text", required=True, help="text file, one document per line")
    parser.add_argument("--model", default=DEFAULT_MODEL, help="model name or local path")
    parser.add_argument("--out", required=True, help="output feature-file path")
    parser.add_argument("--max-len", type=int, default=512, help="sequence budget incl. [CLS]/[SEP]")
    parser.add_argument(
        "--min-word-freq",
        type=int,
        default=None,
        help="vocabulary frequency cutoff (default: 5 when >= 5000 docs, else 1)",
    )
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = ExtractionConfig(
            meta_path=args.meta,
            text_path=args.text,
            output_path=args.out,
            model_name=args.model,
            max_seq_len=args.max_len,
            min_word_freq=args.min_word_freq,
        )
        manifest = run_extraction(config)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        "wrote %s (%d docs + %d words, dim %d); manifest at %s"
        % (
            args.out,
            manifest["n_documents"],
            manifest["n_words"],
            manifest["dim"],
            str(args.out) + ".manifest.json",
        )
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
