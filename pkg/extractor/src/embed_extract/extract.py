"""Transformer node features: CLS vectors per document, min-pooled vectors per word.

Each document is assembled as ``[CLS] pieces(w1) pieces(w2) ... [SEP]``
from its surviving corpus words, so every span of hidden states aligns
exactly with a known word.  One occurrence of a word contributes the
mean of its subword-piece states; the word's final vector is the
element-wise minimum over all its occurrence vectors across the corpus.
Documents longer than the sequence budget are truncated at a whole-word
boundary and counted; words whose every occurrence falls beyond the
budget receive zero vectors and a manifest entry.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .corpus_text import CorpusText, read_corpus

logger = logging.getLogger(__name__)

DEFAULT_MODEL = "bert-base-uncased"


class ExtractionError(Exception):
    """Raised on model-loading failures and feature-assembly violations."""


@dataclass(frozen=True)
class ExtractionConfig:
    meta_path: str
    text_path: str
    output_path: str
    model_name: str = DEFAULT_MODEL
    max_seq_len: int = 512
    min_word_freq: int | None = None

    def __post_init__(self):
        if self.max_seq_len < 3:
            raise ValueError("max_seq_len must leave room for [CLS] and [SEP]")


@dataclass(frozen=True)
class DocEncoding:
    """One document's vectors: the CLS state plus per-occurrence word vectors."""

    doc_id: str
    cls_vector: np.ndarray
    occurrences: tuple[tuple[str, np.ndarray], ...]
    truncated: bool


def load_encoder(model_name: str):
    """Load tokenizer and model (eval mode) from a hub name or local path."""
    import torch
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(model_name)
        model = AutoModel.from_pretrained(model_name)
    except Exception as exc:
        raise ExtractionError(f"cannot load model {model_name!r}: {exc}") from exc
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    del torch
    return tokenizer, model


def encode_documents(
    corpus: CorpusText, tokenizer, model, max_seq_len: int = 512
) -> Iterator[DocEncoding]:
    """Encode every document, yielding CLS and word-occurrence vectors.

    Documents are processed one sequence at a time with no padding, so a
    repeated document yields bitwise-identical vectors.  A word is kept
    only when all its subword pieces fit the budget; the first word that
    overflows truncates the document there.
    """
    import torch

    budget = max_seq_len
    positions = getattr(model.config, "max_position_embeddings", None)
    if positions is not None:
        budget = min(budget, int(positions))
    body_limit = budget - 2

    piece_cache: dict[str, list[int]] = {}

    def pieces_of(word: str) -> list[int]:
        ids = piece_cache.get(word)
        if ids is None:
            ids = tokenizer.convert_tokens_to_ids(tokenizer.tokenize(word))
            piece_cache[word] = ids
        return ids

    cls_id = tokenizer.cls_token_id
    sep_id = tokenizer.sep_token_id

    for doc_id, words in zip(corpus.doc_ids, corpus.doc_words):
        ids = [cls_id]
        spans: list[tuple[str, int, int]] = []
        truncated = False
        for word in words:
            piece_ids = pieces_of(word)
            if not piece_ids:
                continue
            if len(ids) - 1 + len(piece_ids) > body_limit:
                truncated = True
                break
            spans.append((word, len(ids), len(ids) + len(piece_ids)))
            ids.extend(piece_ids)
        ids.append(sep_id)

        with torch.no_grad():
            out = model(input_ids=torch.tensor([ids], dtype=torch.long))
        hidden = out.last_hidden_state[0].cpu().numpy().astype(np.float64)

        occurrences = tuple(
            (word, hidden[lo:hi].mean(axis=0)) for word, lo, hi in spans
        )
        yield DocEncoding(doc_id, hidden[0], occurrences, truncated)


def pool_word_embeddings(occurrences) -> np.ndarray:
    """Element-wise minimum across a word's occurrence vectors."""
    vectors = [np.asarray(v, dtype=np.float64) for v in occurrences]
    if not vectors:
        raise ValueError("pooling requires at least one occurrence vector")
    return np.minimum.reduce(np.stack(vectors))


def write_feature_file(
    doc_vectors: Mapping[str, np.ndarray],
    word_vectors: Mapping[str, np.ndarray],
    keys: Sequence[str],
    dim: int,
    path,
    zero_fallback: frozenset[str] = frozenset(),
) -> None:
    """Write the node feature file: ``FEAT n dim`` then one keyed row per node.

    ``keys`` fixes the row order (``doc:<doc_id>`` / ``word:<word>``).  A
    key without a vector is an error unless listed in ``zero_fallback``,
    in which case a zero row is written.
    """
    if len(set(keys)) != len(keys):
        raise ExtractionError("duplicate node key in feature-file layout")
    zero_row = np.zeros(dim)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"FEAT {len(keys)} {dim}\n")
        for key in keys:
            prefix, _, name = key.partition(":")
            if prefix == "doc":
                vec = doc_vectors.get(name)
            elif prefix == "word":
                vec = word_vectors.get(name)
            else:
                raise ExtractionError(f"unrecognized node key {key!r}")
            if vec is None:
                if key not in zero_fallback:
                    raise ExtractionError(f"no vector for node key {key!r}")
                vec = zero_row
            if len(vec) != dim:
                raise ExtractionError(
                    f"row {key!r} has dim {len(vec)}, expected {dim}"
                )
            fh.write(key + "\t" + " ".join("%.17g" % v for v in vec) + "\n")


def run_extraction(config: ExtractionConfig) -> dict:
    """Full pipeline: read corpus, encode, pool, write file and manifest.

    Returns the manifest, which is also written next to the feature file
    as ``<output>.manifest.json`` and records truncated documents and
    words with no in-window occurrence (their rows are zero vectors).
    """
    corpus = read_corpus(config.meta_path, config.text_path, config.min_word_freq)
    tokenizer, model = load_encoder(config.model_name)
    dim = int(model.config.hidden_size)

    doc_vectors: dict[str, np.ndarray] = {}
    pooled: dict[str, np.ndarray] = {}
    truncated_docs: list[str] = []
    for enc in encode_documents(corpus, tokenizer, model, config.max_seq_len):
        doc_vectors[enc.doc_id] = enc.cls_vector
        for word, vec in enc.occurrences:
            prev = pooled.get(word)
            pooled[word] = vec if prev is None else np.minimum(prev, vec)
        if enc.truncated:
            truncated_docs.append(enc.doc_id)

    missing = [w for w in corpus.vocabulary if w not in pooled]
    if truncated_docs:
        logger.warning(
            "%d of %d document(s) truncated to %d tokens",
            len(truncated_docs),
            corpus.n_docs,
            config.max_seq_len,
        )
    if missing:
        logger.warning(
            "%d word(s) have no occurrence inside the window; zero rows written",
            len(missing),
        )

    write_feature_file(
        doc_vectors,
        pooled,
        corpus.node_keys(),
        dim,
        config.output_path,
        zero_fallback=frozenset(f"word:{w}" for w in missing),
    )

    manifest = {
        "model": config.model_name,
        "dim": dim,
        "n_documents": corpus.n_docs,
        "n_words": corpus.vocab_size,
        "max_seq_len": config.max_seq_len,
        "truncated_documents": truncated_docs,
        "missing_words": missing,
    }
    with open(str(config.output_path) + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest
