"""Transformer-based node feature extraction for corpus graphs."""

from .corpus_text import CorpusFormatError, CorpusText, read_corpus, tokenize
from .extract import (
    DocEncoding,
    ExtractionConfig,
    ExtractionError,
    encode_documents,
    load_encoder,
    pool_word_embeddings,
    run_extraction,
    write_feature_file,
)

__all__ = [
    "CorpusFormatError",
    "CorpusText",
    "DocEncoding",
    "ExtractionConfig",
    "ExtractionError",
    "encode_documents",
    "load_encoder",
    "pool_word_embeddings",
    "read_corpus",
    "run_extraction",
    "tokenize",
    "write_feature_file",
]
