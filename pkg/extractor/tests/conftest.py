"""Fixtures: a tiny locally built transformer and corpus-file writers."""

from __future__ import annotations

import pytest

# Whole-word pieces plus split pieces: "john" -> jo + ##hn,
# "feels" -> fee + ##ls, "happy" -> hap + ##py.  "zebra" is absent
# everywhere so it wordpiece-fails to [UNK].
TINY_VOCAB = [
    "[PAD]",
    "[UNK]",
    "[CLS]",
    "[SEP]",
    "[MASK]",
    "football",
    "match",
    "goal",
    "stadium",
    "referee",
    "kernel",
    "compiler",
    "bug",
    "server",
    "hardware",
    "jo",
    "##hn",
    "fee",
    "##ls",
    "hap",
    "##py",
    "alpha",
    "beta",
    "gamma",
    "delta",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """One-layer 768-dim model + wordpiece tokenizer saved to a local dir."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    d = tmp_path_factory.mktemp("tinybert")
    vocab_file = d / "vocab.txt"
    vocab_file.write_text("\n".join(TINY_VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_file), do_lower_case=True)
    tokenizer.save_pretrained(str(d))

    torch.manual_seed(7)
    config = BertConfig(
        vocab_size=len(TINY_VOCAB),
        hidden_size=768,
        num_hidden_layers=1,
        num_attention_heads=8,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    BertModel(config).save_pretrained(str(d))
    return str(d)


@pytest.fixture(scope="session")
def tiny_encoder(tiny_model_dir):
    """(tokenizer, model) pair loaded once for the whole session."""
    from embed_extract import load_encoder

    return load_encoder(tiny_model_dir)


@pytest.fixture
def corpus_writer(tmp_path):
    """Writer for (doc_id, split, label, text) rows -> (meta_path, text_path)."""

    def _write(rows):
        meta = tmp_path / "meta.tsv"
        text = tmp_path / "text.txt"
        meta.write_text(
            "".join(f"{d}\t{s}\t{l}\n" for d, s, l, _ in rows), encoding="utf-8"
        )
        text.write_text("".join(f"{t}\n" for _, _, _, t in rows), encoding="utf-8")
        return str(meta), str(text)

    return _write
