"""Shared fixtures for the test suite; helpers live in oracles.py."""

from __future__ import annotations

import pytest

from corpusgcn import PreprocConfig, load_corpus

from oracles import write_corpus_files


@pytest.fixture
def toy_files(tmp_path):
    """10-doc, 2-class linearly separable corpus on disk."""
    rows = []
    for i in range(10):
        label = "sport" if i < 5 else "tech"
        split = "train" if i % 5 < 3 else "test"
        if label == "sport":
            text = f"football match goal stadium striker{i % 3} referee"
        else:
            text = f"compiler kernel software hardware bug{i % 3} server"
        rows.append((f"doc{i}", split, label, text))
    return write_corpus_files(tmp_path, rows)


@pytest.fixture
def toy_corpus(toy_files):
    meta, text = toy_files
    return load_corpus(meta, text, PreprocConfig())
