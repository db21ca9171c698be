"""Corpus reading with the same defaults as the graph-building consumer.

The feature file produced here is keyed by node (``doc:<doc_id>`` and
``word:<word>``), so tokenization and vocabulary construction must agree
with the loader that later maps rows onto graph nodes.  This module
re-states those defaults: lowercasing, replacement of every character
outside letters/digits/apostrophe with a space, whitespace splitting,
stopword removal, and a frequency cutoff of 5 for corpora with at least
5000 documents (1 otherwise), with the vocabulary in first-occurrence
order over surviving words.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

SPLITS = ("train", "test")

# Standard English stopword list (the classic NLTK set).
ENGLISH_STOPWORDS = frozenset(
    """i me my myself we our ours ourselves you you're you've you'll you'd
    your yours yourself yourselves he him his himself she she's her hers
    herself it it's its itself they them their theirs themselves what which
    who whom this that that'll these those am is are was were be been being
    have has had having do does did doing a an the and but if or because as
    until while of at by for with about against between into through during
    before after above below to from up down in out on off over under again
    further then once here there when where why how all any both each few
    more most other some such no nor not only own same so than too very s t
    can will just don don't should should've now d ll m o re ve y ain aren
    aren't couldn couldn't didn didn't doesn doesn't hadn hadn't hasn hasn't
    haven haven't isn isn't ma mightn mightn't mustn mustn't needn needn't
    shan shan't shouldn shouldn't wasn wasn't weren weren't won won't wouldn
    wouldn't""".split()
)

_NON_WORD = re.compile(r"(?:[^\w']|_)+")


class CorpusFormatError(Exception):
    """Raised when corpus files are malformed or inconsistent."""


def tokenize(text: str) -> list[str]:
    """Lowercase, strip non-word characters, split, drop stopwords."""
    text = text.lower()
    text = _NON_WORD.sub(" ", text)
    return [w for w in text.split() if w not in ENGLISH_STOPWORDS]


def resolve_min_freq(n_docs: int) -> int:
    return 5 if n_docs >= 5000 else 1


@dataclass(frozen=True)
class CorpusText:
    """Documents as surviving word sequences plus the vocabulary.

    ``doc_words[d]`` holds document d's words after tokenization and the
    frequency cutoff, in text order; ``vocabulary`` lists distinct words
    in first-occurrence order.  Node keys derive from both: documents in
    file order, then vocabulary words.
    """

    doc_ids: tuple[str, ...]
    doc_words: tuple[tuple[str, ...], ...]
    vocabulary: tuple[str, ...]

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    def node_keys(self) -> list[str]:
        keys = [f"doc:{doc_id}" for doc_id in self.doc_ids]
        keys.extend(f"word:{w}" for w in self.vocabulary)
        return keys


def read_corpus(meta_path, text_path, min_word_freq: int | None = None) -> CorpusText:
    """Read the meta/text file pair into word sequences and a vocabulary.

    The meta file carries one ``doc_id<TAB>split<TAB>label`` line per
    document; the text file one raw document per line in the same order.
    ``min_word_freq=None`` resolves to the document-count based default.
    """
    with open(meta_path, encoding="utf-8") as fh:
        meta_lines = fh.read().splitlines()
    with open(text_path, encoding="utf-8") as fh:
        text_lines = fh.read().splitlines()
    if len(meta_lines) != len(text_lines):
        raise CorpusFormatError(
            f"meta file has {len(meta_lines)} lines but text file has {len(text_lines)}"
        )

    doc_ids: list[str] = []
    for ln, line in enumerate(meta_lines, start=1):
        parts = line.split("\t")
        if len(parts) != 3:
            raise CorpusFormatError(
                f"meta line {ln}: expected doc_id<TAB>split<TAB>label"
            )
        doc_id, split, _label = parts
        if split not in SPLITS:
            raise CorpusFormatError(f"meta line {ln}: unknown split {split!r}")
        doc_ids.append(doc_id)
    if len(set(doc_ids)) != len(doc_ids):
        raise CorpusFormatError("duplicate doc_id in meta file")

    token_lists = [tokenize(text) for text in text_lines]
    min_freq = (
        min_word_freq if min_word_freq is not None else resolve_min_freq(len(token_lists))
    )
    freq = Counter(w for words in token_lists for w in words)

    vocab_words: list[str] = []
    seen: set[str] = set()
    for words in token_lists:
        for w in words:
            if w not in seen and freq[w] >= min_freq:
                seen.add(w)
                vocab_words.append(w)

    doc_words = tuple(
        tuple(w for w in words if freq[w] >= min_freq) for words in token_lists
    )
    return CorpusText(tuple(doc_ids), doc_words, tuple(vocab_words))
