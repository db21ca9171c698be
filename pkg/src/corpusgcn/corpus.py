"""Corpus loading, tokenization, vocabulary, and split sampling.

A corpus arrives as two parallel files: a meta file with one
``doc_id<TAB>split<TAB>label`` line per document and a text file with one
raw document per line in the same order.  Documents are tokenized, a
vocabulary is built over words meeting the frequency cutoff, and the
document order fixes graph node indices 0..D-1.
"""

from __future__ import annotations

import logging
import math
import random
import re
from collections import Counter
from dataclasses import dataclass, field, replace

logger = logging.getLogger(__name__)

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


class CorpusError(Exception):
    """Raised when corpus files are malformed or inconsistent."""


# Anything that is not a Unicode letter/digit or an apostrophe becomes a
# space (underscore counts as punctuation here, not as a word character).
_NON_WORD = re.compile(r"(?:[^\w']|_)+")


@dataclass(frozen=True)
class PreprocConfig:
    """Tokenizer and vocabulary knobs.

    ``min_word_freq=None`` resolves at load time to 5 for corpora with at
    least 5000 documents and 1 otherwise.
    """

    lowercase: bool = True
    clean_chars: bool = True
    remove_stopwords: bool = True
    stopwords: frozenset[str] = ENGLISH_STOPWORDS
    min_word_freq: int | None = None

    def resolve_min_freq(self, n_docs: int) -> int:
        if self.min_word_freq is not None:
            return self.min_word_freq
        return 5 if n_docs >= 5000 else 1


@dataclass(frozen=True)
class Vocabulary:
    """Bijective word <-> contiguous index mapping."""

    index_to_word: tuple[str, ...]
    word_to_index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mapping = {w: i for i, w in enumerate(self.index_to_word)}
        if len(mapping) != len(self.index_to_word):
            raise CorpusError("vocabulary contains duplicate words")
        object.__setattr__(self, "word_to_index", mapping)

    def __len__(self) -> int:
        return len(self.index_to_word)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_index


@dataclass(frozen=True)
class TokenizedDocument:
    doc_id: str
    tokens: tuple[int, ...]
    label: int
    split: str


@dataclass(frozen=True)
class Corpus:
    """Tokenized documents plus vocabulary and label set.

    Document order is fixed and defines graph node indices 0..D-1; word m
    maps to node D + m.
    """

    documents: tuple[TokenizedDocument, ...]
    vocabulary: Vocabulary
    labels: tuple[str, ...]

    @property
    def n_docs(self) -> int:
        return len(self.documents)

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    def doc_indices(self, split: str) -> list[int]:
        return [i for i, d in enumerate(self.documents) if d.split == split]


def tokenize(text: str, preproc: PreprocConfig = PreprocConfig()) -> list[str]:
    """Split raw text into word tokens.

    Applies, in order: lowercasing, replacement of every character outside
    letters/digits/apostrophe with a space, whitespace splitting, and
    stopword removal.  Each step is gated by its config flag.
    """
    if preproc.lowercase:
        text = text.lower()
    if preproc.clean_chars:
        text = _NON_WORD.sub(" ", text)
    words = text.split()
    if preproc.remove_stopwords:
        words = [w for w in words if w not in preproc.stopwords]
    return words


def load_corpus(meta_path, text_path, preproc: PreprocConfig = PreprocConfig()) -> Corpus:
    """Load and tokenize a corpus from its meta/text file pair.

    Words below the resolved frequency cutoff are dropped from both the
    vocabulary and the token sequences.  Documents left without tokens are
    retained as zero-token nodes (a warning is logged) so node indexing
    stays aligned with the input files.
    """
    with open(meta_path, encoding="utf-8") as fh:
        meta_lines = fh.read().splitlines()
    with open(text_path, encoding="utf-8") as fh:
        text_lines = fh.read().splitlines()
    if len(meta_lines) != len(text_lines):
        raise CorpusError(
            f"meta file has {len(meta_lines)} lines but text file has {len(text_lines)}"
        )

    doc_ids: list[str] = []
    splits: list[str] = []
    label_names: list[str] = []
    for ln, line in enumerate(meta_lines, start=1):
        parts = line.split("\t")
        if len(parts) != 3:
            raise CorpusError(f"meta line {ln}: expected doc_id<TAB>split<TAB>label")
        doc_id, split, label = parts
        if split not in SPLITS:
            raise CorpusError(f"meta line {ln}: unknown split {split!r}")
        doc_ids.append(doc_id)
        splits.append(split)
        label_names.append(label)
    if len(set(doc_ids)) != len(doc_ids):
        raise CorpusError("duplicate doc_id in meta file")

    token_lists = [tokenize(text, preproc) for text in text_lines]
    min_freq = preproc.resolve_min_freq(len(token_lists))
    freq = Counter(w for words in token_lists for w in words)

    # Vocabulary in first-occurrence order over surviving words.
    vocab_words: list[str] = []
    seen: set[str] = set()
    for words in token_lists:
        for w in words:
            if w not in seen and freq[w] >= min_freq:
                seen.add(w)
                vocab_words.append(w)
    vocabulary = Vocabulary(tuple(vocab_words))

    labels = tuple(sorted(set(label_names)))
    label_index = {name: i for i, name in enumerate(labels)}

    documents = []
    n_emptied = 0
    for doc_id, split, label, words in zip(doc_ids, splits, label_names, token_lists):
        ids = tuple(
            vocabulary.word_to_index[w] for w in words if freq[w] >= min_freq
        )
        if not ids and words:
            n_emptied += 1
        documents.append(TokenizedDocument(doc_id, ids, label_index[label], split))
    if n_emptied:
        logger.warning(
            "%d document(s) lost all tokens to preprocessing; kept as isolated nodes",
            n_emptied,
        )
    return Corpus(tuple(documents), vocabulary, labels)


def sample_limited_split(
    corpus: Corpus,
    train_fraction: float,
    seed: int,
    stratified: bool = True,
) -> Corpus:
    """Reassign splits for the limited-label environment.

    ceil(train_fraction * D) documents become the training set and the
    rest the test set, sampled reproducibly from ``seed``.  With
    stratification (default) every label receives at least one training
    document whenever the training budget allows it.
    """
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError(f"train_fraction must be in (0, 1], got {train_fraction}")
    n_docs = corpus.n_docs
    # Guard against float noise such as 0.01 * 200 = 2.0000000000000004.
    n_train = min(n_docs, math.ceil(train_fraction * n_docs - 1e-9))
    rng = random.Random(seed)

    if stratified and corpus.n_labels > 0:
        chosen = _stratified_pick(corpus, n_train, rng)
    else:
        chosen = set(rng.sample(range(n_docs), n_train))

    documents = tuple(
        replace(doc, split="train" if i in chosen else "test")
        for i, doc in enumerate(corpus.documents)
    )
    return replace(corpus, documents=documents)


def _stratified_pick(corpus: Corpus, n_train: int, rng: random.Random) -> set[int]:
    by_label: dict[int, list[int]] = {}
    for i, doc in enumerate(corpus.documents):
        by_label.setdefault(doc.label, []).append(i)
    label_order = sorted(by_label)
    for lab in label_order:
        rng.shuffle(by_label[lab])

    quota = {lab: 0 for lab in label_order}
    remaining = n_train
    # One document per label first (largest labels win when the budget is
    # short), then fill proportionally by largest remainder.
    for lab in sorted(label_order, key=lambda l: (-len(by_label[l]), l)):
        if remaining == 0:
            break
        quota[lab] = 1
        remaining -= 1
    if remaining > 0:
        free = {lab: len(by_label[lab]) - quota[lab] for lab in label_order}
        total_free = sum(free.values())
        shares = {
            lab: remaining * free[lab] / total_free if total_free else 0.0
            for lab in label_order
        }
        for lab in label_order:
            take = min(int(shares[lab]), free[lab])
            quota[lab] += take
            free[lab] -= take
            remaining -= take
        by_remainder = sorted(
            label_order, key=lambda l: (-(shares[l] - int(shares[l])), l)
        )
        while remaining > 0:
            for lab in by_remainder:
                if remaining == 0:
                    break
                if free[lab] > 0:
                    quota[lab] += 1
                    free[lab] -= 1
                    remaining -= 1
    return {i for lab in label_order for i in by_label[lab][: quota[lab]]}
