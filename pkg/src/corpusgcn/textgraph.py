"""Corpus-level heterogeneous text graph construction.

Nodes are the D documents followed by the M vocabulary words.  Three edge
families are built from co-occurrence statistics:

* word-document edges weighted by TF-IDF,
* word-word edges weighted by positive PMI from sliding-window counts,
* document-document edges weighted by Jaccard similarity of distinct-word
  sets, kept above a threshold.

The three edge configurations form a strict inclusion chain: word-doc
only, plus word-word, plus doc-doc.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus
from .sparse import CooMatrix, CsrMatrix, sym_normalize, write_coo, read_coo


class EdgeConfig(Enum):
    """Edge families included in the graph, in inclusion order."""

    D2W_ONLY = "d2w"
    D2W_W2W = "d2w+w2w"
    D2W_W2W_D2D = "d2w+w2w+d2d"

    @property
    def with_word_word(self) -> bool:
        return self in (EdgeConfig.D2W_W2W, EdgeConfig.D2W_W2W_D2D)

    @property
    def with_doc_doc(self) -> bool:
        return self is EdgeConfig.D2W_W2W_D2D

    @classmethod
    def parse(cls, text: str) -> "EdgeConfig":
        for cfg in cls:
            if text in (cfg.value, cfg.name, cfg.name.lower()):
                return cfg
        raise ValueError(f"unknown edge config {text!r}")


@dataclass
class PmiStats:
    """Sliding-window co-occurrence counts.

    ``pair_window_count`` is keyed by ``i * vocab_size + j`` with i < j;
    counts are presence-based (a word or pair is counted once per window
    no matter how often it repeats inside).
    """

    total_windows: int
    word_window_count: dict[int, int]
    pair_window_count: dict[int, int]
    window_size: int
    vocab_size: int

    def word_count(self, i: int) -> int:
        return self.word_window_count.get(i, 0)

    def pair_count(self, i: int, j: int) -> int:
        if i == j:
            raise ValueError("pair counts are defined for distinct words")
        if i > j:
            i, j = j, i
        return self.pair_window_count.get(i * self.vocab_size + j, 0)

    def pairs(self):
        """Yield (i, j, count) for every co-occurring unordered pair."""
        m = self.vocab_size
        for key, count in self.pair_window_count.items():
            yield key // m, key % m, count


@dataclass
class TextGraph:
    """Node layout (documents then words) plus symmetric weighted adjacency."""

    corpus: Corpus
    adjacency: CooMatrix
    edge_config: EdgeConfig
    window_size: int
    jaccard_threshold: float
    _a_hat: CsrMatrix | None = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.corpus.n_docs + self.corpus.vocab_size

    def word_node(self, word_index: int) -> int:
        return self.corpus.n_docs + word_index


def count_windows(corpus: Corpus, window_size: int) -> PmiStats:
    """Slide a length-``window_size`` window (stride 1) over every document.

    A document no longer than the window contributes exactly one window
    (empty documents included).  Windows never cross document boundaries.
    """
    if window_size < 1:
        raise ValueError(f"window_size must be >= 1, got {window_size}")
    total = 0
    word_counts: Counter[int] = Counter()
    pair_counts: Counter[int] = Counter()
    m = corpus.vocab_size
    for doc in corpus.documents:
        tokens = doc.tokens
        n = len(tokens)
        if n <= window_size:
            total += 1
            distinct = sorted(set(tokens))
            word_counts.update(distinct)
            for a, b in combinations(distinct, 2):
                pair_counts[a * m + b] += 1
            continue
        n_windows = n - window_size + 1
        total += n_windows
        # Presence bitmap per distinct word: bit t set iff the word occurs
        # in the window starting at t.  A token at position p is visible
        # from window starts max(0, p-w+1) .. min(p, n_windows-1).
        bitmaps: dict[int, int] = {}
        for p, w in enumerate(tokens):
            lo = max(0, p - window_size + 1)
            hi = min(p, n_windows - 1)
            bitmaps[w] = bitmaps.get(w, 0) | (((1 << (hi - lo + 1)) - 1) << lo)
        for w, bits in bitmaps.items():
            word_counts[w] += bits.bit_count()
        distinct = sorted(bitmaps)
        for a, b in combinations(distinct, 2):
            overlap = (bitmaps[a] & bitmaps[b]).bit_count()
            if overlap:
                pair_counts[a * m + b] += overlap
    return PmiStats(total, dict(word_counts), dict(pair_counts), window_size, m)


def pmi_edges(stats: PmiStats) -> list[tuple[int, int, float]]:
    """Word-word edges with strictly positive pointwise mutual information.

    With window counts c and total windows W, an unordered pair (i, j) is
    emitted iff c_ij * W > c_i * c_j (the exact-integer form of the
    positivity clamp) with natural-log weight log(c_ij * W / (c_i * c_j)).
    """
    edges = []
    total = stats.total_windows
    for i, j, c_ij in stats.pairs():
        denom = stats.word_count(i) * stats.word_count(j)
        if c_ij * total > denom:
            edges.append((i, j, math.log(c_ij * total / denom)))
    edges.sort(key=lambda e: (e[0], e[1]))
    return edges


def tfidf_edges(corpus: Corpus) -> list[tuple[int, int, float]]:
    """Word-document edges weighted tf * idf.

    tf is the raw count of the word in the document and
    idf = log(D / document_frequency) with natural log; words present in
    every document (idf 0) produce no edge.
    """
    n_docs = corpus.n_docs
    per_doc = [Counter(doc.tokens) for doc in corpus.documents]
    df: Counter[int] = Counter()
    for counts in per_doc:
        df.update(counts.keys())
    idf = {w: math.log(n_docs / d) for w, d in df.items() if d != n_docs}
    edges = []
    for d, counts in enumerate(per_doc):
        for w in sorted(counts):
            if w in idf:
                edges.append((d, w, counts[w] * idf[w]))
    return edges


def jaccard_doc_edges(
    corpus: Corpus, threshold: float
) -> list[tuple[int, int, float]]:
    """Document-document edges by Jaccard similarity of distinct-word sets.

    Emits (d, e, J) for d < e whenever J = |intersection| / |union| meets
    the threshold.  Pairs with an empty intersection (J = 0, including the
    both-empty case) never produce an edge, so all emitted weights are
    positive.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    n_docs = corpus.n_docs
    if n_docs < 2:
        return []
    doc_sets = [sorted(set(doc.tokens)) for doc in corpus.documents]
    sizes = np.array([len(s) for s in doc_sets], dtype=np.int64)

    # Binary doc-word incidence; intersection sizes come from B @ B^T,
    # computed in row blocks to bound memory.
    indptr = np.concatenate(([0], np.cumsum(sizes)))
    indices = np.fromiter(
        (w for s in doc_sets for w in s), dtype=np.int64, count=int(sizes.sum())
    )
    b = sp.csr_matrix(
        (np.ones(len(indices), dtype=np.int64), indices, indptr),
        shape=(n_docs, max(corpus.vocab_size, 1)),
    )
    bt = sp.csr_matrix(b.T)
    edges = []
    block = 1024
    for start in range(0, n_docs, block):
        inter = sp.coo_matrix(b[start : start + block] @ bt)
        rows = inter.row.astype(np.int64) + start
        cols = inter.col.astype(np.int64)
        data = inter.data.astype(np.float64)
        upper = rows < cols
        rows, cols, data = rows[upper], cols[upper], data[upper]
        union = sizes[rows] + sizes[cols] - data
        jac = data / union
        keep = jac >= threshold
        edges.extend(
            zip(rows[keep].tolist(), cols[keep].tolist(), jac[keep].tolist())
        )
    edges.sort(key=lambda t: (t[0], t[1]))
    return edges


def build_graph(
    corpus: Corpus,
    config: EdgeConfig = EdgeConfig.D2W_W2W_D2D,
    window_size: int = 20,
    jaccard_threshold: float = 0.2,
) -> TextGraph:
    """Assemble the corpus graph for one edge configuration.

    TF-IDF word-document edges are always present; word-word PMI edges and
    Jaccard document-document edges join per ``config``.  Every undirected
    edge is stored as two symmetric COO triples and the diagonal is zero.
    """
    n_docs = corpus.n_docs
    n = n_docs + corpus.vocab_size
    triples: list[tuple[int, int, float]] = []
    for d, w, weight in tfidf_edges(corpus):
        triples.append((d, n_docs + w, weight))
    if config.with_word_word:
        stats = count_windows(corpus, window_size)
        for i, j, weight in pmi_edges(stats):
            triples.append((n_docs + i, n_docs + j, weight))
    if config.with_doc_doc:
        for d, e, weight in jaccard_doc_edges(corpus, jaccard_threshold):
            triples.append((d, e, weight))
    rows = np.fromiter((t[0] for t in triples), dtype=np.int64, count=len(triples))
    cols = np.fromiter((t[1] for t in triples), dtype=np.int64, count=len(triples))
    vals = np.fromiter((t[2] for t in triples), dtype=np.float64, count=len(triples))
    adjacency = CooMatrix(
        n,
        n,
        np.concatenate([rows, cols]),
        np.concatenate([cols, rows]),
        np.concatenate([vals, vals]),
    )
    return TextGraph(corpus, adjacency, config, window_size, jaccard_threshold)


def normalized_adjacency(graph: TextGraph) -> CsrMatrix:
    """Symmetrically normalized self-looped adjacency, cached on the graph."""
    if graph._a_hat is None:
        graph._a_hat = sym_normalize(graph.adjacency)
    return graph._a_hat


def write_graph(graph: TextGraph, path) -> None:
    """Serialize the adjacency in COO text form with a build-parameter header."""
    header = (
        f"{graph.n_nodes} {graph.corpus.n_docs} {graph.corpus.vocab_size} "
        f"{graph.edge_config.value} {graph.window_size} {graph.jaccard_threshold:g}"
    )
    write_coo(graph.adjacency, path, header_comments=[header])


def read_graph_adjacency(path) -> CooMatrix:
    """Read back the adjacency written by :func:`write_graph`."""
    return read_coo(path)
