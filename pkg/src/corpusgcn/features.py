"""Initial node feature matrices.

Two kinds: one-hot identity features (stored implicitly; the first
propagation step then reduces to the adjacency itself) and dense
embeddings loaded from a feature file keyed by node.

Feature file format: UTF-8 text, line 1 ``FEAT n_nodes dim``, then one
``node_key<TAB>v1 v2 ... v_dim`` line per node with keys ``doc:<doc_id>``
or ``word:<word>``.  Row order in the file is irrelevant; rows are mapped
to the graph layout by key.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .textgraph import TextGraph

logger = logging.getLogger(__name__)


class FeatureKind(Enum):
    ONE_HOT = "onehot"
    DENSE = "dense"


class FeatureFileError(Exception):
    """Raised when a feature file violates its format contract."""


@dataclass(frozen=True)
class FeatureMatrix:
    kind: FeatureKind
    n_nodes: int
    dim: int
    data: np.ndarray | None = None

    def __post_init__(self):
        if self.kind is FeatureKind.ONE_HOT:
            if self.dim != self.n_nodes or self.data is not None:
                raise ValueError("one-hot features are an implicit identity")
        else:
            if self.data is None or self.data.shape != (self.n_nodes, self.dim):
                raise ValueError("dense features require an n_nodes x dim matrix")

    def densified(self) -> np.ndarray:
        """Materialize the feature matrix (identity for ONE_HOT)."""
        if self.kind is FeatureKind.ONE_HOT:
            return np.eye(self.n_nodes)
        return self.data


def onehot_features(graph_or_n: "TextGraph | int") -> FeatureMatrix:
    """Identity features: each node's input indicates only its own identity."""
    n_nodes = graph_or_n if isinstance(graph_or_n, int) else graph_or_n.n_nodes
    if n_nodes < 0:
        raise ValueError("n_nodes must be non-negative")
    return FeatureMatrix(FeatureKind.ONE_HOT, n_nodes, n_nodes)


def node_keys(graph: TextGraph) -> list[str]:
    """Node keys in graph layout order: documents first, then words."""
    keys = [f"doc:{doc.doc_id}" for doc in graph.corpus.documents]
    keys.extend(f"word:{w}" for w in graph.corpus.vocabulary.index_to_word)
    return keys


def load_embedding_file(
    path, graph: TextGraph, missing_as_zero: bool = False
) -> FeatureMatrix:
    """Load dense node features, re-ordered by node key to the graph layout.

    Errors distinguish a node-count mismatch with the graph, a missing
    node key, a duplicate node key, and non-finite values.  With
    ``missing_as_zero`` a missing key becomes a zero row plus a warning
    instead of an error (for embedding pipelines that truncate long
    documents and drop tail words).
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "FEAT":
            raise FeatureFileError(f"malformed feature header: {header}")
        n_nodes, dim = int(header[1]), int(header[2])
        if n_nodes != graph.n_nodes:
            raise FeatureFileError(
                f"feature file declares {n_nodes} nodes but graph has {graph.n_nodes}"
            )
        rows: dict[str, np.ndarray] = {}
        for ln in range(n_nodes):
            line = fh.readline()
            if not line:
                raise FeatureFileError(f"expected {n_nodes} rows, file ended at {ln}")
            key, _, rest = line.rstrip("\n").partition("\t")
            if key in rows:
                raise FeatureFileError(f"duplicate node key {key!r}")
            try:
                vec = np.array(rest.split(), dtype=np.float64)
            except ValueError as exc:
                raise FeatureFileError(f"unparseable value in row {key!r}") from exc
            if len(vec) != dim:
                raise FeatureFileError(
                    f"row {key!r} has {len(vec)} values, expected {dim}"
                )
            if not np.all(np.isfinite(vec)):
                raise FeatureFileError(f"non-finite value in row {key!r}")
            rows[key] = vec

    data = np.zeros((graph.n_nodes, dim))
    n_missing = 0
    for idx, key in enumerate(node_keys(graph)):
        vec = rows.get(key)
        if vec is None:
            if not missing_as_zero:
                raise FeatureFileError(f"feature file is missing node key {key!r}")
            n_missing += 1
            continue
        data[idx] = vec
    if n_missing:
        logger.warning("%d node key(s) missing from feature file; zero-filled", n_missing)
    return FeatureMatrix(FeatureKind.DENSE, graph.n_nodes, dim, data)
