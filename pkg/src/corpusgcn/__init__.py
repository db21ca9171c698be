"""Corpus-level text-graph construction and GCN classification.

The pipeline: tokenize a labeled corpus, build one heterogeneous graph
over all documents and vocabulary words (TF-IDF word-doc edges, PMI
word-word edges, Jaccard doc-doc edges), attach one-hot or precomputed
dense node features, train a from-scratch multi-layer GCN
transductively, and evaluate on the test documents.  A sweep harness
runs the node/edge/layer/label-fraction ablation grids.
"""

from .corpus import (
    Corpus,
    CorpusError,
    PreprocConfig,
    Vocabulary,
    load_corpus,
    sample_limited_split,
    tokenize,
)
from .features import (
    FeatureFileError,
    FeatureKind,
    FeatureMatrix,
    load_embedding_file,
    node_keys,
    onehot_features,
)
from .gcn import (
    AdamState,
    EarlyStopper,
    GcnModel,
    TrainConfig,
    TrainHistory,
    adam_step,
    backward,
    forward,
    init_model,
    load_checkpoint,
    masked_cross_entropy,
    predict,
    save_checkpoint,
    train,
)
from .harness import (
    EvalReport,
    ExperimentConfig,
    ExperimentRecord,
    Runtime,
    SweepSpec,
    emit_report,
    run_experiment,
    run_sweep,
)
from .metrics import EvalResult, evaluate
from .sparse import CooMatrix, CsrMatrix, coo_to_csr, read_coo, spmm, sym_normalize, write_coo
from .textgraph import (
    EdgeConfig,
    PmiStats,
    TextGraph,
    build_graph,
    count_windows,
    jaccard_doc_edges,
    normalized_adjacency,
    pmi_edges,
    read_graph_adjacency,
    tfidf_edges,
    write_graph,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "CooMatrix",
    "Corpus",
    "CorpusError",
    "CsrMatrix",
    "EarlyStopper",
    "EdgeConfig",
    "EvalReport",
    "EvalResult",
    "ExperimentConfig",
    "ExperimentRecord",
    "FeatureFileError",
    "FeatureKind",
    "FeatureMatrix",
    "GcnModel",
    "PmiStats",
    "PreprocConfig",
    "Runtime",
    "SweepSpec",
    "TextGraph",
    "TrainConfig",
    "TrainHistory",
    "Vocabulary",
    "adam_step",
    "backward",
    "build_graph",
    "coo_to_csr",
    "count_windows",
    "emit_report",
    "evaluate",
    "forward",
    "init_model",
    "jaccard_doc_edges",
    "load_checkpoint",
    "load_corpus",
    "load_embedding_file",
    "masked_cross_entropy",
    "node_keys",
    "normalized_adjacency",
    "onehot_features",
    "pmi_edges",
    "predict",
    "read_coo",
    "read_graph_adjacency",
    "run_experiment",
    "run_sweep",
    "sample_limited_split",
    "save_checkpoint",
    "spmm",
    "sym_normalize",
    "tfidf_edges",
    "tokenize",
    "train",
    "write_coo",
    "write_graph",
]
