"""Node feature matrices: one-hot identity and dense embedding files."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from corpusgcn import (
    EdgeConfig,
    FeatureFileError,
    FeatureKind,
    FeatureMatrix,
    build_graph,
    load_embedding_file,
    node_keys,
    onehot_features,
    spmm,
    sym_normalize,
    CooMatrix,
)
from oracles import make_corpus


def toy_graph():
    return build_graph(make_corpus([[0, 1], [0, 2]]), EdgeConfig.D2W_W2W_D2D)


def write_feature_file(path, rows, dim):
    lines = [f"FEAT {len(rows)} {dim}"]
    for key, vec in rows:
        lines.append(key + "\t" + " ".join(str(v) for v in vec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestFeatureMatrix:
    def test_onehot_invariants(self):
        x = onehot_features(3)
        assert x.kind is FeatureKind.ONE_HOT
        assert x.dim == x.n_nodes == 3
        assert_allclose(x.densified(), np.eye(3))

    def test_onehot_from_graph(self):
        graph = toy_graph()
        assert onehot_features(graph).n_nodes == graph.n_nodes

    def test_onehot_empty(self):
        assert onehot_features(0).densified().shape == (0, 0)

    def test_onehot_rejects_data(self):
        with pytest.raises(ValueError):
            FeatureMatrix(FeatureKind.ONE_HOT, 3, 3, data=np.eye(3))
        with pytest.raises(ValueError):
            FeatureMatrix(FeatureKind.ONE_HOT, 3, 2)

    def test_dense_needs_matching_shape(self):
        with pytest.raises(ValueError):
            FeatureMatrix(FeatureKind.DENSE, 3, 4, data=np.zeros((3, 5)))

    def test_identity_shortcut_matches_materialized(self):
        rng = np.random.default_rng(3)
        n = 6
        triples = []
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < 0.5:
                    v = float(rng.random())
                    triples.extend([(i, j, v), (j, i, v)])
        a_hat = sym_normalize(CooMatrix.from_triples(n, n, triples))
        x = onehot_features(n)
        assert np.array_equal(spmm(a_hat, x.densified()), a_hat.to_dense())


class TestNodeKeys:
    def test_layout_order(self):
        graph = toy_graph()
        keys = node_keys(graph)
        assert keys[: graph.corpus.n_docs] == ["doc:d0", "doc:d1"]
        assert keys[graph.corpus.n_docs :] == ["word:w0", "word:w1", "word:w2"]


class TestLoadEmbeddingFile:
    def test_round_trip_and_reordering(self, tmp_path):
        graph = toy_graph()
        keys = node_keys(graph)
        rng = np.random.default_rng(5)
        vectors = {k: rng.standard_normal(4) for k in keys}
        path = tmp_path / "feat.txt"
        write_feature_file(path, [(k, vectors[k]) for k in keys], 4)
        x = load_embedding_file(path, graph)
        assert x.kind is FeatureKind.DENSE
        assert x.dim == 4
        for i, k in enumerate(keys):
            assert_allclose(x.data[i], vectors[k], rtol=1e-15)

    def test_row_order_insensitive(self, tmp_path):
        graph = toy_graph()
        keys = node_keys(graph)
        rng = np.random.default_rng(6)
        vectors = {k: rng.standard_normal(3) for k in keys}
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        write_feature_file(a, [(k, vectors[k]) for k in keys], 3)
        write_feature_file(b, [(k, vectors[k]) for k in reversed(keys)], 3)
        assert np.array_equal(
            load_embedding_file(a, graph).data, load_embedding_file(b, graph).data
        )

    def test_missing_key_error_names_it(self, tmp_path):
        graph = toy_graph()
        keys = node_keys(graph)
        rows = [(k, [0.0, 0.0]) for k in keys if k != "word:w1"]
        rows.append(("word:zzz", [0.0, 0.0]))
        path = tmp_path / "feat.txt"
        write_feature_file(path, rows, 2)
        with pytest.raises(FeatureFileError, match="w1"):
            load_embedding_file(path, graph)

    def test_missing_as_zero_fallback(self, tmp_path):
        graph = toy_graph()
        keys = node_keys(graph)
        rows = [(k, [1.0, 2.0]) for k in keys if k != "word:w1"]
        rows.append(("word:extra", [9.0, 9.0]))  # keeps the header count right
        path = tmp_path / "feat.txt"
        write_feature_file(path, rows, 2)
        with pytest.raises(FeatureFileError):
            load_embedding_file(path, graph)
        x = load_embedding_file(path, graph, missing_as_zero=True)
        missing_row = keys.index("word:w1")
        assert np.array_equal(x.data[missing_row], np.zeros(2))
        assert np.array_equal(x.data[0], [1.0, 2.0])

    def test_node_count_mismatch(self, tmp_path):
        graph = toy_graph()
        path = tmp_path / "feat.txt"
        write_feature_file(path, [("doc:d0", [1.0])], 1)
        with pytest.raises(FeatureFileError):
            load_embedding_file(path, graph)

    def test_duplicate_key(self, tmp_path):
        graph = toy_graph()
        keys = node_keys(graph)
        rows = [(k, [0.0]) for k in keys[:-1]] + [(keys[0], [0.0])]
        path = tmp_path / "feat.txt"
        write_feature_file(path, rows, 1)
        with pytest.raises(FeatureFileError):
            load_embedding_file(path, graph)

    def test_non_finite_value(self, tmp_path):
        graph = toy_graph()
        keys = node_keys(graph)
        rows = [(k, [0.0]) for k in keys]
        rows[2] = (keys[2], ["nan"])
        path = tmp_path / "feat.txt"
        write_feature_file(path, rows, 1)
        with pytest.raises(FeatureFileError):
            load_embedding_file(path, graph)

    def test_wrong_dim_row(self, tmp_path):
        graph = toy_graph()
        keys = node_keys(graph)
        rows = [(k, [0.0, 1.0]) for k in keys]
        rows[1] = (keys[1], [0.0])
        path = tmp_path / "feat.txt"
        write_feature_file(path, rows, 2)
        with pytest.raises(FeatureFileError):
            load_embedding_file(path, graph)

    def test_bad_header(self, tmp_path):
        graph = toy_graph()
        path = tmp_path / "feat.txt"
        path.write_text("FOO 1 2\n", encoding="utf-8")
        with pytest.raises(FeatureFileError):
            load_embedding_file(path, graph)
