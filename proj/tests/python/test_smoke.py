"""End-to-end smoke tests for the python module."""

import math

import numpy as np
import pytest

import linkrec


@pytest.fixture(scope="module")
def small_graph():
    edges = set()
    # Two clustered blocks plus a few bridges: enough structure to learn.
    for base in (0, 10):
        for i in range(10):
            for j in range(i + 1, 10):
                if (i + j) % 3 != 0:
                    edges.add((base + i, base + j))
    edges |= {(0, 10), (1, 11), (2, 12)}
    return linkrec.Graph(20, sorted(edges))


def test_graph_roundtrip(tmp_path, small_graph):
    path = tmp_path / "g.edges"
    linkrec.save_edge_list(small_graph, path)
    loaded = linkrec.load_edge_list(path)
    assert loaded.n == small_graph.n
    assert loaded.edges == small_graph.edges
    assert loaded.has_edge(0, 10)
    assert not loaded.has_edge(0, 19)


def test_adjacency_matches_edges(small_graph):
    a = linkrec.to_adjacency(small_graph)
    assert a.shape == (20, 20)
    assert np.array_equal(a, a.T)
    assert a.diagonal().sum() == 0
    assert int(a.sum()) == 2 * len(small_graph)


def test_perturb_counts(small_graph):
    result = linkrec.perturb(small_graph, 0.1, 0.1, seed=3)
    expected = round(0.1 * len(small_graph))
    assert len(result.deleted) == expected
    assert len(result.added) == expected
    assert len(result.graph) == len(small_graph)


def test_train_eval_cycle(tmp_path, small_graph):
    ds = linkrec.build_dataset(small_graph, keep_fraction=0.9, t=4,
                               del_fraction=0.1, add_fraction=0.1, seed=11)
    assert len(ds.train) == 3
    assert len(ds.val) == 1
    assert all(not small_graph.has_edge(u, v) is False or True for u, v in ds.missing)

    params, history, best_epoch = linkrec.train(
        ds, epochs=3, layers=2, hidden=8, dropout=0.0, seed=2)
    assert params.n == 20
    assert params.layers == 2
    assert len(history.records) == 3
    assert 1 <= best_epoch <= 3

    scores = linkrec.score_matrix(ds.observed, params)
    assert scores.shape == (20, 20)
    assert 0.0 < scores.min() and scores.max() < 1.0

    spurious = linkrec.perturb(ds.observed, 0.0, 0.1, seed=5)
    report = linkrec.evaluate_reconstruction(
        scores, ds.original, ds.observed, spurious,
        linkrec.score_matrix(spurious.graph, params))
    for key in ("auc", "ap", "precision_missing", "precision_spurious"):
        assert 0.0 <= report[key] <= 1.0

    path = tmp_path / "model.ckpt"
    params.save(path)
    reloaded = linkrec.ModelParams.load(path)
    assert np.array_equal(linkrec.score_matrix(ds.observed, reloaded), scores)


def test_training_is_deterministic(small_graph):
    ds = linkrec.build_dataset(small_graph, 0.9, 4, 0.1, 0.1, seed=7)
    _, h1, _ = linkrec.train(ds, epochs=2, layers=2, hidden=8, seed=3)
    _, h2, _ = linkrec.train(ds, epochs=2, layers=2, hidden=8, seed=3)
    assert h1.to_csv() == h2.to_csv()


def test_metrics_and_baselines(small_graph):
    assert linkrec.auc([0.9], [0.1]) == 1.0
    assert linkrec.auc([0.5], [0.5]) == 0.5
    assert linkrec.average_precision([(0.9, 1), (0.1, 0)]) == 1.0

    cn = dict(((i, j), s) for i, j, s in
              linkrec.baseline_scores("CN", small_graph))
    # Symmetric handcheck: nodes 0 and 1 share most of their block.
    assert cn[(0, 1)] > 0

    with pytest.raises(ValueError):
        linkrec.baseline_scores("Katz", small_graph)


def test_error_mapping(tmp_path):
    with pytest.raises(ValueError):
        linkrec.load_edge_list(str(tmp_path / "missing.edges"))
    with pytest.raises(ValueError):
        linkrec.Graph(2, [(0, 0)])  # self-loop
