import numpy as np
import pytest

from structcert.classifier import (LinearModel, accuracy, degree_histogram, degree_histograms,
                                   kernel, predict, train)
from structcert.graph import GraphBits, InvalidInputError, encode_graph
from structcert.synthgen import SynthConfig, generate_split

from conftest import random_graph

TRIANGLE = encode_graph([(0, 1), (0, 2), (1, 2)], 3)
EMPTY4 = encode_graph([], 4)
PATH = encode_graph([(0, 1), (1, 2)], 3)


def test_histogram_examples():
    assert degree_histogram(TRIANGLE).tolist() == [0, 0, 3]
    assert degree_histogram(EMPTY4).tolist() == [4, 0, 0, 0]
    assert degree_histogram(PATH).tolist() == [0, 2, 1]


def test_kernel_examples(rng):
    assert kernel(TRIANGLE, TRIANGLE) == 9
    assert kernel(TRIANGLE, EMPTY4) == 0
    for _ in range(10):
        g = random_graph(rng, int(rng.integers(2, 9)))
        h = degree_histogram(g)
        assert kernel(g, g) == int(h @ h) >= g.num_nodes ** 2 / g.num_nodes


def test_histogram_invariants(rng):
    for _ in range(20):
        g = random_graph(rng, int(rng.integers(2, 12)), rng.random())
        h = degree_histogram(g)
        assert h.sum() == g.num_nodes
        assert (np.arange(len(h)) * h).sum() == 2 * g.num_edges


def test_batch_matches_single(rng):
    graphs = [random_graph(rng, 6) for _ in range(10)]
    batch = degree_histograms(np.stack([g.bits for g in graphs]))
    assert all((batch[i] == degree_histogram(g)).all() for i, g in enumerate(graphs))


def test_large_degree_clamped(caplog):
    h = degree_histograms(TRIANGLE.bits[None, :], dim=2)
    assert h.tolist() == [[0, 3]]
    assert "clamped" in caplog.text


def test_predict_examples():
    favour_two = LinearModel(np.array([0.0, 0.0, -1.0]), 0.0)
    assert predict(favour_two, TRIANGLE) == 0
    zero = LinearModel(np.zeros(4), 0.0)
    assert predict(zero, EMPTY4) == 0
    assert predict(zero, encode_graph([(0, 1)], 4)) == 0


def test_relabeling_invariance(rng):
    model = LinearModel(rng.normal(size=7), 0.1)
    for _ in range(10):
        g = random_graph(rng, 7)
        perm = rng.permutation(7)
        adj = g.adjacency()[np.ix_(perm, perm)]
        h = GraphBits(7, adj[np.triu_indices(7, 1)])
        assert predict(model, g) == predict(model, h)


def toy_motifs(k):
    cycles = [encode_graph([(i, (i + 1) % n) for i in range(n)], 6) for n in range(4, 4 + k)]
    cliques = [encode_graph([(u, v) for u in range(n) for v in range(u + 1, n)], 6)
               for n in range(4, 4 + k)]
    return cycles + cliques, [0] * k + [1] * k


def test_separable_toy():
    split = generate_split(20, SynthConfig(n_motif=6, n_random=6), np.random.default_rng(0))
    graphs, labels = split.graphs, split.labels
    model = train(graphs, labels, seed=1)
    assert model.train_accuracy == 1.0
    assert accuracy(model, graphs, labels) == 1.0


def test_training_is_deterministic():
    graphs, labels = toy_motifs(3)
    a = train(graphs, labels, seed=3)
    b = train(graphs, labels, seed=3)
    assert (a.weights == b.weights).all() and a.bias == b.bias


def test_inseparable_gives_half():
    model = train([TRIANGLE, TRIANGLE], [0, 1])
    assert model.train_accuracy == 0.5


def test_single_class_rejected():
    with pytest.raises(InvalidInputError):
        train([TRIANGLE, PATH], [1, 1])


def test_model_round_trip(tmp_path):
    model = LinearModel(np.array([0.5, -1.25, 3.0]), -0.75, positive_label=4, negative_label=2)
    model.save(tmp_path / "m.json")
    back = LinearModel.load(tmp_path / "m.json")
    assert (back.weights == model.weights).all() and back.bias == model.bias
    assert (back.positive_label, back.negative_label) == (4, 2)
    assert back.feature_dim == 3
