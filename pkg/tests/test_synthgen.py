import filecmp

import networkx as nx
import numpy as np
import pytest

from structcert.graph import InvalidInputError
from structcert.synthgen import (GenerationError, NEGATIVE, POSITIVE, SynthConfig, bridge_count,
                                 connected_er, connected_er_edges, generate_dataset,
                                 generate_graph, is_connected, read_dataset, write_dataset)

SMALL = SynthConfig(train=2, val=2, test=2)


def test_trivial_er():
    rng = np.random.default_rng(0)
    assert connected_er(1, 0.5, rng).num_edges == 0
    assert connected_er(2, 0.999, rng).bitstring() == "1"


def test_er_gives_up():
    with pytest.raises(GenerationError):
        connected_er_edges(30, 0.01, np.random.default_rng(0), max_attempts=20)


def test_er_density_matches_rejection_oracle():
    rng = np.random.default_rng(1)
    ours = np.array([connected_er(10, 0.5, rng).num_edges for _ in range(1000)])
    assert all(is_connected(10, connected_er_edges(10, 0.5, rng)) for _ in range(50))
    # independent oracle: networkx G(n, p) conditioned on connectivity by rejection
    ref = []
    seed = 0
    while len(ref) < 4000:
        g = nx.gnp_random_graph(10, 0.5, seed=seed)
        seed += 1
        if nx.is_connected(g):
            ref.append(g.number_of_edges())
    ref = np.array(ref)
    sigma = np.sqrt(ours.var() / len(ours) + ref.var() / len(ref))
    assert abs(ours.mean() - ref.mean()) <= 3 * sigma


@pytest.mark.parametrize("label, edges, degree", [(NEGATIVE, 10, 2), (POSITIVE, 45, 9)])
def test_motif_structure(label, edges, degree):
    cfg = SynthConfig()
    rng = np.random.default_rng(2)
    for _ in range(20):
        adj = generate_graph(label, cfg, rng).adjacency()
        motif = adj[:10, :10]
        assert motif.sum() // 2 == edges
        assert (motif.sum(axis=1) == degree).all()


def test_single_bridge_and_connected():
    cfg = SynthConfig()
    rng = np.random.default_rng(3)
    ends = set()
    for i in range(1000):
        g = generate_graph(i % 2, cfg, rng)
        assert bridge_count(g, 10) == 1
        assert nx.is_connected(nx.from_numpy_array(g.adjacency()))
        adj = g.adjacency()
        u, v = np.argwhere(adj[:10, 10:])[0]
        ends.add((int(u), int(v)))
    assert len(ends) > 50  # endpoints vary on both sides


def test_dataset_sizes_and_balance():
    data = generate_dataset(SynthConfig(train=40, val=20, test=10))
    assert [len(data[s]) for s in ("train", "val", "test")] == [40, 20, 10]
    for split in data.values():
        assert split.labels.mean() == 0.5
    tiny = generate_dataset(SMALL)
    assert all(sorted(s.labels.tolist()) == [0, 1] for s in tiny.values())


def test_default_sizes():
    assert SynthConfig().sizes() == {"train": 1000, "val": 1000, "test": 100}


@pytest.mark.parametrize("kwargs", [{"n_motif": 2}, {"er_p": 0.0}, {"er_p": 1.0},
                                    {"train": 3}, {"test": 0}])
def test_config_validation(kwargs):
    with pytest.raises(InvalidInputError):
        SynthConfig(**kwargs)


def test_byte_identical_files(tmp_path):
    cfg = SynthConfig(train=4, val=2, test=2, seed=9)
    a = write_dataset(generate_dataset(cfg), cfg, tmp_path / "a")
    b = write_dataset(generate_dataset(cfg), cfg, tmp_path / "b")
    cmp = filecmp.dircmp(a, b)
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    gcmp = filecmp.dircmp(a / "graphs", b / "graphs")
    assert not gcmp.diff_files and len(gcmp.same_files) == 8


def test_dataset_round_trip(tmp_path):
    cfg = SynthConfig(train=4, val=2, test=2, seed=5)
    data = generate_dataset(cfg)
    write_dataset(data, cfg, tmp_path)
    back, meta, ids = read_dataset(tmp_path)
    assert meta["config_hash"] == cfg.digest()
    assert ids["test"] == ["test_00000", "test_00001"]
    for name in data:
        assert back[name].graphs == data[name].graphs
        assert (back[name].labels == data[name].labels).all()
