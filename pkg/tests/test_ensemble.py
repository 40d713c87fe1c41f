import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorgroup.config import TopologySpec
from mirrorgroup.dynamics import OscillatorState
from mirrorgroup.ensemble import (GroupState, Topology, make_topology, neighbor_mean,
                                  neighbor_means)


def group(xs, vs=None):
    vs = [0.0] * len(xs) if vs is None else vs
    return GroupState(tuple(OscillatorState(x, v) for x, v in zip(xs, vs)))


def test_complete_graph():
    t = make_topology("complete", 4)
    assert t.adjacency.sum() == 12
    assert not np.any(np.diag(t.adjacency))
    assert list(t.degree) == [3, 3, 3, 3]


def test_star_center():
    t = make_topology("star", 4, center=2)
    assert list(t.degree) == [1, 1, 3, 1]


def test_star_center_from_one_based_config():
    t = TopologySpec.from_dict({"kind": "star", "center": 3}).build(4)
    assert t == make_topology("star", 4, center=2)


def test_custom_edges_from_config_are_one_based():
    t = TopologySpec.from_dict({"kind": "custom", "edges": [[1, 2], [2, 3], [3, 4]]}).build(4)
    assert t == make_topology("path", 4)


def test_two_node_graphs_coincide():
    p, r, c = (make_topology(k, 2) for k in ("path", "ring", "complete"))
    assert p == r == c


def test_path_and_ring_structure():
    p = make_topology("path", 4)
    assert p.edges() == [(0, 1), (1, 2), (2, 3)]
    r = make_topology("ring", 4)
    assert r.edges() == [(0, 1), (0, 3), (1, 2), (2, 3)]


@pytest.mark.parametrize("args", [("complete", 1), ("star", 4, 4), ("wheel", 4)])
def test_invalid_topologies(args):
    with pytest.raises(ValueError):
        make_topology(*args)


def test_topology_invariants_enforced():
    with pytest.raises(ValueError, match="self-loops"):
        Topology(2, np.ones((2, 2), dtype=bool))
    with pytest.raises(ValueError, match="symmetric"):
        Topology(2, np.array([[0, 1], [0, 0]], dtype=bool))
    with pytest.raises(ValueError, match="isolated"):
        Topology.from_edges(3, [(0, 1)])


def test_neighbor_mean_of_identical_agents():
    t = make_topology("ring", 5)
    g = group([0.3] * 5, [-0.7] * 5)
    for k in range(5):
        assert neighbor_mean(g, t, k) == pytest.approx((0.3, -0.7))


def test_neighbor_mean_arithmetic():
    g = group([0.1, 0.2, 0.6, 5.0])
    assert neighbor_mean(g, make_topology("complete", 4), 3) == pytest.approx((0.3, 0.0))


def test_star_leaf_sees_only_the_hub():
    g = group([0.1, 0.2, 0.6, 5.0], [1.0, 2.0, 3.0, 4.0])
    assert neighbor_mean(g, make_topology("star", 4, center=2), 0) == (0.6, 3.0)


def test_neighbor_mean_rejects_wrong_group_size():
    with pytest.raises(ValueError):
        neighbor_mean(group([0.0, 1.0]), make_topology("complete", 3), 0)


positions = st.lists(st.floats(-5, 5), min_size=5, max_size=5)


@settings(max_examples=100, deadline=None)
@given(xs=positions, vs=positions, perm=st.permutations(range(5)),
       kind=st.sampled_from(["complete", "ring", "path", "star"]))
def test_neighbor_mean_permutation_equivariant(xs, vs, perm, kind):
    t = make_topology(kind, 5, center=1)
    x, v = np.array(xs), np.array(vs)
    tp = t.permuted(perm)
    gp = group(x[list(perm)], v[list(perm)])
    g = group(xs, vs)
    for i, old in enumerate(perm):
        assert neighbor_mean(gp, tp, i) == pytest.approx(neighbor_mean(g, t, old), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(xs=positions, vs=positions)
def test_vectorised_means_match_scalar(xs, vs):
    for kind in ("complete", "ring", "path", "star"):
        t = make_topology(kind, 5, center=3)
        xb, vb = neighbor_means(np.array(xs), np.array(vs), t)
        g = group(xs, vs)
        for k in range(5):
            assert (xb[k], vb[k]) == pytest.approx(neighbor_mean(g, t, k), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(xs=positions)
def test_complete_graph_conserves_sum(xs):
    t = make_topology("complete", 5)
    g = group(xs)
    total = sum(4 * neighbor_mean(g, t, k)[0] for k in range(5))
    assert total == pytest.approx(4 * sum(xs), abs=1e-9)
