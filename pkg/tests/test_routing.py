import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsnenergy.network import DeploymentConfig, assign_levels, build_graph, compute_relay_degrees, deploy_random
from wsnenergy.routing import (
    DDTM,
    PDTM,
    CostMethod,
    WeightedDigraph,
    build_routing_tree,
    build_weighted_digraph,
    dijkstra,
    dijkstra_dense,
    edge_weight_ddtm,
    edge_weight_pdtm,
    tree_table,
    weight_matrix,
)


def test_cost_method_parse_and_validation():
    assert CostMethod.parse(" pdtm ") == CostMethod(PDTM)
    with pytest.raises(ValueError):
        CostMethod("SPT")
    with pytest.raises(ValueError):
        CostMethod(PDTM, alpha=3.0)


def test_pdtm_weight_hand_value():
    g = build_graph([(0, 0), (3, 4), (6, 8)], 5, [math.inf, 50.0, 50.0])
    assign_levels(g)
    compute_relay_degrees(g)
    relay, sender = g.nodes[1], g.nodes[2]
    # relay degree 1 (node 2 sits one level deeper), d^2 = 25, level 1
    assert relay.relay_degree == 1 and relay.level == 1
    assert edge_weight_pdtm(relay, sender) == 1 * 25 * 2 / 50.0
    assert edge_weight_ddtm(relay, sender) == 25
    relay.residual_energy = 0
    with pytest.raises(ValueError):
        edge_weight_pdtm(relay, sender)


def test_edges_point_relay_to_sender_and_respect_levels():
    g = build_graph([(0, 0), (3, 4), (6, 8)], 5, 10.0)
    assign_levels(g)
    compute_relay_degrees(g)
    dg = build_weighted_digraph(g, CostMethod(DDTM))
    assert {(u, v) for u, v, _ in dg.edges} == {(0, 1), (1, 2)}


def test_chain_tree_parents_point_toward_sink():
    g = build_graph([(0, 0), (3, 4), (6, 8)], 5, 10.0)
    t = build_routing_tree(g, CostMethod(PDTM))
    assert t.parent == [None, 0, 1]
    assert t.hops() == [0, 1, 2]
    assert "inf" not in tree_table(g, t)


def test_unreachable_nodes_have_no_parent():
    g = build_graph([(0, 0), (3, 4), (60, 80)], 5, 10.0)
    t = build_routing_tree(g, CostMethod(DDTM))
    assert t.parent[2] is None and t.dist[2] == math.inf and not t.reachable(2)
    assert t.hops()[2] is None


def test_dijkstra_rejects_negative_weights():
    with pytest.raises(ValueError):
        dijkstra(WeightedDigraph(2, [(0, 1, -1.0)]), 0)
    W = np.full((2, 2), np.inf)
    W[0, 1] = -1.0
    with pytest.raises(ValueError):
        dijkstra_dense(W, 0)


def test_tie_breaks_to_lowest_parent_id():
    # two equal-cost routes into node 3 via 1 and 2
    edges = [(0, 1, 1.0), (0, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0)]
    assert dijkstra(WeightedDigraph(4, edges), 0).parent[3] == 1
    W = np.full((4, 4), np.inf)
    for u, v, w in edges:
        W[u, v] = w
    assert dijkstra_dense(W, 0).parent[3] == 1


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1), st.booleans())
def test_dense_and_heap_dijkstra_agree(n, seed, integer_weights):
    rng = np.random.default_rng(seed)
    W = np.full((n, n), np.inf)
    edges = []
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < 0.35:
                w = float(rng.integers(0, 4)) if integer_weights else float(rng.exponential())
                W[u, v] = w
                edges.append((u, v, w))
    src = int(rng.integers(0, n))
    a = dijkstra(WeightedDigraph(n, edges), src)
    b = dijkstra_dense(W, src)
    assert a.parent == b.parent
    assert a.dist == b.dist


def test_degenerate_layout_trees_coincide():
    # sensors on a ring round the sink, each out of range of the others
    pos = [(150.0, 150.0)] + [(150 + 90 * math.cos(k * math.pi / 3), 150 + 90 * math.sin(k * math.pi / 3))
                              for k in range(6)]
    a = build_routing_tree(build_graph(pos, 90.0, [math.inf] + [100.0] * 6), CostMethod(PDTM))
    b = build_routing_tree(build_graph(pos, 90.0, [math.inf] + [100.0] * 6), CostMethod(DDTM))
    assert a.parent == b.parent == [None] + [0] * 6


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 30), st.integers(0, 2**32 - 1), st.floats(1e-6, 1e6), st.booleans())
def test_pdtm_tree_invariant_to_energy_scaling(n, seed, c, finite_sink):
    rng = np.random.default_rng(seed)
    pos = [(50.0, 50.0)] + [tuple(map(float, rng.integers(0, 301, 2))) for _ in range(n - 1)]
    e = rng.uniform(1, 1e5, n)
    if not finite_sink:
        e[0] = math.inf
    a = build_routing_tree(build_graph(pos, 120.0, e), CostMethod(PDTM))
    b = build_routing_tree(build_graph(pos, 120.0, e * c), CostMethod(PDTM))
    assert a.parent == b.parent


def test_sink_edges_cost_nothing_with_unbounded_sink():
    g = deploy_random(DeploymentConfig(n_nodes=20, tx_radius=150, rng_seed=1))
    assign_levels(g)
    compute_relay_degrees(g)
    W = weight_matrix(g, CostMethod(PDTM))
    row = W[g.sink_id]
    assert np.all(row[np.isfinite(row)] == 0)
