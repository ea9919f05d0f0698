"""Edge costs, the level-constrained digraph and Dijkstra routing trees.

Edges point from relay to sender: an edge ``i -> j`` exists when ``j`` is an
alive neighbour of alive ``i`` with ``level(i) <= level(j)``. Running
Dijkstra from the sink over these edges therefore gives every sensor a
parent that is its next hop toward the sink.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .network import UNREACHABLE, NetworkGraph, Node, assign_levels, compute_relay_degrees

PDTM = "PDTM"
DDTM = "DDTM"


@dataclass(frozen=True)
class CostMethod:
    variant: str = PDTM
    alpha: float = 2.0

    def __post_init__(self):
        if self.variant not in (PDTM, DDTM):
            raise ValueError(f"unknown cost method {self.variant!r}")
        if not 1.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (1, 2], got {self.alpha}")

    @classmethod
    def parse(cls, text: str, alpha: float = 2.0) -> "CostMethod":
        return cls(text.strip().upper(), alpha)


@dataclass
class WeightedDigraph:
    n: int
    edges: list

    def out_edges(self) -> list:
        out = [[] for _ in range(self.n)]
        for u, v, w in self.edges:
            out[u].append((v, w))
        return out


@dataclass
class RoutingTree:
    dist: list
    parent: list

    def reachable(self, v: int) -> bool:
        return self.dist[v] != math.inf

    def hops(self) -> list:
        """Hop count along parent pointers, ``None`` where unreachable."""
        n = len(self.parent)
        out = [None] * n
        for v in range(n):
            if not self.reachable(v):
                continue
            chain = []
            u = v
            while out[u] is None and self.parent[u] is not None:
                chain.append(u)
                u = self.parent[u]
            base = out[u] if out[u] is not None else 0
            out[u] = base
            for k, w in enumerate(reversed(chain), start=1):
                out[w] = base + k
        return out


def _sq(a: Node, b: Node) -> float:
    return (a.pos.x - b.pos.x) ** 2 + (a.pos.y - b.pos.y) ** 2


def edge_weight_pdtm(relay: Node, sender: Node, alpha: float = 2.0) -> float:
    """Relay cost ``O * d**alpha * (L + 1) / E`` taken from the relay's state.

    The sink's ``residual_energy`` holds its fixed stand-in energy.
    """
    if relay.residual_energy <= 0:
        raise ValueError(f"relay {relay.id} has no residual energy")
    return relay.relay_degree * _sq(relay, sender) ** (alpha / 2.0) * (relay.level + 1) / relay.residual_energy


def edge_weight_ddtm(relay: Node, sender: Node) -> float:
    return _sq(relay, sender)


def weight_matrix(graph: NetworkGraph, method: CostMethod) -> np.ndarray:
    """Dense relay-to-sender weights; ``inf`` where no edge exists.

    Call after :func:`assign_levels` and :func:`compute_relay_degrees`.
    """
    nodes = graph.nodes
    n = len(nodes)
    alive = np.fromiter((x.alive for x in nodes), dtype=bool, count=n)
    level = np.fromiter((x.level for x in nodes), dtype=np.int64, count=n)
    ok = graph.neighbor_mask & alive[:, None] & alive[None, :] & (level[:, None] <= level[None, :])
    ok &= (level != UNREACHABLE)[:, None]
    ii, jj = np.nonzero(ok)
    d2 = graph.sq_dist[ii, jj]
    if method.variant == PDTM:
        energy = np.fromiter((x.residual_energy for x in nodes), dtype=float, count=n)
        if np.any(energy[ii] <= 0):
            bad = int(ii[np.argmax(energy[ii] <= 0)])
            raise ValueError(f"relay {bad} has no residual energy")
        degree = np.fromiter((x.relay_degree for x in nodes), dtype=float, count=n)
        # same operation order as edge_weight_pdtm so both give identical floats
        w = degree[ii] * d2 ** (method.alpha / 2.0) * (level[ii] + 1) / energy[ii]
    else:
        w = d2
    W = np.full((n, n), np.inf)
    W[ii, jj] = w
    return W


def build_weighted_digraph(graph: NetworkGraph, method: CostMethod) -> WeightedDigraph:
    """Level-constrained relay-to-sender edges, listed in (relay, sender) id order."""
    W = weight_matrix(graph, method)
    ii, jj = np.nonzero(np.isfinite(W))
    return WeightedDigraph(len(W), list(zip(ii.tolist(), jj.tolist(), W[ii, jj].tolist())))


def dijkstra(dg: WeightedDigraph, source: int, tie_rtol: float = 1e-12) -> RoutingTree:
    """Single-source shortest paths with a lowest-id parent tie-break.

    Two candidate distances within ``tie_rtol`` (relative) are treated as a
    tie so that rescaling every weight by a constant cannot flip a parent
    choice through rounding alone.
    """
    for u, v, w in dg.edges:
        if w < 0:
            raise ValueError(f"negative edge weight {w} on ({u}, {v})")
    out = dg.out_edges()
    dist = [math.inf] * dg.n
    parent = [None] * dg.n
    done = [False] * dg.n
    dist[source] = 0
    heap = [(0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u] or d > dist[u]:
            continue
        done[u] = True
        for v, w in out[u]:
            if done[v]:
                continue
            nd = d + w
            dv = dist[v]
            if dv == math.inf:
                dist[v], parent[v] = nd, u
                heapq.heappush(heap, (nd, v))
            elif math.isclose(nd, dv, rel_tol=tie_rtol, abs_tol=0.0):
                if u < parent[v]:
                    parent[v] = u
                if nd < dv:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
            elif nd < dv:
                dist[v], parent[v] = nd, u
                heapq.heappush(heap, (nd, v))
    return RoutingTree(dist, parent)


def dijkstra_dense(W: np.ndarray, source: int, tie_rtol: float = 1e-12) -> RoutingTree:
    """:func:`dijkstra` on a weight matrix (``inf`` = no edge), O(n^2) with numpy rows.

    Settles nodes in the same (distance, id) order and applies the same
    tie rule, so both versions return the same tree.
    """
    W = np.asarray(W, dtype=float)
    n = len(W)
    if np.any(W < 0):
        u, v = np.argwhere(W < 0)[0]
        raise ValueError(f"negative edge weight {W[u, v]} on ({u}, {v})")
    dist = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    dist[source] = 0.0
    while True:
        open_dist = np.where(done, np.inf, dist)
        u = int(np.argmin(open_dist))
        d = open_dist[u]
        if d == np.inf:
            break
        done[u] = True
        row = W[u]
        cand = np.isfinite(row) & ~done
        if not cand.any():
            continue
        nd = d + row
        dv = dist
        fresh = cand & np.isinf(dv)
        with np.errstate(invalid="ignore"):
            tie = cand & ~fresh & (np.abs(nd - dv) <= tie_rtol * np.maximum(np.abs(nd), np.abs(dv)))
        better = cand & ~fresh & ~tie & (nd < dv)
        take = fresh | better
        dist[take] = nd[take]
        parent[take] = u
        lower = tie & (u < parent)
        parent[lower] = u
        dist[tie] = np.minimum(dist[tie], nd[tie])
    par = [None if p < 0 else int(p) for p in parent.tolist()]
    dl = [math.inf if x == np.inf else x for x in dist.tolist()]
    dl[source] = 0
    return RoutingTree(dl, par)


def build_routing_tree(graph: NetworkGraph, method: CostMethod) -> RoutingTree:
    """Levels, relay degrees, weighted digraph and Dijkstra from the sink, in that order."""
    assign_levels(graph)
    compute_relay_degrees(graph)
    return dijkstra_dense(weight_matrix(graph, method), graph.sink_id)


def tree_table(graph: NetworkGraph, tree: RoutingTree) -> str:
    lines = ["id\tparent\tdist\tlevel"]
    for n in graph.nodes:
        p = "-" if tree.parent[n.id] is None else str(tree.parent[n.id])
        d = "inf" if tree.dist[n.id] == math.inf else repr(tree.dist[n.id])
        level = "inf" if n.level == UNREACHABLE else str(n.level)
        lines.append(f"{n.id}\t{p}\t{d}\t{level}")
    return "\n".join(lines) + "\n"
