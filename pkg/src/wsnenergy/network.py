"""Node deployment, disk-model neighbourhoods, hop levels and relay degrees."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .energy import ConstituentLedger

# Level of a node with no alive path to the sink.
UNREACHABLE = 2**31 - 1


class Position(NamedTuple):
    x: float
    y: float


@dataclass
class Node:
    id: int
    pos: Position
    residual_energy: float
    level: int = UNREACHABLE
    relay_degree: int = 0
    alive: bool = True
    pending_packets: int = 0
    is_sink: bool = False
    ledger: ConstituentLedger = field(default_factory=ConstituentLedger)


@dataclass(frozen=True)
class DeploymentConfig:
    n_nodes: int = 50
    tx_radius: float = 100.0
    area: tuple = (600, 300)
    sink_position: tuple = (50, 50)
    rng_seed: int = 0
    initial_energy: float = 100000.0
    # Energy the sink reports in PDTM weights. The sink is mains powered, so
    # by default its outgoing edges cost nothing; None copies initial_energy.
    sink_energy: float | None = math.inf

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("need the sink plus at least one sensor")
        if self.tx_radius <= 0:
            raise ValueError("tx_radius must be positive")
        if self.initial_energy <= 0:
            raise ValueError("initial_energy must be positive")
        if self.sink_energy is not None and not self.sink_energy > 0:
            raise ValueError("sink_energy must be positive")
        w, h = self.area
        if w <= 0 or h <= 0:
            raise ValueError(f"area dimensions must be positive, got {self.area}")
        sx, sy = self.sink_position
        if not (0 <= sx <= w and 0 <= sy <= h):
            raise ValueError("sink position lies outside the area")


@dataclass
class NetworkGraph:
    nodes: list
    sink_id: int
    tx_radius: float
    adjacency: list
    area: tuple
    neighbor_mask: np.ndarray | None = field(default=None, repr=False, compare=False)
    sq_dist: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.sq_dist is None:
            xy = np.array([n.pos for n in self.nodes], dtype=float).reshape(-1, 2)
            self.sq_dist = (xy[:, None, 0] - xy[None, :, 0]) ** 2 + (xy[:, None, 1] - xy[None, :, 1]) ** 2
        if self.neighbor_mask is None:
            mask = np.zeros((len(self.nodes), len(self.nodes)), dtype=bool)
            for i, adj in enumerate(self.adjacency):
                for j, _ in adj:
                    mask[i, j] = True
            self.neighbor_mask = mask

    def __len__(self):
        return len(self.nodes)

    @property
    def sink(self) -> Node:
        return self.nodes[self.sink_id]

    def sq_distance(self, i: int, j: int) -> float:
        a, b = self.nodes[i].pos, self.nodes[j].pos
        return (a.x - b.x) ** 2 + (a.y - b.y) ** 2

    def alive_ids(self):
        return [n.id for n in self.nodes if n.alive]


def build_graph(positions, tx_radius: float, energies, sink_id: int = 0, area=(600, 300)) -> NetworkGraph:
    """Build a graph from explicit positions; node ``sink_id`` is the sink."""
    if tx_radius <= 0:
        raise ValueError("tx_radius must be positive")
    if np.isscalar(energies):
        energies = [energies] * len(positions)
    nodes = [
        Node(id=i, pos=Position(*p), residual_energy=float(e), is_sink=(i == sink_id))
        for i, (p, e) in enumerate(zip(positions, energies))
    ]
    nodes[sink_id].level = 0
    return NetworkGraph(nodes, sink_id, float(tx_radius), _adjacency(nodes, tx_radius), tuple(area))


def _adjacency(nodes, tx_radius):
    xy = np.array([n.pos for n in nodes], dtype=float)
    d2 = (xy[:, None, 0] - xy[None, :, 0]) ** 2 + (xy[:, None, 1] - xy[None, :, 1]) ** 2
    # Inclusive boundary, compared on squared distances so grid layouts stay exact.
    within = d2 <= float(tx_radius) ** 2
    np.fill_diagonal(within, False)
    adj = []
    for i in range(len(nodes)):
        js = np.flatnonzero(within[i])
        adj.append([(int(j), math.sqrt(d2[i, j])) for j in js])
    return adj


def deploy_random(config: DeploymentConfig) -> NetworkGraph:
    """Sink at ``config.sink_position`` plus ``n_nodes - 1`` sensors on the integer grid.

    Positions come from numpy's PCG64 generator seeded with ``config.rng_seed``.
    """
    w, h = config.area
    if w <= 0 or h <= 0:
        raise ValueError(f"area dimensions must be positive, got {config.area}")
    rng = np.random.Generator(np.random.PCG64(config.rng_seed))
    m = config.n_nodes - 1
    xs = rng.integers(0, int(math.floor(w)), size=m, endpoint=True)
    ys = rng.integers(0, int(math.floor(h)), size=m, endpoint=True)
    positions = [tuple(config.sink_position)] + [(int(x), int(y)) for x, y in zip(xs, ys)]
    sink_e = config.sink_energy if config.sink_energy is not None else config.initial_energy
    energies = [sink_e] + [config.initial_energy] * m
    return build_graph(positions, config.tx_radius, energies, sink_id=0, area=config.area)


def neighbors(graph: NetworkGraph, i: int) -> list:
    if not 0 <= i < len(graph.nodes):
        raise IndexError(f"no node with id {i}")
    return list(graph.adjacency[i])


def assign_levels(graph: NetworkGraph) -> list:
    """Breadth-first hop count from the sink over alive nodes."""
    nodes = graph.nodes
    alive = np.fromiter((n.alive for n in nodes), dtype=bool, count=len(nodes))
    level = np.full(len(nodes), UNREACHABLE, dtype=np.int64)
    frontier = np.zeros(len(nodes), dtype=bool)
    frontier[graph.sink_id] = True
    level[graph.sink_id] = 0
    depth = 0
    while frontier.any():
        depth += 1
        reached = graph.neighbor_mask[frontier].any(axis=0) & alive & (level == UNREACHABLE)
        level[reached] = depth
        frontier = reached
    out = level.tolist()
    for n, lv in zip(nodes, out):
        n.level = lv
    return out


def compute_relay_degrees(graph: NetworkGraph) -> list:
    """Number of alive neighbours at the same or a higher level than each node."""
    nodes = graph.nodes
    alive = np.fromiter((n.alive for n in nodes), dtype=bool, count=len(nodes))
    level = np.fromiter((n.level for n in nodes), dtype=np.int64, count=len(nodes))
    senders = graph.neighbor_mask & alive[None, :] & (level[None, :] >= level[:, None])
    degree = np.where(alive, senders.sum(axis=1), 0)
    for n, d in zip(nodes, degree.tolist()):
        n.relay_degree = d
    return degree.tolist()


def graph_table(graph: NetworkGraph) -> str:
    """Tab-separated snapshot, one node per line."""
    lines = ["id\tx\ty\tenergy\tlevel\trelay_degree\talive"]
    for n in graph.nodes:
        level = "inf" if n.level == UNREACHABLE else str(n.level)
        lines.append(
            f"{n.id}\t{n.pos.x:g}\t{n.pos.y:g}\t{n.residual_energy!r}\t{level}\t{n.relay_degree}\t{int(n.alive)}"
        )
    return "\n".join(lines) + "\n"


def topology_stats(graph: NetworkGraph) -> dict:
    """Mean neighbour count and mean neighbour distance over sensors."""
    sensors = [n.id for n in graph.nodes if not n.is_sink]
    counts = [len(graph.adjacency[i]) for i in sensors]
    dists = [d for i in sensors for _, d in graph.adjacency[i]]
    return {
        "avg_neighbors": float(np.mean(counts)) if counts else 0.0,
        "avg_distance": float(np.mean(dists)) if dists else 0.0,
    }
