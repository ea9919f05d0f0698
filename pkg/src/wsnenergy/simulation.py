"""Timeslot simulation of data collection over a routing tree.

Each slot: rebuild the routing tree, let every alive reachable sensor
generate one packet, then drain the tree from the deepest nodes upward so
that every packet of the slot ends up delivered or lost before the slot
closes. The run stops once the sink has no alive neighbour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import ConstituentLedger, RadioParams, apply_consumption, rx_energy, tx_energy_sq
from .network import DeploymentConfig, NetworkGraph, deploy_random, topology_stats
from .network import UNREACHABLE, assign_levels, compute_relay_degrees
from .routing import DDTM, PDTM, CostMethod, RoutingTree, dijkstra_dense, weight_matrix


@dataclass(frozen=True)
class SimConfig:
    deployment: DeploymentConfig = DeploymentConfig()
    method: CostMethod = CostMethod(PDTM)
    radio: RadioParams = RadioParams()
    sense_cost: float = 0.0
    local_overhead: float = 0.0
    topo_overhead: float = 0.0
    max_timeslots: int = 100000
    slot_duration: float = 1.0

    def __post_init__(self):
        if self.max_timeslots < 1:
            raise ValueError("max_timeslots must be >= 1")
        for name in ("sense_cost", "local_overhead", "topo_overhead"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class TimeslotMetrics:
    slot_index: int
    generated: int = 0
    delivered: int = 0
    lost: int = 0
    new_dead: int = 0
    energy_consumed: float = 0.0
    ledger: ConstituentLedger = field(default_factory=ConstituentLedger)
    # Deepest hop count of any packet delivered this slot.
    max_hops: int = 0
    transmissions: int = 0
    # Radio energy actually paid this slot, split by side of the link.
    tx_energy: float = 0.0
    rx_energy: float = 0.0


@dataclass
class ExperimentRecord:
    config: SimConfig
    slots: list
    generated: int
    delivered: int
    lost: int
    dead_nodes_at_end: int
    lifetime: float
    final_energies: list
    initial_energy: float
    ledger: ConstituentLedger
    avg_hops: float = 0.0
    avg_neighbors: float = 0.0
    avg_distance: float = 0.0
    positions: list = field(default_factory=list)
    sink_id: int = 0

    @property
    def completed_slots(self) -> int:
        return len(self.slots)

    @property
    def energy_consumed(self) -> float:
        return self.ledger.total()

    @property
    def in_flight(self) -> int:
        return self.generated - self.delivered - self.lost


class SimulationState:
    """Mutable state of one run; owned by exactly one caller."""

    def __init__(self, graph: NetworkGraph, config: SimConfig):
        self.graph = graph
        self.config = config
        self.tree: RoutingTree | None = None
        self.hops: list = []
        self.slot = 0
        # Alive sensors already found cut off from the sink; they stop generating.
        self.disconnected: set = set()
        self._ddtm_key = None

    def sink_has_alive_neighbor(self) -> bool:
        nodes = self.graph.nodes
        return any(nodes[j].alive for j, _ in self.graph.adjacency[self.graph.sink_id])

    def rebuild(self) -> RoutingTree:
        # DDTM trees depend only on the alive set, so unchanged sets reuse the last tree.
        alive = tuple(n.alive for n in self.graph.nodes)
        if self.config.method.variant == DDTM and self._ddtm_key == alive and self.tree is not None:
            return self.tree
        assign_levels(self.graph)
        compute_relay_degrees(self.graph)
        W = weight_matrix(self.graph, self.config.method)
        self.tree = dijkstra_dense(W, self.graph.sink_id)
        self.hops = self.tree.hops()
        self._in_count = np.isfinite(W).sum(axis=0).tolist()
        self._ddtm_key = alive
        return self.tree

    def tree_is_energy_invariant(self) -> bool:
        """True when no parent choice can change while the alive set stays fixed."""
        if self.config.method.variant == DDTM:
            return True
        sink = self.graph.sink_id
        tree = self.tree
        for v, p in enumerate(tree.parent):
            if p is None or self._in_count[v] == 1:
                continue
            # a zero-cost hop straight to the lowest-id node cannot be beaten
            if not (p == sink == 0 and tree.dist[v] == 0):
                return False
        return True


def _charge(node, amount, constituent, metrics):
    """Charge up to the node's residual; returns False when it could not pay in full."""
    if node.is_sink or amount == 0:
        return True
    if amount <= node.residual_energy:
        apply_consumption(node, amount, constituent)
        metrics.ledger.add(constituent, amount)
        if not node.alive:
            metrics.new_dead += 1
        return True
    drained = node.residual_energy
    if drained > 0:
        apply_consumption(node, drained, constituent)
        metrics.ledger.add(constituent, drained)
    if node.alive:
        node.alive = False
    metrics.new_dead += 1
    return False


def run_timeslot(state: SimulationState) -> TimeslotMetrics:
    """Run one slot over the current routing tree (call ``state.rebuild()`` first)."""
    cfg = state.config
    graph = state.graph
    nodes = graph.nodes
    tree = state.tree if state.tree is not None else state.rebuild()
    hops = state.hops
    state.slot += 1
    m = TimeslotMetrics(slot_index=state.slot)

    sensors = [n for n in nodes if not n.is_sink and n.alive]
    for n in sensors:
        if cfg.local_overhead:
            _charge(n, cfg.local_overhead, "local", m)
        if n.alive and cfg.topo_overhead:
            _charge(n, cfg.topo_overhead, "global", m)

    for n in sensors:
        n.pending_packets = 0
        if not n.alive:
            continue
        if not tree.reachable(n.id):
            if n.id not in state.disconnected:
                state.disconnected.add(n.id)
                m.generated += 1
                m.lost += 1
            continue
        state.disconnected.discard(n.id)
        if cfg.sense_cost and not _charge(n, cfg.sense_cost, "individual", m):
            m.generated += 1
            m.lost += 1
            continue
        n.pending_packets = 1
        m.generated += 1

    order = sorted(
        (n for n in sensors if n.alive and tree.reachable(n.id)),
        key=lambda n: (-hops[n.id], n.id),
    )
    radio = cfg.radio
    for n in order:
        if not n.alive:
            m.lost += n.pending_packets
            n.pending_packets = 0
            continue
        held = n.pending_packets
        if held == 0:
            continue
        p = nodes[tree.parent[n.id]]
        per_tx = tx_energy_sq(radio, graph.sq_distance(n.id, p.id))
        per_rx = rx_energy(radio)
        while held:
            if not p.alive:
                m.lost += held
                held = 0
                break
            if not _charge(n, per_tx, "global", m):
                m.lost += held
                held = 0
                break
            held -= 1
            m.transmissions += 1
            m.tx_energy += per_tx
            if not _charge(p, per_rx, "global", m):
                # receiver died on reception; it loses this packet and its own backlog
                m.lost += 1 + p.pending_packets
                p.pending_packets = 0
                continue
            if not p.is_sink:
                m.rx_energy += per_rx
            if p.is_sink:
                m.delivered += 1
                m.max_hops = max(m.max_hops, hops[n.id])
            else:
                p.pending_packets += 1
        n.pending_packets = held

    m.energy_consumed = m.ledger.total()
    return m


def _fast_forward(state: SimulationState, m: TimeslotMetrics, before: dict, slots: list) -> None:
    """Replay a clean slot in bulk while every node can still afford it.

    Only valid when the slot lost nothing, killed nobody and the tree cannot
    change, so each following slot would repeat the same charges exactly.
    """
    cfg = state.config
    nodes = state.graph.nodes
    deltas = {}
    k = cfg.max_timeslots - state.slot
    for i, (e0, l0) in before.items():
        n = nodes[i]
        spent = e0 - n.residual_energy
        if spent > 0:
            deltas[i] = (spent, [b - a for a, b in zip(l0, n.ledger.as_tuple())])
            k = min(k, int(n.residual_energy // spent) - 1)
    if k < 1:
        return
    for i, (spent, parts) in deltas.items():
        n = nodes[i]
        n.residual_energy -= k * spent
        for f, part in zip(("individual", "local", "global_", "environment", "sink"), parts):
            if part:
                setattr(n.ledger, f, getattr(n.ledger, f) + k * part)
    for step in range(1, k + 1):
        slots.append(replace(m, slot_index=state.slot + step))
    state.slot += k


def run_experiment(
    config: SimConfig, graph: NetworkGraph | None = None, fast_forward: bool = True
) -> ExperimentRecord:
    """Alternate tree rebuilds and slots until the sink is cut off or the slot cap is hit.

    ``fast_forward`` skips over stretches of identical slots; it changes
    nothing but float rounding in the energies (nothing at all for integer
    energies).
    """
    if graph is None:
        graph = deploy_random(config.deployment)
    state = SimulationState(graph, config)
    initial = sum(n.residual_energy for n in graph.nodes if not n.is_sink)
    topo = topology_stats(graph)
    avg_hops = None
    slots = []
    while state.slot < config.max_timeslots and state.sink_has_alive_neighbor():
        tree = state.rebuild()
        if avg_hops is None:
            reach = [h for i, h in enumerate(state.hops) if h is not None and i != graph.sink_id]
            avg_hops = sum(reach) / len(reach) if reach else 0.0
        before = None
        if fast_forward:
            before = {
                n.id: (n.residual_energy, n.ledger.as_tuple())
                for n in graph.nodes if n.alive and not n.is_sink
            }
        m = run_timeslot(state)
        slots.append(m)
        if before is not None and m.new_dead == 0 and m.lost == 0 and state.tree_is_energy_invariant():
            _fast_forward(state, m, before, slots)

    ledger = ConstituentLedger()
    for n in graph.nodes:
        if not n.is_sink:
            ledger.merge(n.ledger)
    energy_dead = sum(1 for n in graph.nodes if not n.is_sink and not n.alive)
    # alive sensors with no path to the sink at the end also count as dead
    assign_levels(graph)
    cut_off = sum(1 for n in graph.nodes if not n.is_sink and n.alive and n.level == UNREACHABLE)
    return ExperimentRecord(
        config=config,
        slots=slots,
        generated=sum(s.generated for s in slots),
        delivered=sum(s.delivered for s in slots),
        lost=sum(s.lost for s in slots),
        dead_nodes_at_end=energy_dead + cut_off,
        lifetime=len(slots) * config.slot_duration,
        final_energies=[n.residual_energy for n in graph.nodes],
        initial_energy=initial,
        ledger=ledger,
        avg_hops=avg_hops or 0.0,
        avg_neighbors=topo["avg_neighbors"],
        avg_distance=topo["avg_distance"],
        positions=[tuple(n.pos) for n in graph.nodes],
        sink_id=graph.sink_id,
    )


@dataclass
class MethodComparison:
    pdtm: ExperimentRecord
    ddtm: ExperimentRecord

    @property
    def deltas(self) -> dict:
        """PDTM minus DDTM for each headline total."""
        return {
            "delivered": self.pdtm.delivered - self.ddtm.delivered,
            "lost": self.pdtm.lost - self.ddtm.lost,
            "dead_nodes": self.pdtm.dead_nodes_at_end - self.ddtm.dead_nodes_at_end,
            "lifetime": self.pdtm.lifetime - self.ddtm.lifetime,
            "energy": self.pdtm.energy_consumed - self.ddtm.energy_consumed,
        }


def compare_methods(config: SimConfig) -> MethodComparison:
    """Run PDTM and DDTM on the identical deployment described by ``config``."""
    alpha = config.method.alpha
    pdtm = run_experiment(replace(config, method=CostMethod(PDTM, alpha)))
    ddtm = run_experiment(replace(config, method=CostMethod(DDTM, alpha)))
    return MethodComparison(pdtm, ddtm)


def conservation_error(record: ExperimentRecord) -> float:
    """Relative mismatch between energy drawn from the sensors and the ledger total."""
    sink = record.sink_id
    final = sum(e for i, e in enumerate(record.final_energies) if i != sink)
    drawn = record.initial_energy - final
    return abs(drawn - record.ledger.total()) / max(record.initial_energy, 1e-300)
