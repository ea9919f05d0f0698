"""Energy arithmetic: radio costs, per-constituent ledgers and the packet-flow model.

Energy is a dimensionless unit throughout. With the default radio parameters
(``e_amp=1``, ``e_elec=0``, ``alpha=2``, one bit per packet) a hop of length
``d`` costs ``d**2`` per packet and receiving is free.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .network import Node

CONSTITUENTS = ("individual", "local", "global", "environment", "sink")
FLOW_NAMES = CONSTITUENTS


@dataclass(frozen=True)
class RadioParams:
    e_amp: float = 1.0
    e_elec: float = 0.0
    alpha: float = 2.0
    packet_bits: int = 1

    def __post_init__(self):
        if self.e_amp < 0 or self.e_elec < 0:
            raise ValueError("radio energies must be non-negative")
        if not 1.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (1, 2], got {self.alpha}")
        if self.packet_bits < 1:
            raise ValueError("packet_bits must be >= 1")


def tx_energy(params: RadioParams, d: float, packets: int = 1) -> float:
    """Transmit-amplifier energy for ``packets`` packets over distance ``d``."""
    if d < 0:
        raise ValueError(f"distance must be non-negative, got {d}")
    return params.e_amp * d ** params.alpha * params.packet_bits * packets


def tx_energy_sq(params: RadioParams, d2: float, packets: int = 1) -> float:
    """Same as :func:`tx_energy` but from a squared distance.

    Integer squared distances stay exact for ``alpha == 2``, which keeps the
    ledger bit-exact on grid deployments.
    """
    if d2 < 0:
        raise ValueError(f"squared distance must be non-negative, got {d2}")
    return params.e_amp * d2 ** (params.alpha / 2.0) * params.packet_bits * packets


def rx_energy(params: RadioParams, packets: int = 1) -> float:
    if packets < 0:
        raise ValueError("packet count must be non-negative")
    return params.e_elec * params.packet_bits * packets


@dataclass
class ConstituentLedger:
    """Energy spent per constituent over a window; ``environment`` < 0 means harvested."""

    individual: float = 0.0
    local: float = 0.0
    global_: float = 0.0
    environment: float = 0.0
    sink: float = 0.0

    def add(self, constituent: str, amount: float) -> None:
        attr = _slot_attr(constituent)
        setattr(self, attr, getattr(self, attr) + amount)

    def get(self, constituent: str) -> float:
        return getattr(self, _slot_attr(constituent))

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))

    def total(self, weights: Sequence[float] = (1.0, 1.0, 1.0, 1.0, 1.0)) -> float:
        if len(weights) != 5:
            raise ValueError("need exactly five constituent weights")
        return float(sum(w * v for w, v in zip(weights, self.as_tuple())))

    def merge(self, other: "ConstituentLedger") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))


_ATTRS = {c: ("global_" if c == "global" else c) for c in CONSTITUENTS}


def _slot_attr(constituent: str) -> str:
    try:
        return _ATTRS[constituent]
    except (KeyError, TypeError):
        raise KeyError(f"unknown ledger slot {constituent!r}; expected one of {CONSTITUENTS}") from None


def apply_consumption(node: "Node", amount: float, constituent: str) -> "Node":
    """Charge ``amount`` to ``node`` and book it under ``constituent``.

    Residual energy floors at zero; the node dies when it reaches zero
    (the sink is exempt). Callers that need the ledger to balance exactly
    must not request more than the node holds.
    """
    if amount < 0:
        raise ValueError("consumption must be non-negative; use harvest() for gains")
    node.ledger.add(constituent, amount)
    if node.is_sink:
        return node
    node.residual_energy = max(node.residual_energy - amount, 0.0)
    if node.residual_energy <= 0:
        node.alive = False
    return node


def harvest(node: "Node", h: float) -> "Node":
    if h < 0:
        raise ValueError("harvested energy must be non-negative")
    if h == 0:
        return node
    node.residual_energy += h
    node.ledger.add("environment", -h)
    if node.residual_energy > 0:
        node.alive = True
    return node


# -- packet-flow model --------------------------------------------------------

@dataclass(frozen=True)
class EdmFlowParams:
    """Per-task packet counts and conditional probabilities for one sensor.

    ``b_*`` are packet counts; ``p_*`` are probabilities supplied directly.
    """

    b_os: float = 0.0
    b_sec_ind: float = 0.0
    p_sense: float = 0.0
    b_sec_loc: float = 0.0
    b_mon: float = 0.0
    b_ohead_loc: float = 0.0
    p_coll: float = 0.0
    p_ohear: float = 0.0
    p_idle: float = 0.0
    b_sec_glob: float = 0.0
    b_topo: float = 0.0
    b_rout: float = 0.0
    b_ohead_glob: float = 0.0
    p_pktls: float = 0.0
    b_sec_env: float = 0.0
    b_ph: float = 0.0
    b_sec_snk: float = 0.0
    b_ohead_snk: float = 0.0


def edm_flow_individual(p: EdmFlowParams) -> float:
    if p.p_sense >= 1:
        raise ValueError("p_sense must be < 1")
    return (p.b_os + p.b_sec_ind) / (1.0 - p.p_sense)


def edm_flow_local(p: EdmFlowParams) -> float:
    lost = p.p_coll + p.p_ohear + p.p_idle
    if lost >= 1:
        raise ValueError("p_coll + p_ohear + p_idle must be < 1")
    return (p.b_sec_loc + p.b_mon + p.b_ohead_loc) / (1.0 - lost)


def edm_flow_global(p: EdmFlowParams) -> float:
    if p.p_pktls >= 1:
        raise ValueError("p_pktls must be < 1")
    return (p.b_sec_glob + p.b_topo + p.b_rout + p.b_ohead_glob) / (1.0 - p.p_pktls)


def edm_flow_environment(p: EdmFlowParams) -> float:
    return p.b_sec_env + p.b_ph


def edm_flow_sink(p: EdmFlowParams) -> float:
    return p.b_sec_snk + p.b_ohead_snk


def edm_flows(p: EdmFlowParams) -> tuple:
    """All five constituent flows, in :data:`FLOW_NAMES` order."""
    return (
        edm_flow_individual(p),
        edm_flow_local(p),
        edm_flow_global(p),
        edm_flow_environment(p),
        edm_flow_sink(p),
    )


def local_overhearing_diagnostic(e_local: float, e_idle: float, e_coll: float, e_ohear: float) -> bool:
    """True when local energy stays within idle + collision + overhearing energy.

    Reported only; the simulator never enforces it.
    """
    return e_local <= e_idle + e_coll + e_ohear


@dataclass(frozen=True)
class EdmModel:
    alpha0: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    alpha3: float = 0.0
    alpha4: float = 0.0
    alpha5: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f"alpha{i}") for i in range(6)], dtype=float)

    @classmethod
    def from_array(cls, a) -> "EdmModel":
        a = [float(v) for v in a]
        if len(a) != 6:
            raise ValueError("EdmModel needs six coefficients")
        return cls(*a)


def edm_predict(model: EdmModel, flows) -> float | np.ndarray:
    """Overall energy from the five flows; ``flows`` may be one row or an (M, 5) array."""
    a = model.as_array()
    f = np.asarray(flows, dtype=float)
    out = a[0] + f @ a[1:]
    return float(out) if out.ndim == 0 else out


class RankDeficiencyError(ValueError):
    def __init__(self, columns):
        self.columns = tuple(columns)
        super().__init__(
            "design matrix is rank deficient; collinear columns: " + ", ".join(self.columns)
        )


@dataclass
class EdmFitResult:
    model: EdmModel
    columns: tuple
    residual: np.ndarray = field(repr=False)


def edm_fit(flows, energy, columns: Sequence[str] | None = None, return_details: bool = False):
    """Least-squares fit of the intercept plus one coefficient per flow column.

    ``columns`` selects which flows enter the design; coefficients of the
    rest are reported as 0. ``None`` uses every flow column that is not
    identically zero.
    """
    F = np.asarray(flows, dtype=float)
    E = np.asarray(energy, dtype=float)
    if F.ndim != 2 or F.shape[1] != 5:
        raise ValueError("flows must be an (M, 5) array")
    if F.shape[0] != E.shape[0]:
        raise ValueError("flows and energy differ in length")
    if columns is None:
        columns = [name for j, name in enumerate(FLOW_NAMES) if np.any(F[:, j] != 0)]
    idx = [FLOW_NAMES.index(c) for c in columns]
    names = ("intercept",) + tuple(columns)
    B = np.column_stack([np.ones(len(E))] + [F[:, j] for j in idx])
    if B.shape[0] < 6:
        raise ValueError(f"need at least 6 observations, got {B.shape[0]}")
    _check_rank(B, names)
    coef, *_ = np.linalg.lstsq(B, E, rcond=None)
    full = np.zeros(6)
    full[0] = coef[0]
    for k, j in enumerate(idx):
        full[j + 1] = coef[k + 1]
    model = EdmModel.from_array(full)
    if return_details:
        return EdmFitResult(model, tuple(columns), E - B @ coef)
    return model


def _check_rank(B: np.ndarray, names: Sequence[str]) -> None:
    # Column-scaled SVD so the rank test does not depend on flow magnitudes.
    norms = np.linalg.norm(B, axis=0)
    if np.any(norms == 0):
        raise RankDeficiencyError([n for n, v in zip(names, norms) if v == 0])
    _, s, vt = np.linalg.svd(B / norms, full_matrices=True)
    tol = s.max() * max(B.shape) * np.finfo(float).eps * 1e3
    null = vt[np.sum(s > tol):]
    if len(null):
        involved = np.any(np.abs(null) > 1e-8, axis=0)
        raise RankDeficiencyError([n for n, hit in zip(names, involved) if hit])
