"""Seeded batch experiments: method sweeps, analysis datasets, EDM flows, and the analysis pipeline.

Every cell's layout seed comes from ``SeedSequence([base_seed, n, tx, index])``,
so a cell never depends on which other cells or methods are in the grid, and
PDTM/DDTM cells with the same index share one layout.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .analytics.dataset import Dataset
from .analytics.forest import forest_fit
from .analytics.metrics import R2_CONVENTIONAL, cross_val_predict, evaluate
from .analytics.stats import dependency_report, select_prevalent
from .energy import FLOW_NAMES, RadioParams, edm_fit, edm_predict
from .io import Table
from .network import DeploymentConfig
from .routing import DDTM, PDTM, CostMethod
from .simulation import ExperimentRecord, SimConfig, conservation_error, run_experiment


def cell_seed(base_seed: int, *key) -> int:
    """Stable 63-bit seed for a grid cell; floats in the key are taken to 1e-6."""
    parts = [int(base_seed)]
    for k in key:
        parts.append(int(k) if float(k).is_integer() else int(round(float(k) * 1e6)))
    state = np.random.SeedSequence(parts).generate_state(1, dtype=np.uint64)[0]
    return int(state >> np.uint64(1))


# -- method sweep ----------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    node_counts: tuple = (100, 150, 200, 250, 300)
    tx_radii: tuple = (100, 200, 300)
    graphs_per_cell: int = 30
    base_seed: int = 0
    methods: tuple = (PDTM, DDTM)
    alpha: float = 2.0
    area: tuple = (600, 300)
    sink_position: tuple = (50, 50)
    initial_energy: float = 100000.0
    e_amp: float = 1.0
    e_elec: float = 0.0
    max_timeslots: int = 100000

    def __post_init__(self):
        if not (self.node_counts and self.tx_radii and self.methods):
            raise ValueError("node_counts, tx_radii and methods must be non-empty")
        if self.graphs_per_cell < 1:
            raise ValueError("graphs_per_cell must be >= 1")
        for m in self.methods:
            CostMethod(m, self.alpha)

    def sim_config(self, n, tx, seed, method) -> SimConfig:
        dep = DeploymentConfig(
            n_nodes=int(n), tx_radius=float(tx), area=tuple(self.area),
            sink_position=tuple(self.sink_position), rng_seed=seed,
            initial_energy=float(self.initial_energy),
        )
        radio = RadioParams(e_amp=self.e_amp, e_elec=self.e_elec, alpha=self.alpha)
        return SimConfig(dep, CostMethod(method, self.alpha), radio, max_timeslots=self.max_timeslots)

    def cells(self):
        for n in self.node_counts:
            for tx in self.tx_radii:
                for i in range(self.graphs_per_cell):
                    seed = cell_seed(self.base_seed, n, tx, i)
                    for m in self.methods:
                        yield n, tx, i, m, seed


SWEEP_COLUMNS = [
    "n_nodes", "tx_radius", "graph_index", "method", "seed", "generated", "delivered",
    "lost", "dead", "energy_dead", "lifetime", "energy", "avg_hops", "avg_neighbors",
    "avg_distance", "conservation_error",
]


def record_row(record: ExperimentRecord) -> dict:
    dep = record.config.deployment
    energy_dead = sum(1 for i, n in enumerate(record.final_energies) if i != record.sink_id and n <= 0)
    return {
        "n_nodes": dep.n_nodes,
        "tx_radius": dep.tx_radius,
        "method": record.config.method.variant,
        "seed": dep.rng_seed,
        "generated": record.generated,
        "delivered": record.delivered,
        "lost": record.lost,
        "dead": record.dead_nodes_at_end,
        "energy_dead": energy_dead,
        "lifetime": record.lifetime,
        "energy": record.energy_consumed,
        "avg_hops": record.avg_hops,
        "avg_neighbors": record.avg_neighbors,
        "avg_distance": record.avg_distance,
        "conservation_error": conservation_error(record),
    }


def _run_cell(args):
    spec, n, tx, i, m, seed = args
    row = record_row(run_experiment(spec.sim_config(n, tx, seed, m)))
    row["graph_index"] = i
    return [row[c] for c in SWEEP_COLUMNS]


def _map(fn, tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map keeps submission order whatever the completion order
            return list(pool.map(fn, tasks, chunksize=4))
    return [fn(t) for t in tasks]


def spec_meta(spec) -> dict:
    meta = {}
    for k, v in asdict(spec).items():
        meta[k] = " ".join(str(x) for x in v) if isinstance(v, (list, tuple)) else v
    return meta


def run_sweep(spec: SweepSpec, workers: int = 1) -> Table:
    """One row per (n, tx, graph index, method) cell, in grid order."""
    tasks = [(spec, *cell) for cell in spec.cells()]
    rows = _map(_run_cell, tasks, workers)
    meta = {"command": "sweep", **spec_meta(spec), "rows": len(rows)}
    return Table(list(SWEEP_COLUMNS), rows, meta)


# -- paired comparison -------------------------------------------------------------

COMPARE_COLUMNS = [
    "graph_index", "seed",
    "pdtm_delivered", "ddtm_delivered", "pdtm_lost", "ddtm_lost",
    "pdtm_dead", "ddtm_dead", "pdtm_lifetime", "ddtm_lifetime",
    "pdtm_energy", "ddtm_energy", "pdtm_conservation_error", "ddtm_conservation_error",
]


def _run_pair(args):
    spec, n, tx, i, seed = args
    out = {}
    for m in (PDTM, DDTM):
        rec = run_experiment(spec.sim_config(n, tx, seed, m))
        out[m] = record_row(rec)
    p, d = out[PDTM], out[DDTM]
    return [i, seed, p["delivered"], d["delivered"], p["lost"], d["lost"], p["dead"], d["dead"],
            p["lifetime"], d["lifetime"], p["energy"], d["energy"],
            p["conservation_error"], d["conservation_error"]]


def run_compare(spec: SweepSpec, workers: int = 1) -> Table:
    """Paired PDTM/DDTM runs on shared layouts, with mean deltas in the header."""
    if len(spec.node_counts) * len(spec.tx_radii) > 1:
        raise ValueError("compare takes a single (n, tx) cell")
    (n,), (tx,) = spec.node_counts, spec.tx_radii
    tasks = [(spec, n, tx, i, cell_seed(spec.base_seed, n, tx, i)) for i in range(spec.graphs_per_cell)]
    rows = _map(_run_pair, tasks, workers)
    a = np.array([r[2:12] for r in rows], dtype=float)
    meta = {"command": "compare", **spec_meta(replace(spec, methods=(PDTM, DDTM)))}
    meta["pdtm_delivered_wins"] = float(np.mean(a[:, 0] > a[:, 1]))
    for k, name in enumerate(("delivered", "lost", "dead", "lifetime", "energy")):
        meta[f"mean_delta_{name}"] = float(np.mean(a[:, 2 * k] - a[:, 2 * k + 1]))
    return Table(list(COMPARE_COLUMNS), rows, meta)


def slot_table(record: ExperimentRecord) -> Table:
    """Per-slot series of one run followed by a totals row."""
    cfg = record.config
    meta = {"command": "record", "method": cfg.method.variant}
    for k, v in asdict(cfg.deployment).items():
        meta[k] = " ".join(str(x) for x in v) if isinstance(v, tuple) else v
    rows = [[s.slot_index, s.generated, s.delivered, s.lost, s.new_dead, s.energy_consumed]
            for s in record.slots]
    rows.append(["total", record.generated, record.delivered, record.lost,
                 record.dead_nodes_at_end, record.energy_consumed])
    return Table(["slot", "generated", "delivered", "lost", "new_dead", "energy"], rows, meta)


# -- analysis dataset ----------------------------------------------------------------

DATASET_COLUMNS = [
    "tx_radius", "network_size", "n_sinks", "transmission_cost", "transmission_delay",
    "avg_distance", "avg_neighbors", "receive_cost", "avg_hops", "energy_per_packet",
]


@dataclass(frozen=True)
class AnalyticsSweepSpec:
    tx_range: tuple = (30.0, 250.0)
    size_range: tuple = (10, 200)
    sink_range: tuple = (1, 50)
    e_elec_range: tuple = (0.0, 500.0)
    runs: int = 1000
    repeats_per_config: int = 5
    window: int = 20
    method: str = DDTM
    base_seed: int = 0
    area: tuple = (600, 300)
    sink_position: tuple = (50, 50)
    initial_energy: float = 100000.0

    def __post_init__(self):
        for name in ("tx_range", "size_range", "sink_range", "e_elec_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must satisfy low < high, got {(lo, hi)}")
        if self.tx_range[0] <= 0 or self.size_range[0] < 2 or self.e_elec_range[0] < 0:
            raise ValueError("ranges out of bounds")
        if self.runs < 1 or self.repeats_per_config < 1 or self.window < 1:
            raise ValueError("runs, repeats_per_config and window must be >= 1")
        CostMethod(self.method)


def sample_config(spec: AnalyticsSweepSpec, run: int) -> dict:
    rng = np.random.default_rng(cell_seed(spec.base_seed, run))
    return {
        "tx_radius": float(rng.uniform(*spec.tx_range)),
        "network_size": int(rng.integers(spec.size_range[0], spec.size_range[1], endpoint=True)),
        "n_sinks": int(rng.integers(spec.sink_range[0], spec.sink_range[1], endpoint=True)),
        "e_elec": float(rng.uniform(*spec.e_elec_range)),
    }


def _observe(args):
    """Observed columns of one repeat, or ``None`` when nothing was delivered."""
    spec, cfg, seed = args
    dep = DeploymentConfig(
        n_nodes=cfg["network_size"], tx_radius=cfg["tx_radius"], area=tuple(spec.area),
        sink_position=tuple(spec.sink_position), rng_seed=seed,
        initial_energy=float(spec.initial_energy),
    )
    sim = SimConfig(dep, CostMethod(spec.method), RadioParams(e_elec=cfg["e_elec"]), max_timeslots=spec.window)
    rec = run_experiment(sim)
    if rec.delivered == 0:
        return None
    tx_count = sum(s.transmissions for s in rec.slots)
    return [
        sum(s.tx_energy for s in rec.slots) / tx_count,
        float(np.mean([s.max_hops for s in rec.slots])),
        rec.avg_distance,
        rec.avg_neighbors,
        sum(s.rx_energy for s in rec.slots) / tx_count,
        rec.avg_hops,
        rec.energy_consumed / rec.delivered,
    ]


def generate_dataset(spec: AnalyticsSweepSpec, workers: int = 1) -> Table:
    """One averaged row per sampled configuration; runs with no deliveries are dropped."""
    configs = [sample_config(spec, r) for r in range(spec.runs)]
    tasks = [(spec, cfg, cell_seed(spec.base_seed, r, k + 1))
             for r, cfg in enumerate(configs) for k in range(spec.repeats_per_config)]
    obs = _map(_observe, tasks, workers)
    rows, excluded = [], 0
    reps = spec.repeats_per_config
    for r, cfg in enumerate(configs):
        chunk = obs[r * reps:(r + 1) * reps]
        if any(o is None for o in chunk):
            excluded += 1
            continue
        mean = np.mean(np.array(chunk, dtype=float), axis=0).tolist()
        tc, delay, dist, nb, rx, hops, target = mean
        rows.append([cfg["tx_radius"], cfg["network_size"], cfg["n_sinks"], tc, delay, dist, nb, rx, hops, target])
    meta = {"command": "dataset", **spec_meta(spec), "rows": len(rows), "excluded_zero_delivery": excluded}
    return Table(list(DATASET_COLUMNS), rows, meta)


# -- analysis pipeline -----------------------------------------------------------------

DEPENDENCY_COLUMNS = ["parameter", "pearson", "spearman", "corr2", "corr3", "lasso", "p_value", "prevalent", "note"]
EVAL_COLUMNS = ["model", "n_features", "mape", "pred25", "rmse", "r2", "r2_conventional", "note"]


@dataclass
class AnalysisResult:
    report: object
    evals: dict = field(default_factory=dict)

    def dependency_table(self, meta=None) -> Table:
        rows = [[p.name, p.pearson, p.spearman, p.corr2, p.corr3, p.lasso, p.p_value, p.prevalent, p.note]
                for p in self.report.parameters]
        return Table(list(DEPENDENCY_COLUMNS), rows, dict(meta or {}))

    def eval_table(self, meta=None) -> Table:
        rows = [[name, n, r.mape, r.pred25, r.rmse, r.r2, rc.r2, r.note] for name, (n, r, rc) in self.evals.items()]
        return Table(list(EVAL_COLUMNS), rows, dict(meta or {}))


def analyze(data: Dataset, corr_threshold: float = 0.35, p_threshold: float = 0.05,
            lambda_fraction: float = 0.05, n_trees: int = 20, folds: int = 5, seed: int = 0) -> AnalysisResult:
    """Correlations, p-values and Lasso, then forests on all and on prevalent parameters.

    Forest metrics pool the out-of-fold predictions of a ``folds``-fold split.
    """
    if len(data) < folds:
        raise ValueError(f"dataset has {len(data)} rows, fewer than {folds} folds")
    report = select_prevalent(
        dependency_report(data.X, data.y, data.column_names, data.target_name, lambda_fraction),
        corr_threshold, p_threshold,
    )
    result = AnalysisResult(report)

    def fit(X, y):
        return forest_fit(X, y, n_trees=n_trees, seed=seed)

    for name, cols in (("all", data.column_names), ("prevalent", report.prevalent_names())):
        if not cols:
            nan = evaluate(data.y, np.full(len(data), np.nan))
            result.evals[name] = (0, replace(nan, note="no prevalent parameters"), nan)
            continue
        sub = data.subset(cols)
        pred = cross_val_predict(fit, sub.X, sub.y, folds, seed)
        result.evals[name] = (len(cols), evaluate(sub.y, pred), evaluate(sub.y, pred, R2_CONVENTIONAL))
    return result


# -- EDM flows ---------------------------------------------------------------------------

EDM_COLUMNS = list(FLOW_NAMES) + ["energy"]


def synthetic_edm_flows(m: int, coef, noise: float = 0.0, seed: int = 0, active=FLOW_NAMES[:3]):
    """Flows drawn uniformly on [0, 100) for ``active`` constituents, zero elsewhere.

    ``coef`` is ``(alpha0, ..., alpha5)``; ``energy = alpha0 + flows @ alpha[1:] + noise``.
    """
    rng = np.random.default_rng(seed)
    F = np.zeros((m, 5))
    for name in active:
        F[:, FLOW_NAMES.index(name)] = rng.uniform(0, 100, size=m)
    a = np.asarray(coef, dtype=float)
    E = a[0] + F @ a[1:] + noise * rng.standard_normal(m)
    return F, E


def flows_table(F, E, meta=None) -> Table:
    rows = [list(map(float, f)) + [float(e)] for f, e in zip(F, E)]
    return Table(list(EDM_COLUMNS), rows, dict(meta or {}))


def read_flows(table: Table):
    if not table.rows:
        raise ValueError("flows file has no rows")
    if "energy" not in table.columns:
        raise ValueError("flows file needs an 'energy' column")
    unknown = [c for c in table.columns if c not in EDM_COLUMNS]
    if unknown:
        raise ValueError(f"unknown flow columns: {', '.join(unknown)}")
    F = np.zeros((len(table.rows), 5))
    for j, name in enumerate(FLOW_NAMES):
        if name in table.columns:
            F[:, j] = np.asarray(table.column(name), dtype=float)
    E = np.asarray(table.column("energy"), dtype=float)
    return F, E


def fit_edm_holdout(F, E, test_fraction: float = 1 / 3, seed: int = 0):
    """Fit on a seeded split and score on the held-out part.

    Returns ``(model, report, (actual, predicted))`` for the held-out rows.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    m = len(E)
    n_test = max(1, int(round(m * test_fraction)))
    perm = np.random.default_rng(seed).permutation(m)
    test, train = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    model = edm_fit(F[train], E[train])
    pred = np.atleast_1d(edm_predict(model, F[test]))
    return model, evaluate(E[test], pred), (E[test], pred)


def edm_report_table(model, report, meta=None) -> Table:
    rows = [[f"alpha{i}", v] for i, v in enumerate(model.as_array().tolist())]
    rows += [[k, v] for k, v in report.as_dict().items()]
    meta = dict(meta or {})
    if report.note:
        meta["note"] = report.note
    return Table(["quantity", "value"], rows, meta)


def sibling_path(path: str, tag: str) -> str:
    """``out.csv`` -> ``out.<tag>.csv``."""
    root, ext = os.path.splitext(path)
    return f"{root}.{tag}{ext or '.csv'}"
