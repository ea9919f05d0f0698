"""The twelve acceptance checks, one test each, at their stated tolerances.

Each test records a PASS/FAIL line (shown in the terminal summary, or on
stdout when run as ``python3 tests/test_acceptance.py``) before asserting.
"""

import itertools
import math
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

try:
    from conftest import record
except ImportError:  # pragma: no cover
    from tests.conftest import record

from wsnenergy.analytics import (
    DependencyReport,
    ParameterDependency,
    evaluate,
    forest_fit,
    lambda_max,
    lasso_fit,
    nonlinear_corr,
    pearson,
    select_prevalent,
    spearman,
    dependency_report,
)
from wsnenergy.analytics.metrics import R2_CONVENTIONAL
from wsnenergy.energy import edm_fit
from wsnenergy.experiments import SweepSpec, run_compare, run_sweep, synthetic_edm_flows
from wsnenergy.network import build_graph
from wsnenergy.routing import PDTM, CostMethod, WeightedDigraph, build_routing_tree, dijkstra

REPO = Path(__file__).resolve().parents[1]


# -- shared simulation batches (criteria 2, 3 and 4) ---------------------------------

@pytest.fixture(scope="module")
def compare_batches():
    t0 = time.perf_counter()
    out = {}
    for n, tx in ((50, 100), (100, 100), (100, 200)):
        out[(n, tx)] = run_compare(SweepSpec(node_counts=(n,), tx_radii=(tx,), graphs_per_cell=30, base_seed=0))
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def default_sweep():
    t0 = time.perf_counter()
    table = run_sweep(SweepSpec())
    return table, time.perf_counter() - t0


# -- 1 ------------------------------------------------------------------------------

def _brute_force(n, edges, source):
    """Minimum total weight over every simple path, by exhaustive enumeration."""
    out = [[] for _ in range(n)]
    for u, v, w in edges:
        out[u].append((v, w))
    best = [None] * n
    best[source] = 0

    def walk(u, total, seen):
        for v, w in out[u]:
            if v in seen:
                continue
            t = total + w
            if best[v] is None or t < best[v]:
                best[v] = t
            walk(v, t, seen | {v})

    walk(source, 0, {source})
    return best


def test_criterion_01_dijkstra_oracle():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    bad = 0
    for trial in range(200):
        n = int(rng.integers(1, 9))
        rational = trial % 2 == 0
        edges = []
        for u, v in itertools.permutations(range(n), 2):
            if rng.random() < 0.4:
                if rational:
                    w = Fraction(int(rng.integers(0, 50)), int(rng.integers(1, 12)))
                else:
                    w = float(rng.exponential(3.0)) if rng.random() > 0.1 else 0.0
                edges.append((u, v, w))
        src = int(rng.integers(0, n))
        got = dijkstra(WeightedDigraph(n, edges), src).dist
        want = _brute_force(n, edges, src)
        for g, w in zip(got, want):
            if w is None:
                bad += g != math.inf
            elif rational:
                bad += g != w
            else:
                bad += not math.isclose(g, w, rel_tol=1e-9, abs_tol=0.0)
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 10
    record(1, ok, f"200 graphs, {bad} mismatching distances, {elapsed:.2f}s")
    assert ok


# -- 2 ------------------------------------------------------------------------------

def test_criterion_02_pdtm_beats_ddtm(compare_batches):
    batches, elapsed = compare_batches
    cols = None
    wins, parts = [], []
    means = {k: [0.0, 0.0] for k in ("delivered", "lost", "dead", "lifetime")}
    for (n, tx), table in batches.items():
        cols = {c: i for i, c in enumerate(table.columns)}
        a = np.array(table.rows, dtype=object)
        p = np.array(a[:, cols["pdtm_delivered"]], dtype=float)
        d = np.array(a[:, cols["ddtm_delivered"]], dtype=float)
        wins.extend(p > d)
        parts.append(f"N={n},Tx={tx}: {np.mean(p > d):.0%}")
        for k in means:
            means[k][0] += np.mean(np.array(a[:, cols[f"pdtm_{k}"]], dtype=float)) / len(batches)
            means[k][1] += np.mean(np.array(a[:, cols[f"ddtm_{k}"]], dtype=float)) / len(batches)
    win_rate = float(np.mean(wins))
    checks = {
        "wins>=75%": win_rate >= 0.75,
        "lifetime": means["lifetime"][0] >= means["lifetime"][1],
        "dead": means["dead"][0] <= means["dead"][1],
        "loss": means["lost"][0] <= means["lost"][1],
        "runtime": elapsed < 300,
    }
    ok = all(checks.values())
    detail = (
        f"wins {win_rate:.0%} ({'; '.join(parts)}); "
        + ", ".join(f"{k} {v[0]:.1f} vs {v[1]:.1f}" for k, v in means.items())
        + f"; {elapsed:.1f}s"
        + ("" if ok else f"; failed: {[k for k, v in checks.items() if not v]}")
    )
    record(2, ok, detail)
    assert ok


# -- 3 ------------------------------------------------------------------------------

def _stratified_spearman(rows, cols, x_key, y_key, strata):
    """Smallest Spearman between ``x_key`` and cell means of ``y_key`` over the strata."""
    groups = {}
    for r in rows:
        s = tuple(r[cols[k]] for k in strata)
        groups.setdefault(s, {}).setdefault(r[cols[x_key]], []).append(r[cols[y_key]])
    worst = 1.0
    for cells in groups.values():
        xs = sorted(cells)
        ys = [np.mean(cells[x]) for x in xs]
        worst = min(worst, spearman(xs, ys))
    return worst


def test_criterion_03_topology_trends(default_sweep):
    table, elapsed = default_sweep
    cols = {c: i for i, c in enumerate(table.columns)}
    rows = table.rows
    hops_n = _stratified_spearman(rows, cols, "n_nodes", "avg_hops", ("method", "tx_radius"))
    nb_n = _stratified_spearman(rows, cols, "n_nodes", "avg_neighbors", ("method", "tx_radius"))
    nb_tx = _stratified_spearman(rows, cols, "tx_radius", "avg_neighbors", ("method", "n_nodes"))
    ok = len(rows) == 900 and min(hops_n, nb_n, nb_tx) >= 0.5 and elapsed < 300
    record(3, ok, f"{len(rows)} runs; min Spearman hops~N {hops_n:.2f}, neighbours~N {nb_n:.2f}, "
                  f"neighbours~Tx {nb_tx:.2f}; {elapsed:.1f}s")
    assert ok


# -- 4 ------------------------------------------------------------------------------

def test_criterion_04_energy_conservation(compare_batches, default_sweep):
    batches, _ = compare_batches
    errors = []
    for table in batches.values():
        errors += table.column("pdtm_conservation_error") + table.column("ddtm_conservation_error")
    sweep, _ = default_sweep
    errors += sweep.column("conservation_error")
    worst = max(errors)
    ok = worst <= 1e-9
    record(4, ok, f"{len(errors)} runs, worst relative mismatch {worst:.3g}")
    assert ok


# -- 5 ------------------------------------------------------------------------------

def _design(F):
    return np.column_stack([np.ones(len(F)), F[:, :3]])


def test_criterion_05_ols_recovery():
    true = np.array([4.0, 2.5, -1.25, 0.75, 0.0, 0.0])
    F, E = synthetic_edm_flows(60, true, noise=0.0, seed=5)
    got = edm_fit(F, E).as_array()[:4]
    rel = float(np.max(np.abs(got - true[:4]) / np.abs(true[:4])))
    # independent route: normal equations
    B = _design(F)
    normal = np.linalg.solve(B.T @ B, B.T @ E)
    route_gap = float(np.max(np.abs(normal - got)))

    hits = 0
    for trial in range(100):
        F, E = synthetic_edm_flows(60, true, noise=0.1, seed=1000 + trial)
        est = edm_fit(F, E).as_array()[:4]
        B = _design(F)
        resid = E - B @ est
        s2 = resid @ resid / (len(E) - B.shape[1])
        se = np.sqrt(s2 * np.diag(np.linalg.inv(B.T @ B)))
        hits += bool(np.all(np.abs(est - true[:4]) <= 3 * se))
    ok = rel <= 1e-8 and route_gap <= 1e-8 and hits >= 95
    record(5, ok, f"noiseless max rel err {rel:.2e} (vs normal equations {route_gap:.1e}); "
                  f"noisy trials inside 3 SE: {hits}/100")
    assert ok


# -- 6 ------------------------------------------------------------------------------

FIXTURE_Y = [10.0, 12.0, 9.0, 15.0, 11.0, 8.0, 14.0, 13.0, 10.0, 16.0]
FIXTURE_YHAT = [11.0, 12.5, 7.0, 13.0, 11.0, 10.5, 14.5, 12.0, 8.0, 15.0]
# Frozen from the exact-fraction oracle below.
FIXTURE_EXPECTED = {
    "mape": 0.11848595848595848,
    "pred25": 0.9,
    "rmse": 1.4747881203752624,
    "r2": 0.6371976647206005,
}


def _metric_oracle(y, yh):
    y = [Fraction(v) for v in y]
    yh = [Fraction(v) for v in yh]
    m = len(y)
    rel = [abs(a - b) / abs(a) for a, b in zip(y, yh)]
    sse = sum((a - b) ** 2 for a, b in zip(y, yh))
    mean = sum(y) / m
    return {
        "mape": float(sum(rel) / m),
        "pred25": float(Fraction(sum(r < Fraction(1, 4) for r in rel), m)),
        "rmse": math.sqrt(sse / m),
        "r2": float(1 - sse / sum((b - mean) ** 2 for b in yh)),
    }


def test_criterion_06_metric_fixtures():
    oracle = _metric_oracle(FIXTURE_Y, FIXTURE_YHAT)
    rep = evaluate(FIXTURE_Y, FIXTURE_YHAT).as_dict()
    gaps = [abs(rep[k] - FIXTURE_EXPECTED[k]) for k in FIXTURE_EXPECTED]
    gaps += [abs(oracle[k] - FIXTURE_EXPECTED[k]) for k in FIXTURE_EXPECTED]
    y = np.array(FIXTURE_Y)
    conventional = evaluate(y, np.full_like(y, y.mean()), R2_CONVENTIONAL).r2
    ok = max(gaps) <= 1e-12 and abs(conventional) <= 1e-12
    record(6, ok, f"10-point fixture max deviation {max(gaps):.1e}; conventional R2 of mean predictor {conventional:.1e}")
    assert ok


# -- 7 ------------------------------------------------------------------------------

def _exact_corr(x, y):
    x = [Fraction(v) for v in x]
    y = [Fraction(v) for v in y]
    mx, my = sum(x) / len(x), sum(y) / len(y)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return float(sxy) / math.sqrt(float(sxx * syy))


def test_criterion_07_correlation_suite():
    rng = np.random.default_rng(7)
    affine_dev = spearman_dev = deg1_dev = 0.0
    for _ in range(200):
        x = rng.normal(size=30)
        y = 0.5 * x + rng.normal(size=30)
        a, b = rng.uniform(0.1, 10), rng.uniform(-100, 100)
        r = pearson(x, y)
        affine_dev = max(affine_dev, abs(pearson(a * x + b, y) - r), abs(pearson(x, a * y + b) - r))
        spearman_dev = max(spearman_dev, abs(spearman(np.exp(x), y ** 3) - spearman(x, y)))
        deg1_dev = max(deg1_dev, abs(nonlinear_corr(x, y, 1) - r))
    x4, y4 = (1, 2, 3, 4), (1, 3, 2, 5)
    expected = {
        "pearson": 0.8315218406202999,
        "spearman_ties": 0.9486832980505138,
        "corr2": 0.858407729099759,
        "corr3": 0.9044337332481942,
    }
    oracle = {
        "pearson": _exact_corr(x4, y4),
        "spearman_ties": _exact_corr((1, 2.5, 2.5, 4), (1, 2, 3, 4)),
        "corr2": _exact_corr([v ** 2 for v in x4], [v ** 2 for v in y4]),
        "corr3": _exact_corr([v ** 3 for v in x4], [v ** 3 for v in y4]),
    }
    got = {
        "pearson": pearson(x4, y4),
        "spearman_ties": spearman((1, 2, 2, 3), (1, 2, 3, 4)),
        "corr2": nonlinear_corr(x4, y4, 2),
        "corr3": nonlinear_corr(x4, y4, 3),
    }
    fixture_dev = max(max(abs(got[k] - expected[k]), abs(oracle[k] - expected[k])) for k in expected)
    ok = affine_dev <= 1e-12 and spearman_dev == 0.0 and deg1_dev <= 1e-12 and fixture_dev <= 1e-12
    record(7, ok, f"affine {affine_dev:.1e}, spearman monotone {spearman_dev:.1e}, degree-1 {deg1_dev:.1e}, "
                  f"4-point fixtures {fixture_dev:.1e}")
    assert ok


# -- 8 ------------------------------------------------------------------------------

def _standardized(X):
    return (X - X.mean(axis=0)) / X.std(axis=0)


def _kkt(X, y, lam, coef):
    Z = _standardized(X)
    g = Z.T @ (y - y.mean() - Z @ coef)
    viol = np.where(coef != 0, np.abs(g - lam * np.sign(coef)), np.maximum(np.abs(g) - lam, 0))
    return float(viol.max())


def test_criterion_08_lasso():
    rng = np.random.default_rng(8)
    ols_gap = kkt_worst = 0.0
    shrink_ok = True
    for _ in range(50):
        m, n = int(rng.integers(15, 40)), int(rng.integers(2, 6))
        X = rng.normal(size=(m, n)) * rng.uniform(0.5, 5, size=n) + rng.uniform(-3, 3, size=n)
        y = X @ rng.normal(size=n) + rng.normal(size=m)
        Z = _standardized(X)
        ols = np.linalg.lstsq(np.column_stack([np.ones(m), Z]), y, rcond=None)[0][1:]
        ols_gap = max(ols_gap, float(np.max(np.abs(lasso_fit(X, y, 0.0).coef - ols))))
        lmax = float(np.max(np.abs(Z.T @ (y - y.mean()))))
        lam = rng.uniform(0.01, 0.9) * lmax
        kkt_worst = max(kkt_worst, _kkt(X, y, lam, lasso_fit(X, y, lam).coef))
        shrink_ok &= bool(np.all(lasso_fit(X, y, lmax).coef == 0.0))
        shrink_ok &= bool(np.any(lasso_fit(X, y, 0.999 * lmax).coef != 0.0))
        shrink_ok &= math.isclose(lambda_max(X, y), lmax, rel_tol=1e-12)
    ok = ols_gap <= 1e-6 and kkt_worst <= 1e-6 and shrink_ok
    record(8, ok, f"lambda=0 vs OLS {ols_gap:.1e}; worst KKT residual {kkt_worst:.1e}; "
                  f"full-shrinkage threshold {'exact' if shrink_ok else 'violated'}")
    assert ok


# -- 9 ------------------------------------------------------------------------------

# name, p-value, pearson, spearman, corr2, corr3, lasso (as printed)
PRINTED_TABLE = [
    ("Transmission cost", 0.757, -0.02, -0.0645, -0.09, -0.113, 0.99),
    ("Transmission radius", 2.054e-11, 0.45, 0.443, 0.466, 0.418, 0.635),
    ("Transmission delay", 0.013, 0.175, 0.24, 0.07, 0.01, 1.0),
    ("Average distance", 1.55e-11, 0.45, 0.45, 0.464, 0.428, 0.895),
    ("Average # of neighbours", 5.79e-14, 0.5, 0.61, 0.435, 0.38, 0.965),
    ("Receive cost", 1.4e-11, 0.455, 0.479, 0.38, 0.32, 1.0),
    ("Network size", 5.96e-9, 0.398, 0.39, 0.373, 0.356, 1.0),
    ("Average # of hops", 0.00157, -0.273, -0.302, -0.363, -0.323, 1.0),
    ("Number of sinks", 0.027, -0.156, -0.028, -0.23, -0.228, 1.0),
]


def test_criterion_09_prevalent_replay():
    params = tuple(
        ParameterDependency(name, pe, sp, c2, c3, la, p) for name, p, pe, sp, c2, c3, la in PRINTED_TABLE
    )
    flagged = select_prevalent(DependencyReport("average energy per packet", params))
    excluded = set(flagged.excluded_names())
    want = {"Transmission cost", "Transmission delay", "Number of sinks"}
    ok = excluded == want
    record(9, ok, f"excluded {sorted(excluded)}")
    assert ok


# -- 10 -----------------------------------------------------------------------------

def test_criterion_10_forest_sanity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    m = 1000
    X = rng.uniform(-1, 1, size=(m, 6))
    # one curved and one linear informative feature, four pure noise columns
    y = 2 * np.sin(2 * X[:, 0]) + 2 * X[:, 1] + rng.normal(scale=0.3, size=m) + 10
    train, test = slice(0, 700), slice(700, None)
    names = [f"x{j}" for j in range(6)]
    report = select_prevalent(dependency_report(X[train], y[train], names))
    keep = [names.index(n) for n in report.prevalent_names()]
    full = forest_fit(X[train], y[train], n_trees=20, seed=1)
    reduced = forest_fit(X[train][:, keep], y[train], n_trees=20, seed=1)
    r2_all = evaluate(y[test], full.predict(X[test])).r2
    r2_prev = evaluate(y[test], reduced.predict(X[test][:, keep])).r2
    conv_all = evaluate(y[test], full.predict(X[test]), R2_CONVENTIONAL).r2
    elapsed = time.perf_counter() - t0
    ok = (r2_all >= 0.6 and conv_all >= 0.6 and abs(r2_all - r2_prev) <= 0.1 and elapsed < 30
          and report.prevalent_names() == ["x0", "x1"])
    record(10, ok, f"R2 all {r2_all:.3f} (conventional {conv_all:.3f}), prevalent {report.prevalent_names()} "
                   f"{r2_prev:.3f}; {elapsed:.1f}s")
    assert ok


# -- 11 -----------------------------------------------------------------------------

def _cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "wsnenergy", *args], cwd=cwd, capture_output=True, text=True)


def test_criterion_11_cli_determinism(tmp_path):
    commands = [
        ["sweep", "--node-counts", "30", "40", "--tx-radii", "100", "150", "--graphs-per-cell", "2", "--figures"],
        ["sweep", "--node-counts", "30", "--tx-radii", "120", "--graphs-per-cell", "2", "--format", "json"],
        ["compare", "--n-nodes", "40", "--graphs", "3", "--records", "--figures"],
        ["dataset", "--runs", "12", "--repeats-per-config", "2", "--window", "5", "--figures"],
        ["analyze", "DATASET", "--trees", "5", "--figures"],
        ["flows", "--rows", "40", "--noise", "0.5"],
        ["fit-edm", "FLOWS", "--figures"],
    ]
    outputs = {}
    failures = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        for k, cmd in enumerate(commands):
            cmd = [str(d / "c3.csv") if c == "DATASET" else str(d / "c5.csv") if c == "FLOWS" else c for c in cmd]
            res = _cli([*cmd, "--seed", "11", "--out", str(d / f"c{k}.csv")], REPO)
            if res.returncode != 0:
                failures.append(f"{cmd[0]}: {res.stderr.strip()}")
        outputs[run] = {p.name: p.read_bytes() for p in sorted(d.iterdir())}
    same = outputs["a"].keys() == outputs["b"].keys() and all(
        outputs["a"][k].replace(b"/a/", b"/b/") == outputs["b"][k] for k in outputs["a"]
    )
    ok = same and not failures and len(outputs["a"]) >= 14
    record(11, ok, f"{len(commands)} commands, {len(outputs['a'])} files compared byte for byte"
                   + (f"; errors: {failures}" if failures else ""))
    assert ok


# -- 12 -----------------------------------------------------------------------------

def test_criterion_12_pdtm_scaling_invariance():
    rng = np.random.default_rng(12)
    changed = 0
    for trial in range(50):
        n = int(rng.integers(5, 40))
        pos = [(50.0, 50.0)] + [tuple(map(float, rng.integers(0, 301, size=2))) for _ in range(n - 1)]
        energies = rng.uniform(1.0, 1e5, size=n)
        if trial % 2:
            energies[0] = math.inf
        dead = rng.random(n) < 0.15
        dead[0] = False
        trees = []
        for c in (1.0, float(rng.choice([1e-6, 0.37, 3.0, 1e4, 7.0 / 3.0]))):
            g = build_graph(pos, float(rng.uniform(60, 200)) if not trees else radius, energies * c)
            radius = g.tx_radius
            for i in np.flatnonzero(dead):
                g.nodes[i].alive = False
            trees.append(build_routing_tree(g, CostMethod(PDTM)).parent)
        changed += trees[0] != trees[1]
    ok = changed == 0
    record(12, ok, f"50 graphs, {changed} trees changed under energy scaling")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
