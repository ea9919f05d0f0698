"""Command-line driver: ``wsnenergy <verb> [options]``.

Verbs: sweep, compare, dataset, analyze, fit-edm, flows. Every option can
also come from ``--config FILE``, a file of ``key = value`` lines whose keys
are the long option names (``graphs-per-cell = 5``); options given on the
command line win. List values are space separated.
"""

from __future__ import annotations

import argparse
import shlex
import sys

from . import experiments as ex
from .analytics.dataset import dataset_from_table
from .io import FORMATS, check_writable, read_table, write_table
from .routing import DDTM, PDTM
from .simulation import run_experiment


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


class CliError(Exception):
    pass


def _common(p):
    p.add_argument("--out", help="output file (default: <verb>.<format>)")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--figures", action="store_true", help="also write PNG figures next to --out")
    p.add_argument("--config", help="key = value file mirroring these options")


def _sim_flags(p):
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--initial-energy", type=float, default=100000.0)
    p.add_argument("--e-amp", type=float, default=1.0)
    p.add_argument("--e-elec", type=float, default=0.0)
    p.add_argument("--max-timeslots", type=int, default=100000)
    p.add_argument("--area", type=float, nargs=2, default=(600, 300), metavar=("W", "H"))
    p.add_argument("--sink-position", type=float, nargs=2, default=(50, 50), metavar=("X", "Y"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wsnenergy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="PDTM/DDTM grid over network size and radius")
    _common(p)
    _sim_flags(p)
    p.add_argument("--node-counts", type=int, nargs="+", default=[100, 150, 200, 250, 300])
    p.add_argument("--tx-radii", type=float, nargs="+", default=[100, 200, 300])
    p.add_argument("--graphs-per-cell", type=int, default=30)
    p.add_argument("--methods", nargs="+", default=[PDTM, DDTM], type=str.upper)

    p = sub.add_parser("compare", help="paired PDTM vs DDTM runs for one network size and radius")
    _common(p)
    _sim_flags(p)
    p.add_argument("--n-nodes", type=int, default=50)
    p.add_argument("--tx-radius", type=float, default=100.0)
    p.add_argument("--graphs", type=int, default=30)
    p.add_argument("--records", action="store_true", help="also write per-slot series of graph 0")

    p = sub.add_parser("dataset", help="random configurations -> parameter/energy dataset")
    _common(p)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--repeats-per-config", type=int, default=5)
    p.add_argument("--window", type=int, default=20, help="slots simulated per run")
    p.add_argument("--tx-range", type=float, nargs=2, default=(30.0, 250.0))
    p.add_argument("--size-range", type=int, nargs=2, default=(10, 200))
    p.add_argument("--sink-range", type=int, nargs=2, default=(1, 50))
    p.add_argument("--e-elec-range", type=float, nargs=2, default=(0.0, 500.0))
    p.add_argument("--method", type=str.upper, default=DDTM)

    p = sub.add_parser("analyze", help="dependency analysis and forest evaluation of a dataset")
    _common(p)
    p.add_argument("dataset")
    p.add_argument("--target", help="target column (default: last)")
    p.add_argument("--corr-threshold", type=float, default=0.35)
    p.add_argument("--p-threshold", type=float, default=0.05)
    p.add_argument("--lambda-fraction", type=float, default=0.05)
    p.add_argument("--trees", type=int, default=20)
    p.add_argument("--folds", type=int, default=5)

    p = sub.add_parser("fit-edm", help="fit the flow model on a held-out split")
    _common(p)
    p.add_argument("flows")
    p.add_argument("--test-fraction", type=float, default=1 / 3)

    p = sub.add_parser("flows", help="synthetic flows file from known coefficients")
    _common(p)
    p.add_argument("--rows", type=int, default=200)
    p.add_argument("--coef", type=float, nargs=6, default=(5.0, 2.0, 1.0, 0.5, 0.0, 0.0))
    p.add_argument("--noise", type=float, default=0.0)
    return parser


def read_config(path) -> list:
    """Turn ``key = value`` lines into argv tokens."""
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise CliError(f"{path}:{lineno}: expected 'key = value'")
            flag = "--" + key.strip().replace("_", "-")
            value = value.strip()
            if value.lower() in ("true", "yes", "on"):
                tokens.append(flag)
            elif value.lower() in ("false", "no", "off"):
                continue
            else:
                tokens += [flag] + shlex.split(value)
    return tokens


def parse_args(argv):
    argv = list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and argv:
        argv = argv[:1] + read_config(known.config) + argv[1:]
    return build_parser().parse_args(argv)


def _sweep_spec(a, node_counts, tx_radii, graphs, methods):
    return ex.SweepSpec(
        node_counts=tuple(node_counts), tx_radii=tuple(tx_radii), graphs_per_cell=graphs,
        base_seed=a.seed, methods=tuple(methods), alpha=a.alpha, area=tuple(a.area),
        sink_position=tuple(a.sink_position), initial_energy=a.initial_energy,
        e_amp=a.e_amp, e_elec=a.e_elec, max_timeslots=a.max_timeslots,
    )


def _figure_path(out, tag):
    return ex.sibling_path(out, tag).rsplit(".", 1)[0] + ".png"


def run(a) -> list:
    """Execute one parsed command; returns the paths written."""
    out = a.out or f"{a.verb}.{a.format}"
    written = []
    check_writable(out)

    def emit(path, table):
        write_table(path, table, a.format)
        written.append(path)

    if a.figures:
        from . import plotting
    if a.verb == "sweep":
        spec = _sweep_spec(a, a.node_counts, a.tx_radii, a.graphs_per_cell, a.methods)
        table = ex.run_sweep(spec, a.workers)
        emit(out, table)
        if a.figures:
            written.append(plotting.sweep_figure(table, _figure_path(out, "trends")))
    elif a.verb == "compare":
        spec = _sweep_spec(a, [a.n_nodes], [a.tx_radius], a.graphs, [PDTM, DDTM])
        table = ex.run_compare(spec, a.workers)
        emit(out, table)
        if a.records:
            seed = ex.cell_seed(a.seed, a.n_nodes, a.tx_radius, 0)
            for m in (PDTM, DDTM):
                rec = run_experiment(spec.sim_config(a.n_nodes, a.tx_radius, seed, m))
                emit(ex.sibling_path(out, f"{m.lower()}.slots"), ex.slot_table(rec))
        if a.figures:
            written.append(plotting.compare_figure(table, _figure_path(out, "compare")))
    elif a.verb == "dataset":
        spec = ex.AnalyticsSweepSpec(
            tx_range=tuple(a.tx_range), size_range=tuple(a.size_range), sink_range=tuple(a.sink_range),
            e_elec_range=tuple(a.e_elec_range), runs=a.runs, repeats_per_config=a.repeats_per_config,
            window=a.window, method=a.method, base_seed=a.seed,
        )
        table = ex.generate_dataset(spec, a.workers)
        emit(out, table)
        if a.figures:
            written.append(plotting.dataset_figure(table, _figure_path(out, "scatter")))
    elif a.verb == "analyze":
        data = dataset_from_table(read_table(a.dataset), a.target)
        res = ex.analyze(data, a.corr_threshold, a.p_threshold, a.lambda_fraction, a.trees, a.folds, a.seed)
        meta = {
            "command": "analyze", "dataset": a.dataset, "target": data.target_name, "rows": len(data),
            "corr_threshold": a.corr_threshold, "p_threshold": a.p_threshold,
            "lambda_fraction": a.lambda_fraction, "trees": a.trees, "folds": a.folds, "seed": a.seed,
        }
        dep = res.dependency_table(meta)
        emit(out, dep)
        emit(ex.sibling_path(out, "eval"), res.eval_table(meta))
        if a.figures:
            written.append(plotting.dependency_figure(dep, _figure_path(out, "correlations")))
    elif a.verb == "fit-edm":
        F, E = ex.read_flows(read_table(a.flows))
        model, report, (y, y_hat) = ex.fit_edm_holdout(F, E, a.test_fraction, a.seed)
        meta = {"command": "fit-edm", "flows": a.flows, "rows": len(E),
                "test_fraction": a.test_fraction, "seed": a.seed}
        emit(out, ex.edm_report_table(model, report, meta))
        if a.figures:
            written.append(plotting.prediction_figure(y, y_hat, _figure_path(out, "holdout")))
    elif a.verb == "flows":
        F, E = ex.synthetic_edm_flows(a.rows, a.coef, a.noise, a.seed)
        meta = {"command": "flows", "rows": a.rows, "coef": " ".join(map(repr, a.coef)),
                "noise": a.noise, "seed": a.seed}
        emit(out, ex.flows_table(F, E, meta))
    return written


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        for path in run(args):
            print(path)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - one-line diagnostic for any failure
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"wsnenergy: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
