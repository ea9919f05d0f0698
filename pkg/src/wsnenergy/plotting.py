"""PNG figures for the CLI's result tables (Agg backend, no timestamps embedded)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import Table  # noqa: E402

_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def sweep_figure(table: Table, path: str) -> str:
    """Cell means against network size: delivered packets, hops and neighbours."""
    cols = {c: i for i, c in enumerate(table.columns)}
    rows = table.rows
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    methods = sorted({r[cols["method"]] for r in rows})
    radii = sorted({r[cols["tx_radius"]] for r in rows})
    sizes = sorted({r[cols["n_nodes"]] for r in rows})
    panels = (("delivered", "delivered packets"), ("avg_hops", "average hops"), ("avg_neighbors", "average neighbours"))
    for ax, (key, label) in zip(axes, panels):
        for m in methods:
            for tx in radii:
                ys = []
                for n in sizes:
                    vals = [r[cols[key]] for r in rows
                            if r[cols["method"]] == m and r[cols["tx_radius"]] == tx and r[cols["n_nodes"]] == n]
                    ys.append(np.mean(vals))
                style = "-" if m == methods[0] else "--"
                ax.plot(sizes, ys, style, marker="o", label=f"{m} Tx={tx:g}")
        ax.set_xlabel("network size")
        ax.set_ylabel(label)
    axes[0].legend(fontsize=7)
    return _save(fig, path)


def compare_figure(table: Table, path: str) -> str:
    cols = {c: i for i, c in enumerate(table.columns)}
    names = ("delivered", "lost", "dead", "lifetime")
    fig, axes = plt.subplots(1, len(names), figsize=(12, 3.5))
    for ax, name in zip(axes, names):
        p = [r[cols[f"pdtm_{name}"]] for r in table.rows]
        d = [r[cols[f"ddtm_{name}"]] for r in table.rows]
        ax.bar([0, 1], [np.mean(p), np.mean(d)], yerr=[np.std(p), np.std(d)], color=["tab:blue", "tab:gray"])
        ax.set_xticks([0, 1], ["PDTM", "DDTM"])
        ax.set_title(name)
    return _save(fig, path)


def dataset_figure(table: Table, path: str) -> str:
    """Each parameter against the target, one scatter panel per parameter."""
    data = np.array(table.rows, dtype=float)
    names = table.columns[:-1]
    k = len(names)
    ncol = 3
    nrow = (k + ncol - 1) // ncol
    fig, axes = plt.subplots(nrow, ncol, figsize=(4 * ncol, 3 * nrow), squeeze=False)
    for j, ax in enumerate(axes.flat):
        if j >= k:
            ax.axis("off")
            continue
        ax.scatter(data[:, j], data[:, -1], s=6)
        ax.set_xlabel(names[j])
        ax.set_ylabel(table.columns[-1])
    return _save(fig, path)


def dependency_figure(table: Table, path: str) -> str:
    cols = {c: i for i, c in enumerate(table.columns)}
    names = [r[cols["parameter"]] for r in table.rows]
    x = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(max(6, len(names)), 4))
    for k, key in enumerate(("pearson", "spearman", "corr2", "corr3")):
        vals = [r[cols[key]] for r in table.rows]
        ax.bar(x + (k - 1.5) * 0.2, vals, width=0.2, label=key)
    ax.set_xticks(x, names, rotation=45, ha="right")
    ax.axhline(0, color="k", lw=0.5)
    ax.legend(fontsize=7)
    return _save(fig, path)


def prediction_figure(y, y_hat, path: str) -> str:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.scatter(y, y_hat, s=8)
    lo, hi = float(np.min(y)), float(np.max(y))
    ax.plot([lo, hi], [lo, hi], "k--", lw=0.8)
    ax.set_xlabel("actual")
    ax.set_ylabel("predicted")
    return _save(fig, path)
