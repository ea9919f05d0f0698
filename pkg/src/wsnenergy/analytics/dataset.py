"""Parameter/target datasets for the dependency analysis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..io import Table, read_table


@dataclass
class Dataset:
    column_names: list
    X: np.ndarray
    y: np.ndarray
    target_name: str = "y"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.ndim != 2 or self.X.shape[0] != self.y.size:
            raise ValueError("X must be (M, N) with M matching len(y)")
        if self.X.shape[1] != len(self.column_names):
            raise ValueError("one name per column of X required")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset contains non-finite values")

    def __len__(self):
        return self.y.size

    def subset(self, names) -> "Dataset":
        idx = [self.column_names.index(n) for n in names]
        return Dataset(list(names), self.X[:, idx], self.y, self.target_name, dict(self.meta))


def dataset_from_table(table: Table, target: str | None = None) -> Dataset:
    """Parameters are every column but the target, which defaults to the last."""
    if not table.rows:
        raise ValueError("dataset has no rows")
    target = target or table.columns[-1]
    if target not in table.columns:
        raise ValueError(f"target column {target!r} not found")
    t = table.columns.index(target)
    names = [c for j, c in enumerate(table.columns) if j != t]
    try:
        data = np.array(table.rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"non-numeric value in dataset: {exc}") from None
    X = np.delete(data, t, axis=1)
    return Dataset(names, X, data[:, t], target, dict(table.meta))


def read_dataset(path, target: str | None = None) -> Dataset:
    return dataset_from_table(read_table(path), target)
