"""Prediction-quality metrics and k-fold assignment."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

R2_PREDICTION = "prediction"
R2_CONVENTIONAL = "conventional"


@dataclass(frozen=True)
class EvalReport:
    mape: float
    pred25: float
    rmse: float
    r2: float
    note: str = ""

    def as_dict(self) -> dict:
        return {"mape": self.mape, "pred25": self.pred25, "rmse": self.rmse, "r2": self.r2}


def evaluate(y, y_hat, r2_mode: str = R2_PREDICTION) -> EvalReport:
    """MAPE, PRED(25), RMSE and R^2 of predictions ``y_hat`` against actuals ``y``.

    ``r2_mode="prediction"`` divides by the spread of the predictions around the
    mean of the actuals; ``"conventional"`` uses the spread of the actuals.
    A zero in ``y`` leaves MAPE as NaN and says so in ``note``.
    """
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.size} vs {y_hat.size}")
    if y.size == 0:
        raise ValueError("empty input")
    if r2_mode not in (R2_PREDICTION, R2_CONVENTIONAL):
        raise ValueError(f"unknown r2_mode {r2_mode!r}")
    notes = []
    err = y - y_hat
    zero = y == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(zero, np.where(err == 0, 0.0, np.inf), np.abs(err) / np.abs(y))
    if np.any(zero):
        mape = math.nan
        notes.append("MAPE undefined: zero actual value")
    else:
        mape = float(np.mean(rel))
    pred25 = float(np.mean(rel < 0.25))
    sse = float(np.dot(err, err))
    rmse = math.sqrt(sse / y.size)
    ref = y_hat if r2_mode == R2_PREDICTION else y
    denom = float(np.sum((ref - y.mean()) ** 2))
    if denom == 0:
        r2 = 1.0 if sse == 0 else math.nan
        if sse != 0:
            notes.append("R^2 undefined: zero denominator")
    else:
        r2 = 1.0 - sse / denom
    return EvalReport(mape, pred25, rmse, r2, "; ".join(notes))


def kfold_split(m: int, k: int = 5, seed: int = 0) -> np.ndarray:
    """Fold id per sample from a seeded shuffle; the first ``m % k`` folds get one extra."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if m < k:
        raise ValueError(f"need at least k={k} samples, got {m}")
    perm = np.random.default_rng(seed).permutation(m)
    sizes = np.full(k, m // k)
    sizes[: m % k] += 1
    folds = np.empty(m, dtype=np.int64)
    folds[perm] = np.repeat(np.arange(k), sizes)
    return folds


def cross_val_predict(fit, X, y, k: int = 5, seed: int = 0) -> np.ndarray:
    """Out-of-fold predictions; ``fit(X, y)`` must return an object with ``predict``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    folds = kfold_split(len(y), k, seed)
    out = np.empty(len(y))
    for f in range(k):
        test = folds == f
        model = fit(X[~test], y[~test])
        out[test] = model.predict(X[test])
    return out
