"""Dependency statistics: correlations, a t-test p-value, Lasso and the selection gate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import stdtr


class ZeroVarianceError(ValueError):
    """Raised when a correlation is undefined because a series is constant."""


def _pair(x, y, min_len=3):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < min_len:
        raise ValueError(f"need at least {min_len} paired samples, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in input")
    return x, y


def _corr(x, y):
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = np.dot(xc, xc)
    syy = np.dot(yc, yc)
    if sxx == 0 or syy == 0:
        raise ZeroVarianceError("correlation undefined for a constant series")
    r = np.dot(xc, yc) / math.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def pearson(x, y) -> float:
    """Normalised linear correlation of two paired series."""
    return _corr(*_pair(x, y))


def average_ranks(v) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    v = np.asarray(v, dtype=float)
    order = np.argsort(v, kind="mergesort")
    s = v[order]
    ranks = np.empty(len(v))
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and s[j + 1] == s[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Pearson correlation of the average-rank vectors."""
    x, y = _pair(x, y)
    return _corr(average_ranks(x), average_ranks(y))


def nonlinear_corr(x, y, degree: int = 2) -> float:
    """Correlation of ``x**degree`` against ``y**degree``.

    The mean is taken after powering, so degree 1 is plain Pearson.
    """
    if degree not in (1, 2, 3):
        raise ValueError(f"degree must be 1, 2 or 3, got {degree}")
    x, y = _pair(x, y)
    return _corr(x ** degree, y ** degree)


def p_value_from_r(r: float, m: int) -> float:
    """Two-tailed Student-t p-value for a sample correlation ``r`` over ``m`` pairs."""
    if m < 4:
        raise ValueError(f"need at least 4 samples, got {m}")
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"correlation out of range: {r}")
    if abs(r) == 1.0:
        return 0.0
    df = m - 2
    t = r * math.sqrt(df / (1.0 - r * r))
    return float(min(1.0, 2.0 * stdtr(df, -abs(t))))


def p_value_pearson(x, y) -> float:
    x, y = _pair(x, y, min_len=4)
    return p_value_from_r(_corr(x, y), x.size)


# -- Lasso ---------------------------------------------------------------------

class ConvergenceError(RuntimeError):
    def __init__(self, msg, coef):
        super().__init__(msg)
        self.coef = coef


@dataclass
class LassoFit:
    coef: np.ndarray        # on the standardized scale
    intercept: float
    lam: float
    sweeps: int
    scale: np.ndarray = field(repr=False)   # population std of each column
    center: np.ndarray = field(repr=False)


def standardize(X):
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    Z = np.zeros_like(X)
    ok = sd > 0
    Z[:, ok] = (X[:, ok] - mu[ok]) / sd[ok]
    return Z, mu, sd


def lambda_max(X, y) -> float:
    """Smallest penalty at which every standardized coefficient is zero."""
    Z, _, _ = standardize(X)
    y = np.asarray(y, dtype=float).ravel()
    r = y - y.mean()
    # same per-column dot as the first descent sweep, so lam_max zeroes exactly
    return float(max(abs(np.dot(Z[:, j], r)) for j in range(Z.shape[1])))


_ZERO_SLACK = 1.0 + 64 * np.finfo(float).eps


def soft_threshold(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lasso_fit(X, y, lam: float, tol: float = 1e-8, max_sweeps: int = 100_000) -> LassoFit:
    """Cyclic coordinate descent on ``0.5*||y - b0 - Z b||^2 + lam*||b||_1``.

    ``Z`` is ``X`` standardized to zero mean and unit population variance;
    constant columns stay at zero. The intercept is not penalised.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X must be (M, N) with M matching len(y)")
    Z, mu, sd = standardize(X)
    m, n = Z.shape
    col_ss = np.einsum("ij,ij->j", Z, Z)
    beta = np.zeros(n)
    r = y - y.mean()
    for sweep in range(1, max_sweeps + 1):
        biggest = 0.0
        for j in range(n):
            if col_ss[j] == 0:
                continue
            zj = Z[:, j]
            old = beta[j]
            rho = np.dot(zj, r) + col_ss[j] * old
            # a few ulps of slack so lam_max from any summation order zeroes exactly
            new = 0.0 if abs(rho) <= lam * _ZERO_SLACK else soft_threshold(rho, lam) / col_ss[j]
            if new != old:
                r -= zj * (new - old)
                beta[j] = new
                biggest = max(biggest, abs(new - old))
        if biggest <= tol:
            return LassoFit(beta, float(y.mean()), float(lam), sweep, sd, mu)
    raise ConvergenceError(f"lasso did not converge in {max_sweeps} sweeps", beta.copy())


def lasso_kkt_residual(X, y, fit: LassoFit) -> float:
    """Largest violation of the subgradient optimality conditions."""
    Z, _, _ = standardize(X)
    y = np.asarray(y, dtype=float)
    g = Z.T @ (y - fit.intercept - Z @ fit.coef)
    worst = 0.0
    for j, b in enumerate(fit.coef):
        if b != 0:
            worst = max(worst, abs(g[j] - fit.lam * np.sign(b)))
        else:
            worst = max(worst, abs(g[j]) - fit.lam)
    return float(max(worst, 0.0))


def lasso_scores(X, y, lambda_fraction: float = 0.05) -> np.ndarray:
    """``|beta|`` normalised by its largest entry, at ``lambda_fraction * lambda_max``."""
    lam = lambda_fraction * lambda_max(X, y)
    beta = np.abs(lasso_fit(X, y, lam).coef)
    top = beta.max() if beta.size else 0.0
    return beta / top if top > 0 else beta


# -- dependency report -----------------------------------------------------------

@dataclass(frozen=True)
class ParameterDependency:
    name: str
    pearson: float
    spearman: float
    corr2: float
    corr3: float
    lasso: float
    p_value: float
    prevalent: bool = False
    note: str = ""

    @property
    def max_abs_corr(self) -> float:
        vals = [abs(v) for v in (self.pearson, self.spearman, self.corr2, self.corr3) if not math.isnan(v)]
        return max(vals) if vals else math.nan


@dataclass(frozen=True)
class DependencyReport:
    target: str
    parameters: tuple

    def names(self):
        return [p.name for p in self.parameters]

    def prevalent_names(self):
        return [p.name for p in self.parameters if p.prevalent]

    def excluded_names(self):
        return [p.name for p in self.parameters if not p.prevalent]


def select_prevalent(report: DependencyReport, corr_threshold: float = 0.35,
                     p_threshold: float = 0.05) -> DependencyReport:
    """Flag parameters whose strongest correlation and p-value both pass."""
    flagged = []
    for p in report.parameters:
        c = p.max_abs_corr
        ok = (not math.isnan(c)) and (not math.isnan(p.p_value)) and c >= corr_threshold and p.p_value <= p_threshold
        flagged.append(replace(p, prevalent=bool(ok)))
    return DependencyReport(report.target, tuple(flagged))


def dependency_report(X, y, names, target: str = "y", lambda_fraction: float = 0.05) -> DependencyReport:
    """Every correlation, the p-value and the Lasso score for each column of ``X``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[1] != len(names):
        raise ValueError("one name per column required")
    scores = lasso_scores(X, y, lambda_fraction)
    rows = []
    for j, name in enumerate(names):
        x = X[:, j]
        try:
            vals = (pearson(x, y), spearman(x, y), nonlinear_corr(x, y, 2), nonlinear_corr(x, y, 3))
            p = p_value_from_r(vals[0], len(y))
            note = ""
        except ZeroVarianceError as exc:
            vals, p, note = (math.nan,) * 4, math.nan, f"zero variance: {exc}"
        rows.append(ParameterDependency(name, *vals, float(scores[j]), p, note=note))
    return DependencyReport(target, tuple(rows))
