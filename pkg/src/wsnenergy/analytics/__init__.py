"""Correlations, Lasso, p-values, prevalent-parameter selection, forests and metrics."""

from .dataset import Dataset, dataset_from_table, read_dataset
from .forest import ForestModel, RegressionTree, forest_fit, tree_fit
from .metrics import EvalReport, cross_val_predict, evaluate, kfold_split
from .stats import (
    ConvergenceError,
    DependencyReport,
    LassoFit,
    ParameterDependency,
    ZeroVarianceError,
    average_ranks,
    dependency_report,
    lambda_max,
    lasso_fit,
    lasso_kkt_residual,
    lasso_scores,
    nonlinear_corr,
    p_value_from_r,
    p_value_pearson,
    pearson,
    select_prevalent,
    spearman,
)
