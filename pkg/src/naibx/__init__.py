"""naibx: online multi-label classification with a cascade of Naive Bayes
predictors.

Train incrementally with :func:`add_example`, predict with
:func:`predict_y` (size first, then greedy label selection), evaluate with
:func:`evaluate`.  Brute-force references for testing live in
:mod:`naibx.oracle`; Binary Relevance and Classifier Chain baselines in
:mod:`naibx.baselines`.
"""

from .baselines import BinaryRelevance, ClassifierChain, br_predict, br_train, cc_predict, cc_train
from .cascade import PredictionTrace, joint_log_score, predict_m, predict_y, predict_yk
from .dataio import (
    DatasetHeader,
    ModelFormatError,
    ParseError,
    load_arff,
    load_csv,
    load_dataset,
    load_model,
    save_arff,
    save_model,
    split_train_test,
)
from .metrics import MetricsReport, evaluate, hamming_loss, kfold_indices, mean_report
from .model import (
    GAUSSIAN,
    Instance,
    LabelUniverse,
    ModelStore,
    add_example,
    merge,
    new_model,
    train,
)
from .oracle import BudgetError, PowersetModel, best_subset, powerset_predict
from .stats import GaussianMoments, SmoothedCategorical, gaussian_log_density, gaussian_update
from .textmodel import BERNOULLI, MULTINOMIAL, TokenCountTable, bow_log_likelihood, bow_update

__version__ = "0.1.0"

__all__ = [
    "BERNOULLI",
    "BinaryRelevance",
    "BudgetError",
    "ClassifierChain",
    "DatasetHeader",
    "GAUSSIAN",
    "GaussianMoments",
    "Instance",
    "LabelUniverse",
    "MetricsReport",
    "ModelFormatError",
    "ModelStore",
    "MULTINOMIAL",
    "ParseError",
    "PowersetModel",
    "PredictionTrace",
    "SmoothedCategorical",
    "TokenCountTable",
    "add_example",
    "best_subset",
    "bow_log_likelihood",
    "bow_update",
    "br_predict",
    "br_train",
    "cc_predict",
    "cc_train",
    "evaluate",
    "gaussian_log_density",
    "gaussian_update",
    "hamming_loss",
    "joint_log_score",
    "kfold_indices",
    "load_arff",
    "load_csv",
    "load_dataset",
    "load_model",
    "mean_report",
    "merge",
    "new_model",
    "powerset_predict",
    "predict_m",
    "predict_y",
    "predict_yk",
    "save_arff",
    "save_model",
    "split_train_test",
    "train",
]
