"""Uniform fit/score interface over the eight classifiers."""

from __future__ import annotations

import numpy as np

from ..dataset import FeatureMatrix
from .base import (
    DNN_ARCHS,
    AdaBoostConfig,
    DecisionTreeConfig,
    DnnConfig,
    KnnConfig,
    LinearSvmConfig,
    RandomForestConfig,
    TrainedModel,
    config_from_dict,
    config_to_dict,
)
from .boosting import AdaBoostModel, fit_adaboost
from .dnn import DnnModel, fit_dnn
from .knn import KnnModel, fit_knn
from .svm import LinearSvmModel, fit_svm
from .tree import DecisionTreeModel, RandomForestModel, TreeArrays, build_tree, fit_forest, fit_tree

CLASSIFIER_KINDS = ("DT", "RF", "kNN", "SVM", "AdaBoost", "DNN-2L", "DNN-4L", "DNN-7L")

_FITTERS = {
    DecisionTreeConfig: fit_tree,
    RandomForestConfig: fit_forest,
    KnnConfig: fit_knn,
    LinearSvmConfig: fit_svm,
    AdaBoostConfig: fit_adaboost,
    DnnConfig: fit_dnn,
}


def default_config(kind: str):
    """Default configuration for a classifier name such as ``"RF"`` or ``"dnn4l"``."""
    key = kind.upper().replace("-", "").replace("_", "")
    table = {
        "DT": DecisionTreeConfig,
        "RF": RandomForestConfig,
        "KNN": KnnConfig,
        "SVM": LinearSvmConfig,
        "ADABOOST": AdaBoostConfig,
    }
    if key in table:
        return table[key]()
    if key in DNN_ARCHS:
        return DnnConfig.named(key)
    raise ValueError(f"unknown classifier {kind!r}")


def fit(config, train: FeatureMatrix, seed: int = 0) -> TrainedModel:
    """Train ``config`` on ``train``; deterministic given (config, data, seed)."""
    try:
        fitter = _FITTERS[type(config)]
    except KeyError:
        raise TypeError(f"not a classifier config: {config!r}") from None
    if train.n_rows == 0:
        raise ValueError("cannot fit on an empty matrix")
    X = np.ascontiguousarray(train.values)
    return fitter(config, X, np.asarray(train.labels, dtype=np.int64), int(seed))


def predict_scores(model: TrainedModel, m: FeatureMatrix) -> np.ndarray:
    return model.predict_scores(m.values)


def predict_labels(model: TrainedModel, m: FeatureMatrix, threshold: float = 0.5) -> np.ndarray:
    return model.predict_labels(m.values, threshold)


def rf_feature_importance(model: TrainedModel) -> np.ndarray:
    """Mean decrease in Gini impurity per feature, normalised to sum to 1."""
    if not isinstance(model, RandomForestModel):
        raise TypeError("feature importance is defined for random forests only")
    return model.feature_importance()


__all__ = [
    "CLASSIFIER_KINDS", "AdaBoostConfig", "AdaBoostModel", "DecisionTreeConfig", "DecisionTreeModel",
    "DnnConfig", "DnnModel", "KnnConfig", "KnnModel", "LinearSvmConfig", "LinearSvmModel",
    "RandomForestConfig", "RandomForestModel", "TrainedModel", "TreeArrays", "build_tree",
    "config_from_dict", "config_to_dict", "default_config", "fit", "predict_scores",
    "predict_labels", "rf_feature_importance",
]
