"""Classifier configurations and the common trained-model surface."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..errors import ShapeError


def _check_positive(cfg, *names):
    for name in names:
        v = getattr(cfg, name)
        if v is not None and not v > 0:
            raise ValueError(f"{type(cfg).__name__}.{name} must be positive, got {v}")


@dataclass(frozen=True)
class DecisionTreeConfig:
    criterion: str = "gini"
    max_depth: int | None = None
    min_samples_leaf: int = 5
    kind = "DT"

    def __post_init__(self):
        if self.criterion != "gini":
            raise ValueError("only gini impurity is supported")
        _check_positive(self, "max_depth", "min_samples_leaf")


@dataclass(frozen=True)
class RandomForestConfig:
    n_trees: int = 100
    criterion: str = "gini"
    bootstrap: bool = True
    oob: bool = True
    min_samples_leaf: int = 5
    features_per_split: int | None = None  # None -> floor(sqrt(D))
    max_depth: int | None = None
    kind = "RF"

    def __post_init__(self):
        if self.criterion != "gini":
            raise ValueError("only gini impurity is supported")
        if self.oob and not self.bootstrap:
            raise ValueError("out-of-bag scoring requires bootstrap=True")
        _check_positive(self, "n_trees", "min_samples_leaf", "features_per_split", "max_depth")

    def mtry(self, width: int) -> int:
        if self.features_per_split is not None:
            return min(self.features_per_split, width)
        return max(1, math.isqrt(width))


@dataclass(frozen=True)
class KnnConfig:
    k: int = 5
    weighting: str = "uniform"
    metric: str = "euclidean"
    kind = "kNN"

    def __post_init__(self):
        if self.weighting != "uniform" or self.metric != "euclidean":
            raise ValueError("only uniform weighting with the euclidean metric is supported")
        _check_positive(self, "k")


@dataclass(frozen=True)
class LinearSvmConfig:
    penalty: str = "l1"
    loss: str = "hinge"
    regularization_strength: float = 1e-4
    epochs: int = 50
    eta0: float = 0.1
    tail_fraction: float = 0.25
    kind = "SVM"

    def __post_init__(self):
        if self.penalty != "l1" or self.loss != "hinge":
            raise ValueError("only the l1-penalised hinge loss is supported")
        _check_positive(self, "regularization_strength", "epochs", "eta0", "tail_fraction")
        if self.tail_fraction > 1:
            raise ValueError("tail_fraction must be <= 1")


@dataclass(frozen=True)
class AdaBoostConfig:
    n_estimators: int = 50
    learning_rate: float = 1.0
    base_max_depth: int = 1
    variant: str = "SAMME.R"
    kind = "AdaBoost"

    def __post_init__(self):
        if self.variant != "SAMME.R":
            raise ValueError("only SAMME.R boosting is supported")
        _check_positive(self, "n_estimators", "learning_rate", "base_max_depth")


DNN_ARCHS = {
    "DNN2L": (197, 64, 1),
    "DNN4L": (197, 128, 32, 8, 1),
    "DNN7L": (197, 128, 64, 32, 16, 8, 4, 1),
}


@dataclass(frozen=True)
class DnnConfig:
    layer_dims: tuple[int, ...] = DNN_ARCHS["DNN2L"]
    dropout: float = 0.4
    learning_rate: float = 0.1
    loss: str = "bce"
    epochs: int = 150
    batch_size: int = 64
    val_fraction: float = 0.2
    name: str = "DNN-2L"

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(d) for d in self.layer_dims))
        if len(self.layer_dims) < 2 or self.layer_dims[-1] != 1:
            raise ValueError("DNN layer_dims must end in a single output unit")
        if any(d <= 0 for d in self.layer_dims):
            raise ValueError("DNN layer widths must be positive")
        if self.loss != "bce":
            raise ValueError("DNN classifiers train on binary cross-entropy")
        if not 0.0 <= self.dropout < 1.0 or not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("dropout and val_fraction must lie in [0, 1)")
        _check_positive(self, "learning_rate", "epochs", "batch_size")

    @property
    def kind(self) -> str:
        return self.name

    @classmethod
    def named(cls, arch: str, **overrides) -> "DnnConfig":
        key = arch.upper().replace("-", "")
        try:
            dims = DNN_ARCHS[key]
        except KeyError:
            raise ValueError(f"unknown DNN architecture {arch!r}") from None
        return cls(layer_dims=dims, name=f"DNN-{key[3:]}", **overrides)

    def dims_for(self, width: int) -> list[int]:
        return [width, *self.layer_dims[1:]]


CONFIG_TYPES = {
    "DecisionTree": DecisionTreeConfig,
    "RandomForest": RandomForestConfig,
    "Knn": KnnConfig,
    "LinearSvm": LinearSvmConfig,
    "AdaBoost": AdaBoostConfig,
    "Dnn": DnnConfig,
}


def config_to_dict(cfg) -> dict:
    tag = next(k for k, v in CONFIG_TYPES.items() if isinstance(cfg, v))
    d = asdict(cfg)
    if "layer_dims" in d:
        d["layer_dims"] = list(d["layer_dims"])
    return {"type": tag, **d}


def config_from_dict(d: dict):
    d = dict(d)
    cls = CONFIG_TYPES[d.pop("type")]
    allowed = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in d.items() if k in allowed})


@dataclass(eq=False)
class TrainedModel:
    config: object
    feature_width: int
    train_seed: int
    oob_score: float | None = field(default=None, kw_only=True)

    def check_width(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.feature_width:
            raise ShapeError(f"model expects width {self.feature_width}, got shape {X.shape}")
        return X

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        return np.clip(self._scores(self.check_width(X)), 0.0, 1.0)

    def predict_labels(self, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
        if not 0.0 <= threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        return (self.predict_scores(X) >= threshold).astype(np.int64)

    def _scores(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _base_meta(self) -> dict:
        return {
            "config": config_to_dict(self.config),
            "feature_width": self.feature_width,
            "train_seed": self.train_seed,
            "oob_score": self.oob_score,
        }
