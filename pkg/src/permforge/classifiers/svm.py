"""Linear SVM: l1-penalised hinge loss by averaged stochastic subgradient descent."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import DegenerateDataError
from ..nn import sigmoid
from ..serialize import register
from .base import LinearSvmConfig, TrainedModel, config_from_dict


def svm_objective(X, ypm, w, b, lam) -> float:
    """``lam * |w|_1 + mean(max(0, 1 - y (Xw + b)))`` with labels in {-1, +1}."""
    margins = ypm * (X @ w + b)
    return float(lam * np.abs(w).sum() + np.maximum(0.0, 1.0 - margins).mean())


@register("linear_svm")
@dataclass(eq=False)
class LinearSvmModel(TrainedModel):
    weights: np.ndarray = None
    bias: float = 0.0
    objective_history: list[float] = field(default_factory=list)

    def decision_function(self, X):
        return self.check_width(X) @ self.weights + self.bias

    def _scores(self, X):
        return sigmoid(X @ self.weights + self.bias)

    def export_state(self):
        meta = self._base_meta()
        meta["bias"] = self.bias
        return meta, {"weights": self.weights}

    @classmethod
    def import_state(cls, meta, arrays):
        return cls(config_from_dict(meta["config"]), meta["feature_width"], meta["train_seed"],
                   weights=arrays["weights"], bias=meta["bias"])


def fit_svm(cfg: LinearSvmConfig, X, y, seed: int) -> LinearSvmModel:
    """Seeded SGD with step ``eta0 / (1 + t / N)`` (t = global step, N = rows).

    The returned weights average the iterates of the final
    ``tail_fraction`` of steps. ``objective_history[e]`` is the full-data
    objective after epoch ``e`` of the running average of all iterates so far.
    """
    if len(np.unique(y)) < 2:
        raise DegenerateDataError("linear SVM needs both classes in the training set")
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, d = X.shape
    ypm = np.where(y == 1, 1.0, -1.0)
    rng = np.random.default_rng(seed)
    lam = cfg.regularization_strength
    total = cfg.epochs * n
    tail_start = total - max(1, int(round(cfg.tail_fraction * total)))
    w = np.zeros(d)
    b = 0.0
    sums = np.zeros((2, d + 1))
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n).astype(np.int64)
        b = kernels.svm_epoch(X, ypm, order, w, b, sums, epoch * n, tail_start, cfg.eta0, lam)
        avg = sums[0] / ((epoch + 1) * n)
        history.append(svm_objective(X, ypm, avg[:-1], avg[-1], lam))
    tail = sums[1] / (total - tail_start)
    return LinearSvmModel(cfg, d, seed, weights=tail[:-1].copy(), bias=float(tail[-1]),
                          objective_history=history)
