"""Real-valued AdaBoost (SAMME.R, two classes) over depth-limited Gini stumps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..serialize import register
from .base import AdaBoostConfig, TrainedModel, config_from_dict
from .tree import TreeArrays, build_tree

PROB_CLIP = 1e-10


def stump_log_ratio(stump: TreeArrays, X: np.ndarray) -> np.ndarray:
    """``log p1 - log p0`` of the stump's leaf probabilities, clipped away from 0."""
    p1 = np.clip(stump.scores(X), PROB_CLIP, 1.0 - PROB_CLIP)
    return np.log(p1) - np.log1p(-p1)


@register("adaboost")
@dataclass(eq=False)
class AdaBoostModel(TrainedModel):
    stumps: list[TreeArrays] = field(default_factory=list)
    stump_errors: list[float] = field(default_factory=list)
    weight_sums: list[float] = field(default_factory=list)

    def decision_function(self, X):
        """Summed SAMME.R contributions ``sum_k 0.5 (log p1 - log p0)``."""
        X = self.check_width(X)
        total = np.zeros(X.shape[0])
        for stump in self.stumps:
            total += 0.5 * stump_log_ratio(stump, X)
        return total

    def _scores(self, X):
        if not self.stumps:
            return np.full(X.shape[0], 0.5)
        mean_ratio = 2.0 * self.decision_function(X) / len(self.stumps)
        return 1.0 / (1.0 + np.exp(-mean_ratio))

    def export_state(self):
        meta = self._base_meta()
        meta["n_stumps"] = len(self.stumps)
        meta["stump_errors"] = self.stump_errors
        return meta, {f"stump{i}": s.to_table() for i, s in enumerate(self.stumps)}

    @classmethod
    def import_state(cls, meta, arrays):
        stumps = [TreeArrays.from_table(arrays[f"stump{i}"]) for i in range(meta["n_stumps"])]
        return cls(config_from_dict(meta["config"]), meta["feature_width"], meta["train_seed"],
                   stumps=stumps, stump_errors=list(meta.get("stump_errors", [])))


def fit_adaboost(cfg: AdaBoostConfig, X, y, seed: int) -> AdaBoostModel:
    """Boost stumps fitted to the current sample weights.

    A stump whose weighted error reaches 0.5 is discarded and boosting
    stops; a perfect stump is kept and boosting stops.
    """
    n, width = X.shape
    w = np.full(n, 1.0 / n)
    ypm = np.where(y == 1, 1.0, -1.0)
    rows = np.arange(n)
    model = AdaBoostModel(cfg, width, seed)
    model.weight_sums.append(float(w.sum()))
    for _ in range(cfg.n_estimators):
        stump = build_tree(X, y, w, rows, None, width, 1, cfg.base_max_depth)
        ratio = stump_log_ratio(stump, X)
        pred = (ratio >= 0.0).astype(np.int64)
        err = float(w[pred != y].sum())
        if err >= 0.5:
            break
        model.stumps.append(stump)
        model.stump_errors.append(err)
        if err <= 0.0:
            break
        w = w * np.exp(-cfg.learning_rate * ypm * 0.5 * ratio)
        w /= w.sum()
        model.weight_sums.append(float(w.sum()))
    return model
