from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..serialize import register
from .base import KnnConfig, TrainedModel, config_from_dict


@register("knn")
@dataclass(eq=False)
class KnnModel(TrainedModel):
    X: np.ndarray = None
    y: np.ndarray = None

    def _scores(self, X):
        return kernels.knn_scores(self.X, self.y, X, self.config.k)

    def export_state(self):
        return self._base_meta(), {"X": self.X, "y": self.y}

    @classmethod
    def import_state(cls, meta, arrays):
        return cls(config_from_dict(meta["config"]), meta["feature_width"], meta["train_seed"],
                   X=arrays["X"], y=arrays["y"].astype(np.int64))


def fit_knn(cfg: KnnConfig, X, y, seed: int) -> KnnModel:
    return KnnModel(cfg, X.shape[1], seed, X=np.array(X, dtype=np.float64), y=np.array(y, dtype=np.int64))
