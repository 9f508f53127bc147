from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateDataError
from ..nn import Network, train_network
from ..serialize import register
from .base import DnnConfig, TrainedModel, config_from_dict


def build_network(cfg: DnnConfig, width: int) -> Network:
    dims = cfg.dims_for(width)
    n_layers = len(dims) - 1
    acts = ["relu"] * (n_layers - 1) + ["sigmoid"]
    drop = [True] * (n_layers - 1) + [False]
    return Network(dims, acts, drop, cfg.dropout)


@register("dnn")
@dataclass(eq=False)
class DnnModel(TrainedModel):
    network: Network = None
    history: dict = field(default_factory=dict)

    def _scores(self, X):
        return self.network.predict(X)[:, 0]

    @classmethod
    def untrained(cls, cfg: DnnConfig, width: int, seed: int = 0, zero_output: bool = False) -> "DnnModel":
        net = build_network(cfg, width)
        net.init_params(np.random.default_rng(seed))
        if zero_output:
            net.weights[-1][:] = 0.0
            net.biases[-1][:] = 0.0
        return cls(cfg, width, seed, network=net)

    def export_state(self):
        meta = self._base_meta()
        arrays = {}
        for i, (w, b) in enumerate(zip(self.network.weights, self.network.biases)):
            arrays[f"W{i}"] = w
            arrays[f"b{i}"] = b
        return meta, arrays

    @classmethod
    def import_state(cls, meta, arrays):
        cfg = config_from_dict(meta["config"])
        net = build_network(cfg, meta["feature_width"])
        net.weights = [arrays[f"W{i}"] for i in range(net.n_layers)]
        net.biases = [arrays[f"b{i}"] for i in range(net.n_layers)]
        return cls(cfg, meta["feature_width"], meta["train_seed"], network=net)


def fit_dnn(cfg: DnnConfig, X, y, seed: int) -> DnnModel:
    if len(np.unique(y)) < 2:
        raise DegenerateDataError("DNN training needs both classes present")
    model = DnnModel.untrained(cfg, X.shape[1], seed)
    rng = np.random.default_rng(seed + 1)
    target = np.asarray(y, dtype=np.float64)[:, None]
    model.history = train_network(model.network, np.asarray(X, dtype=np.float64), target, "bce",
                                  cfg.epochs, cfg.batch_size, cfg.learning_rate, rng, cfg.val_fraction)
    return model
