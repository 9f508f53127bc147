"""Exploratory statistics and the three feature-reduction techniques."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .dataset import FeatureMatrix
from .errors import ShapeError, UndefinedCorrelationError
from .nn import Network, train_network
from .serialize import register


class ClassFrequency(NamedTuple):
    malware: np.ndarray
    benign: np.ndarray


def class_frequency(m: FeatureMatrix) -> ClassFrequency:
    """Per-class fraction of samples requesting each feature."""
    mal = m.labels == 1
    if mal.all() or not mal.any():
        raise ValueError("class_frequency needs both classes present")
    return ClassFrequency(m.values[mal].mean(axis=0), m.values[~mal].mean(axis=0))


def column_variances(m: FeatureMatrix) -> np.ndarray:
    """Population (divide-by-N) variance of every column."""
    if m.n_rows < 1:
        raise ValueError("column_variances needs at least one row")
    return m.values.var(axis=0)


def pearson_correlation(m: FeatureMatrix, cols: Sequence[int], row_filter: int | None = None) -> np.ndarray:
    """Pearson correlation between the selected columns.

    ``row_filter`` restricts rows to one class label. A column that is
    constant over the retained rows has no defined correlation.
    """
    cols = list(cols)
    X = m.values if row_filter is None else m.values[m.labels == row_filter]
    X = X[:, cols]
    if X.shape[0] < 2:
        raise ValueError("correlation needs at least two rows")
    centered = X - X.mean(axis=0)
    norms = np.sqrt((centered * centered).sum(axis=0))
    for j, nrm in enumerate(norms):
        if nrm == 0.0:
            raise UndefinedCorrelationError(m.feature_names[cols[j]])
    z = centered / norms
    corr = np.clip(z.T @ z, -1.0, 1.0)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr


def _check_width(model_width: int, m: FeatureMatrix) -> None:
    if m.n_features != model_width:
        raise ShapeError(f"model expects {model_width} features, matrix has {m.n_features}")


# ------------------------------------------------------- variance threshold


@register("variance_threshold")
@dataclass(frozen=True, eq=False)
class VarianceThresholdModel:
    threshold: float
    variances: np.ndarray
    selected: tuple[int, ...]
    feature_names: tuple[str, ...] = ()

    @property
    def width(self) -> int:
        return len(self.variances)

    def apply(self, m: FeatureMatrix) -> FeatureMatrix:
        _check_width(self.width, m)
        sel = list(self.selected)
        return m.with_values(m.values[:, sel], [m.feature_names[j] for j in sel])

    transform = apply

    def export_state(self):
        meta = {"threshold": self.threshold, "feature_names": list(self.feature_names)}
        return meta, {"variances": self.variances, "selected": np.array(self.selected, dtype=np.int64)}

    @classmethod
    def import_state(cls, meta, arrays):
        return cls(meta["threshold"], arrays["variances"], tuple(int(j) for j in arrays["selected"]),
                   tuple(meta.get("feature_names", ())))


def fit_variance_threshold(m: FeatureMatrix, threshold: float = 0.10) -> VarianceThresholdModel:
    """Keep columns with variance strictly above ``threshold``, highest variance first."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    if not m.is_binary():
        raise ValueError("variance threshold expects a binary matrix")
    var = column_variances(m)
    keep = np.flatnonzero(var > threshold)
    ranked = keep[np.argsort(-var[keep], kind="stable")]
    return VarianceThresholdModel(float(threshold), var, tuple(int(j) for j in ranked), m.feature_names)


# ---------------------------------------------------------------------- PCA


@register("pca")
@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # k x D, rows orthonormal
    explained_variance: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def width(self) -> int:
        return self.components.shape[1]

    def scores(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) @ self.components.T

    def apply(self, m: FeatureMatrix) -> FeatureMatrix:
        _check_width(self.width, m)
        return m.with_values(self.scores(m.values), [f"PC{i + 1}" for i in range(self.k)])

    transform = apply

    def reconstruct(self, scores: np.ndarray) -> np.ndarray:
        return scores @ self.components + self.mean

    def export_state(self):
        return {}, {"mean": self.mean, "components": self.components,
                    "explained_variance": self.explained_variance}

    @classmethod
    def import_state(cls, meta, arrays):
        return cls(arrays["mean"], arrays["components"], arrays["explained_variance"])


def fit_pca(m: FeatureMatrix, k: int = 16) -> PcaModel:
    """Principal axes from the eigendecomposition of the population covariance.

    Each component is signed so its largest-magnitude entry is positive.
    """
    n, d = m.shape
    if not 1 <= k <= min(n - 1, d):
        raise ValueError(f"k must lie in [1, {min(n - 1, d)}], got {k}")
    mean = m.values.mean(axis=0)
    centered = m.values - mean
    cov = centered.T @ centered / n
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")[:k]
    comps = evecs[:, order].T.copy()
    lead = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(k), lead])
    signs[signs == 0] = 1.0
    comps *= signs[:, None]
    explained = np.maximum(evals[order], 0.0)
    return PcaModel(mean, comps, explained)


# -------------------------------------------------------------- autoencoders

AE_ARCHS = {
    "AE1L": (64,),
    "AE3L": (64, 16, 64),
}


def _ae_network(arch: str, width: int, dropout: float) -> tuple[Network, int]:
    try:
        hidden = AE_ARCHS[arch.upper().replace("-", "")]
    except KeyError:
        raise ValueError(f"unknown autoencoder architecture {arch!r}") from None
    dims = [width, *hidden, width]
    code = int(np.argmin(hidden)) if len(hidden) > 1 else 0
    acts = ["relu"] * (len(dims) - 1)
    acts[code] = "sigmoid"
    acts[-1] = "sigmoid"
    drop = [True] * (len(dims) - 2) + [False]
    return Network(dims, acts, drop, dropout), code


@register("autoencoder")
@dataclass(eq=False)
class AutoencoderModel:
    arch: str
    network: Network
    code_layer_index: int  # index into layer_dims of the code layer
    epochs: int = 80
    batch_size: int = 64
    learning_rate: float = 0.001
    val_fraction: float = 0.2
    history: dict = field(default_factory=dict)

    @property
    def layer_dims(self) -> list[int]:
        return list(self.network.dims)

    @property
    def dropout_rate(self) -> float:
        return self.network.dropout_rate

    @property
    def code_width(self) -> int:
        return self.network.dims[self.code_layer_index]

    def encode_array(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.network.dims[0]:
            raise ShapeError(f"autoencoder expects {self.network.dims[0]} features, got {X.shape[1]}")
        return self.network.predict(X, upto=self.code_layer_index)

    def encode(self, m: FeatureMatrix) -> FeatureMatrix:
        codes = self.encode_array(m.values)
        return m.with_values(codes, [f"{self.arch}_{i + 1}" for i in range(codes.shape[1])])

    apply = transform = encode

    def reconstruct(self, X: np.ndarray) -> np.ndarray:
        return self.network.predict(X)

    def export_state(self):
        net = self.network
        meta = {
            "arch": self.arch,
            "layer_dims": net.dims,
            "activations": net.activations,
            "dropout_after": net.dropout_after,
            "dropout_rate": net.dropout_rate,
            "code_layer_index": self.code_layer_index,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "val_fraction": self.val_fraction,
        }
        arrays = {}
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            arrays[f"W{i}"] = w
            arrays[f"b{i}"] = b
        return meta, arrays

    @classmethod
    def import_state(cls, meta, arrays):
        net = Network(meta["layer_dims"], meta["activations"], meta["dropout_after"], meta["dropout_rate"])
        n = len(net.dims) - 1
        net.weights = [arrays[f"W{i}"] for i in range(n)]
        net.biases = [arrays[f"b{i}"] for i in range(n)]
        return cls(meta["arch"], net, meta["code_layer_index"], meta["epochs"], meta["batch_size"],
                   meta["learning_rate"], meta["val_fraction"])


def fit_autoencoder(
    m: FeatureMatrix,
    arch: str = "AE1L",
    seed: int = 0,
    *,
    input_dim: int | None = None,
    epochs: int = 80,
    batch_size: int = 64,
    learning_rate: float = 0.001,
    dropout: float = 0.4,
    val_fraction: float = 0.2,
) -> AutoencoderModel:
    """Train an autoencoder on ``m`` and keep the encoder half.

    The code layer and the reconstruction use sigmoid, every other layer
    ReLU; dropout follows every layer but the output.
    """
    if input_dim is not None and m.n_features != input_dim:
        raise ShapeError(f"autoencoder expects {input_dim} features, matrix has {m.n_features}")
    name = arch.upper().replace("-", "")
    net, code_layer = _ae_network(name, m.n_features, dropout)
    rng = np.random.default_rng(seed)
    net.init_params(rng)
    hist = train_network(net, m.values, m.values, "mse", epochs, batch_size, learning_rate, rng, val_fraction)
    # code_layer is the layer index; its output sits at dims[code_layer + 1]
    return AutoencoderModel(name, net, code_layer + 1, epochs, batch_size, learning_rate, val_fraction, hist)


def encode(model: AutoencoderModel, m: FeatureMatrix) -> FeatureMatrix:
    return model.encode(m)


def apply(model, m: FeatureMatrix) -> FeatureMatrix:
    """Apply any fitted reduction model to ``m``."""
    return model.apply(m)
