"""Small fully connected network with dropout and Adam, shared by the
autoencoders and the DNN classifiers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "sigmoid")
LOSSES = ("mse", "bce")
_EPS = 1e-12


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class Network:
    """Dense layers ``dims[0] -> ... -> dims[-1]``.

    ``activations[l]`` applies after layer ``l``; inverted dropout at
    ``dropout_rate`` follows every layer whose ``dropout_after[l]`` is set,
    and only while training.
    """

    dims: list[int]
    activations: list[str]
    dropout_after: list[bool]
    dropout_rate: float = 0.0
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        n_layers = len(self.dims) - 1
        if n_layers < 1:
            raise ValueError("network needs at least two layer widths")
        if len(self.activations) != n_layers or len(self.dropout_after) != n_layers:
            raise ValueError("one activation and dropout flag per layer")
        for a in self.activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")

    @property
    def n_layers(self) -> int:
        return len(self.dims) - 1

    def init_params(self, rng: np.random.Generator) -> None:
        # uniform, scaled by fan-in
        self.weights, self.biases = [], []
        for fan_in, fan_out in zip(self.dims[:-1], self.dims[1:]):
            limit = np.sqrt(6.0 / fan_in)
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def forward(self, X, rng: np.random.Generator | None = None, upto: int | None = None):
        """Run the layers, returning a cache for ``gradients``.

        ``cache["outs"][0]`` is the input and ``cache["outs"][l + 1]`` the
        (post-dropout) output of layer ``l``. Dropout is active only when
        ``rng`` is given.
        """
        upto = self.n_layers if upto is None else upto
        outs, acts, masks = [X], [], []
        h = X
        for layer in range(upto):
            z = h @ self.weights[layer] + self.biases[layer]
            a = np.maximum(z, 0.0) if self.activations[layer] == "relu" else sigmoid(z)
            mask = None
            h = a
            if rng is not None and self.dropout_after[layer] and self.dropout_rate > 0:
                keep = 1.0 - self.dropout_rate
                mask = (rng.random(a.shape) < keep) / keep
                h = a * mask
            outs.append(h)
            acts.append(a)
            masks.append(mask)
        return {"outs": outs, "acts": acts, "masks": masks}

    def predict(self, X, upto: int | None = None) -> np.ndarray:
        return self.forward(X, None, upto)["outs"][-1]

    def loss(self, pred, target, kind: str) -> float:
        if kind == "mse":
            return float(np.mean((pred - target) ** 2))
        p = np.clip(pred, _EPS, 1.0 - _EPS)
        return float(-np.mean(target * np.log(p) + (1.0 - target) * np.log(1.0 - p)))

    def gradients(self, cache, target, kind: str):
        """Backpropagate ``kind`` loss (mean over all output elements)."""
        outs, acts, masks = cache["outs"], cache["acts"], cache["masks"]
        pred = outs[-1]
        if kind == "bce" and self.activations[-1] == "sigmoid" and masks[-1] is None:
            delta = (pred - target) / pred.size
        else:
            if kind == "mse":
                dout = 2.0 * (pred - target) / pred.size
            else:
                p = np.clip(pred, _EPS, 1.0 - _EPS)
                dout = (p - target) / (p * (1.0 - p)) / pred.size
            if masks[-1] is not None:
                dout = dout * masks[-1]
            delta = self._act_grad(self.n_layers - 1, acts[-1]) * dout
        grads_w = [None] * self.n_layers
        grads_b = [None] * self.n_layers
        for layer in range(self.n_layers - 1, -1, -1):
            grads_w[layer] = outs[layer].T @ delta
            grads_b[layer] = delta.sum(axis=0)
            if layer == 0:
                break
            dh = delta @ self.weights[layer].T
            prev = layer - 1
            if masks[prev] is not None:
                dh = dh * masks[prev]
            delta = dh * self._act_grad(prev, acts[prev])
        return grads_w, grads_b

    def _act_grad(self, layer, act):
        if self.activations[layer] == "relu":
            return (act > 0).astype(act.dtype)
        return act * (1.0 - act)


class Adam:
    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1 ** self.t
        corr2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)


def train_network(
    net: Network,
    X: np.ndarray,
    Y: np.ndarray,
    loss: str,
    epochs: int,
    batch_size: int,
    lr: float,
    rng: np.random.Generator,
    val_fraction: float = 0.0,
) -> dict[str, list[float]]:
    """Minibatch Adam for a fixed number of epochs; no early stopping.

    The last ``val_fraction`` of a seeded shuffle is held out and only
    monitored. Returns per-epoch histories: ``loss`` is the mean batch loss
    with dropout active, ``train_loss``/``val_loss`` are evaluated without it.
    """
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}")
    n = X.shape[0]
    perm = rng.permutation(n)
    n_val = int(round(val_fraction * n)) if val_fraction > 0 else 0
    if n - n_val < 1:
        n_val = 0
    tr, va = perm[: n - n_val], perm[n - n_val:]
    Xtr, Ytr = X[tr], Y[tr]
    params = net.params()
    opt = Adam(params, lr=lr)
    hist: dict[str, list[float]] = {"loss": [], "train_loss": [], "val_loss": []}
    for _ in range(epochs):
        order = rng.permutation(len(tr))
        batch_losses = []
        for s in range(0, len(order), batch_size):
            b = order[s:s + batch_size]
            cache = net.forward(Xtr[b], rng)
            batch_losses.append(net.loss(cache["outs"][-1], Ytr[b], loss))
            gw, gb = net.gradients(cache, Ytr[b], loss)
            opt.step(params, [g for pair in zip(gw, gb) for g in pair])
        hist["loss"].append(float(np.mean(batch_losses)))
        hist["train_loss"].append(net.loss(net.predict(Xtr), Ytr, loss))
        if n_val:
            hist["val_loss"].append(net.loss(net.predict(X[va]), Y[va], loss))
    return hist
