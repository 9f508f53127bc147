"""Independent reference computations used as test oracles."""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigh(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for a small symmetric matrix.

    Returns eigenvalues in descending order and the matching unit
    eigenvectors as rows.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k, p], a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p, k], a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = v[k, p], v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    evals = np.diag(a).copy()
    order = sorted(range(n), key=lambda i: -evals[i])
    return evals[order], v[:, order].T


def pairwise_auc(labels, scores) -> float:
    """Mann-Whitney statistic by brute force over every (positive, negative) pair."""
    pos = [s for y, s in zip(labels, scores) if y == 1]
    neg = [s for y, s in zip(labels, scores) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else (0.5 if p == q else 0.0)
    return total / (len(pos) * len(neg))


def covariance(x: np.ndarray) -> np.ndarray:
    """Population covariance by explicit double loop."""
    n, d = x.shape
    means = [sum(x[i, j] for i in range(n)) / n for j in range(d)]
    c = np.zeros((d, d))
    for a in range(d):
        for b in range(d):
            c[a, b] = sum((x[i, a] - means[a]) * (x[i, b] - means[b]) for i in range(n)) / n
    return c


def relative_error(a: float, b: float, floor: float = 1e-8) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def finite_difference_check(net, X, Y, kind: str, h: float = 1e-5) -> float:
    """Largest relative error between backprop and central differences over every parameter."""
    cache = net.forward(X)
    gw, gb = net.gradients(cache, Y, kind)
    worst = 0.0
    for params, grads in ((net.weights, gw), (net.biases, gb)):
        for p, g in zip(params, grads):
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                old = p[idx]
                p[idx] = old + h
                up = net.loss(net.predict(X), Y, kind)
                p[idx] = old - h
                down = net.loss(net.predict(X), Y, kind)
                p[idx] = old
                numeric = (up - down) / (2 * h)
                worst = max(worst, relative_error(g[idx], numeric))
    return worst


def pairwise_auc_matrix(labels, scores) -> float:
    """Same statistic as ``pairwise_auc``, evaluated as an explicit N_pos x N_neg comparison grid."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=float)
    pos = scores[labels == 1][:, None]
    neg = scores[labels == 0][None, :]
    wins = (pos > neg).sum() + 0.5 * (pos == neg).sum()
    return float(wins) / (pos.size * neg.size)
