"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The two paths perform the same floating-point operations in the same order,
so results agree bit-for-bit on the same inputs (except the SVM epoch,
where per-sample dot products may round differently). ``backend()`` in
``permforge._accel`` reports which one is active.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit


# ------------------------------------------------------------ split search

# Criteria are rounded to this many bits relative to the node weight, so that
# splits equal up to float noise tie and fall to the index/threshold rule.
_CRIT_BITS = 2.0 ** 40


@njit
def _crit_scale(total):
    return _CRIT_BITS / total if total > 0.0 else 1.0



def _split_numpy(X, y, w, idx, feat_order, max_features, min_leaf):
    xn = X[idx]
    n = len(idx)
    yn = y[idx]
    wn = w[idx]
    w1 = np.where(yn == 1, wn, 0.0)
    w0 = np.where(yn == 1, 0.0, wn)
    tot1 = np.cumsum(w1)[-1]
    tot0 = np.cumsum(w0)[-1]
    scale = _crit_scale(tot0 + tot1)

    ordered = xn[:, feat_order]
    nonconst = ordered.min(axis=0) != ordered.max(axis=0)
    chosen = feat_order[nonconst][:max_features]
    if len(chosen) == 0:
        return -1, 0.0, np.inf

    sub = xn[:, chosen]
    order = np.argsort(sub, axis=0, kind="mergesort")
    sv = np.take_along_axis(sub, order, axis=0)
    l1 = np.cumsum(w1[order], axis=0)[:-1]
    l0 = np.cumsum(w0[order], axis=0)[:-1]
    r1 = tot1 - l1
    r0 = tot0 - l0
    nl = np.arange(1, n)[:, None]
    valid = (sv[:-1] != sv[1:]) & (nl >= min_leaf) & (n - nl >= min_leaf)
    if not valid.any():
        return -1, 0.0, np.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        wl = l0 + l1
        wr = r0 + r1
        # a child can carry zero total weight once boosting weights underflow
        gl = np.where(wl > 0.0, wl - (l0 * l0 + l1 * l1) / wl, 0.0)
        gr = np.where(wr > 0.0, wr - (r0 * r0 + r1 * r1) / wr, 0.0)
        crit = np.rint((gl + gr) * scale) / scale
    thr = 0.5 * (sv[:-1] + sv[1:])
    thr = np.where(thr == sv[1:], sv[:-1], thr)

    rows, cols = np.nonzero(valid)
    c = crit[rows, cols]
    f = chosen[cols]
    t = thr[rows, cols]
    best = np.lexsort((t, f, c))[0]
    return int(f[best]), float(t[best]), float(c[best])


@njit
def _split_numba(X, y, w, idx, feat_order, max_features, min_leaf):
    n = idx.shape[0]
    tot1 = 0.0
    tot0 = 0.0
    for i in range(n):
        r = idx[i]
        if y[r] == 1:
            tot1 += w[r]
        else:
            tot0 += w[r]

    scale = _crit_scale(tot0 + tot1)
    best_f = -1
    best_t = 0.0
    best_c = np.inf
    xs = np.empty(n)
    visited = 0
    for fi in range(feat_order.shape[0]):
        if visited >= max_features:
            break
        f = feat_order[fi]
        lo = np.inf
        hi = -np.inf
        for i in range(n):
            v = X[idx[i], f]
            xs[i] = v
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        if lo == hi:
            continue
        visited += 1
        order = np.argsort(xs, kind="mergesort")
        l1 = 0.0
        l0 = 0.0
        for i in range(n - 1):
            r = idx[order[i]]
            if y[r] == 1:
                l1 += w[r]
            else:
                l0 += w[r]
            a = xs[order[i]]
            b = xs[order[i + 1]]
            if a == b:
                continue
            nl = i + 1
            if nl < min_leaf or n - nl < min_leaf:
                continue
            r1 = tot1 - l1
            r0 = tot0 - l0
            wl = l0 + l1
            wr = r0 + r1
            gl = 0.0
            if wl > 0.0:
                gl = wl - (l0 * l0 + l1 * l1) / wl
            gr = 0.0
            if wr > 0.0:
                gr = wr - (r0 * r0 + r1 * r1) / wr
            c = np.rint((gl + gr) * scale) / scale
            t = 0.5 * (a + b)
            if t == b:
                t = a
            if c < best_c or (c == best_c and (f < best_f or (f == best_f and t < best_t))):
                best_c = c
                best_f = f
                best_t = t
    return best_f, best_t, best_c


def best_split(X, y, w, idx, feat_order, max_features, min_leaf, use_numba=None):
    """Lowest weighted-Gini split of rows ``idx``.

    Features are examined in ``feat_order`` until ``max_features``
    non-constant ones have been seen. Candidate thresholds are midpoints
    between consecutive distinct values; both children must keep at least
    ``min_leaf`` rows. Ties prefer the lowest feature index, then the lowest
    threshold. Returns ``(feature, threshold, criterion)`` with feature -1
    when no valid split exists; criterion is the summed child impurity
    weighted by child weight.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    fn = _split_numba if use_numba else _split_numpy
    f, t, c = fn(X, y, w, idx, feat_order, max_features, min_leaf)
    return int(f), float(t), float(c)


# ----------------------------------------------------------- tree traversal


def _apply_numpy(feature, threshold, left, right, X):
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return node


@njit
def _apply_numba(feature, threshold, left, right, X):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        nd = 0
        while feature[nd] >= 0:
            if X[i, feature[nd]] <= threshold[nd]:
                nd = left[nd]
            else:
                nd = right[nd]
        out[i] = nd
    return out


def tree_apply(feature, threshold, left, right, X, use_numba=None):
    """Leaf index reached by every row of ``X`` (left branch when x <= threshold)."""
    if use_numba is None:
        use_numba = USE_NUMBA
    fn = _apply_numba if use_numba else _apply_numpy
    return fn(feature, threshold, left, right, np.ascontiguousarray(X, dtype=np.float64))


# ----------------------------------------------------------------- k-NN


def _knn_numpy(Xt, yt, Xq, k, chunk=256):
    out = np.empty(Xq.shape[0])
    ypos = (yt == 1).astype(np.float64)
    for s in range(0, Xq.shape[0], chunk):
        q = Xq[s:s + chunk]
        dist = np.zeros((q.shape[0], Xt.shape[0]))
        for j in range(Xt.shape[1]):
            diff = q[:, j, None] - Xt[None, :, j]
            dist += diff * diff
        kth = np.partition(dist, k - 1, axis=1)[:, k - 1]
        votes = dist <= kth[:, None]
        out[s:s + chunk] = (votes @ ypos) / votes.sum(axis=1)
    return out


@njit
def _knn_numba(Xt, yt, Xq, k):
    nt = Xt.shape[0]
    d = Xt.shape[1]
    out = np.empty(Xq.shape[0])
    dist = np.empty(nt)
    for i in range(Xq.shape[0]):
        for t in range(nt):
            acc = 0.0
            for j in range(d):
                diff = Xq[i, j] - Xt[t, j]
                acc += diff * diff
            dist[t] = acc
        kth = np.partition(dist, k - 1)[k - 1]
        pos = 0
        cnt = 0
        for t in range(nt):
            if dist[t] <= kth:
                cnt += 1
                if yt[t] == 1:
                    pos += 1
        out[i] = pos / cnt
    return out


def knn_scores(Xt, yt, Xq, k, use_numba=None):
    """Fraction of malware labels among the ``k`` nearest training rows.

    Every training row tied with the k-th smallest squared distance joins
    the vote, so the vote set can exceed ``k``.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    k = min(k, Xt.shape[0])
    Xt = np.ascontiguousarray(Xt, dtype=np.float64)
    Xq = np.ascontiguousarray(Xq, dtype=np.float64)
    yt = np.ascontiguousarray(yt, dtype=np.int64)
    fn = _knn_numba if use_numba else _knn_numpy
    return fn(Xt, yt, Xq, k)


# ---------------------------------------------------------- linear SVM epoch


def _svm_epoch_numpy(X, ypm, order, w, b, sums, step0, tail_start, eta0, lam, n_rows):
    t = step0
    for i in order:
        eta = eta0 / (1.0 + t / n_rows)
        margin = ypm[i] * (X[i] @ w + b)
        g = lam * np.sign(w)
        if margin < 1.0:
            w -= eta * (g - ypm[i] * X[i])
            b += eta * ypm[i]
        else:
            w -= eta * g
        t += 1
        sums[0, :-1] += w
        sums[0, -1] += b
        if t > tail_start:
            sums[1, :-1] += w
            sums[1, -1] += b
    return b


@njit
def _svm_epoch_numba(X, ypm, order, w, b, sums, step0, tail_start, eta0, lam, n_rows):
    d = X.shape[1]
    t = step0
    for oi in range(order.shape[0]):
        i = order[oi]
        eta = eta0 / (1.0 + t / n_rows)
        acc = 0.0
        for j in range(d):
            acc += X[i, j] * w[j]
        margin = ypm[i] * (acc + b)
        hinge = margin < 1.0
        for j in range(d):
            g = lam * np.sign(w[j])
            if hinge:
                g -= ypm[i] * X[i, j]
            w[j] -= eta * g
        if hinge:
            b += eta * ypm[i]
        t += 1
        for j in range(d):
            sums[0, j] += w[j]
        sums[0, d] += b
        if t > tail_start:
            for j in range(d):
                sums[1, j] += w[j]
            sums[1, d] += b
    return b


def svm_epoch(X, ypm, order, w, b, sums, step0, tail_start, eta0, lam, use_numba=None):
    """One shuffled pass of hinge + l1 subgradient descent, updating ``w`` in place.

    Step size is ``eta0 / (1 + t / N)`` at global step ``t``. Row 0 of
    ``sums`` (shape 2 x (D + 1), bias last) accumulates every iterate; row 1
    only those after step ``tail_start``. Returns the new bias.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    fn = _svm_epoch_numba if use_numba else _svm_epoch_numpy
    return float(fn(X, ypm, order, w, b, sums, step0, tail_start, eta0, lam, float(X.shape[0])))
