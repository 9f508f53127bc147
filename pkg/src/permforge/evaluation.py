"""Confusion-matrix metrics, rank-statistic AUC and the reduction x classifier grid."""

from __future__ import annotations

import csv
import hashlib
import statistics
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, TextIO

import numpy as np

from . import classifiers
from .dataset import FeatureMatrix, split_train_test
from .errors import PermforgeError
from .features import fit_autoencoder, fit_pca, fit_variance_threshold

REDUCTIONS = ("OD", "VT", "PCA", "AE1L", "AE3L")
REPORT_COLUMNS = ("reduction", "classifier", "accuracy", "tpr", "tnr", "auc", "tp", "fp", "tn", "fn",
                  "train_time_s", "test_time_s", "seed")
UNDEFINED = "undefined"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Metrics:
    accuracy: Fraction
    tpr: Fraction | None  # None when there are no positives
    tnr: Fraction | None  # None when there are no negatives


def confusion(labels: Sequence[int], predictions: Sequence[int]) -> ConfusionCounts:
    y = np.asarray(labels).astype(np.int64).ravel()
    p = np.asarray(predictions).astype(np.int64).ravel()
    if len(y) != len(p):
        raise ValueError(f"{len(y)} labels but {len(p)} predictions")
    if len(y) == 0:
        raise ValueError("confusion needs at least one sample")
    return ConfusionCounts(
        tp=int(np.sum((y == 1) & (p == 1))),
        fp=int(np.sum((y == 0) & (p == 1))),
        tn=int(np.sum((y == 0) & (p == 0))),
        fn=int(np.sum((y == 1) & (p == 0))),
    )


def metrics(counts: ConfusionCounts) -> Metrics:
    """Accuracy, recall on malware and recall on benign, as exact fractions."""
    if counts.total <= 0:
        raise ValueError("metrics need at least one counted sample")
    acc = Fraction(counts.tp + counts.tn, counts.total)
    pos = counts.tp + counts.fn
    neg = counts.tn + counts.fp
    tpr = Fraction(counts.tp, pos) if pos else None
    tnr = Fraction(counts.tn, neg) if neg else None
    return Metrics(acc, tpr, tnr)


def roc_auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg), ties counted one half.

    Computed from mid-ranks after a single sort.
    """
    y = np.asarray(labels).astype(np.int64).ravel()
    s = np.asarray(scores, dtype=np.float64).ravel()
    if len(y) != len(s):
        raise ValueError("labels and scores differ in length")
    n_pos = int(np.sum(y == 1))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes present")
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    # mid-rank of each tie group, 1-based
    starts = np.flatnonzero(np.r_[True, sorted_s[1:] != sorted_s[:-1]])
    ends = np.r_[starts[1:], len(s)]
    mid = (starts + ends + 1) / 2.0
    ranks = np.empty(len(s))
    ranks[order] = np.repeat(mid, ends - starts)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class EvalReport:
    reduction: str
    classifier: str
    accuracy: float
    tpr: float | None
    tnr: float | None
    auc: float
    counts: ConfusionCounts
    train_time_s: float
    test_time_s: float
    seed: int
    extras: dict = field(default_factory=dict, repr=False)

    def row(self) -> list[str]:
        def num(v):
            return UNDEFINED if v is None else repr(float(v))

        c = self.counts
        return [self.reduction, self.classifier, num(self.accuracy), num(self.tpr), num(self.tnr),
                num(self.auc), str(c.tp), str(c.fp), str(c.tn), str(c.fn),
                repr(self.train_time_s), repr(self.test_time_s), str(self.seed)]


def evaluate_scores(labels, scores, threshold: float = 0.5):
    preds = (np.asarray(scores) >= threshold).astype(np.int64)
    counts = confusion(labels, preds)
    met = metrics(counts)
    auc = roc_auc(labels, scores) if 0 < int(np.sum(labels)) < len(labels) else None
    return counts, met, auc


def derive_seed(base_seed: int, *tags: str) -> int:
    """Stable 63-bit seed from a base seed and string tags."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(base_seed)).encode())
    for t in tags:
        h.update(b"\x00" + t.encode())
    return int.from_bytes(h.digest(), "little") >> 1


def canonical_reduction(name: str) -> str:
    key = name.upper().replace("-", "").replace("_", "")
    if key not in REDUCTIONS:
        raise ValueError(f"unknown reduction {name!r}")
    return key


def canonical_classifier(name: str) -> str:
    cfg = classifiers.default_config(name)
    return cfg.kind


class IdentityReduction:
    def apply(self, m: FeatureMatrix) -> FeatureMatrix:
        return m

    transform = apply


def fit_reduction(kind: str, train: FeatureMatrix, seed: int, threshold: float = 0.10,
                  components: int = 16, ae_options: dict | None = None):
    """Fit one of OD/VT/PCA/AE1L/AE3L on the training split."""
    kind = canonical_reduction(kind)
    if kind == "OD":
        return IdentityReduction()
    if kind == "VT":
        return fit_variance_threshold(train, threshold)
    if kind == "PCA":
        return fit_pca(train, components)
    return fit_autoencoder(train, kind, seed, **(ae_options or {}))


def _timed(fn: Callable, runs: int):
    times, result = [], None
    for _ in range(max(1, runs)):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
        if result is None:
            result = out
    return result, statistics.median(times)


class GridCellError(PermforgeError):
    def __init__(self, reduction: str, classifier: str, cause: Exception):
        self.reduction, self.classifier, self.cause = reduction, classifier, cause
        super().__init__(f"grid cell ({reduction}, {classifier}) failed: {type(cause).__name__}: {cause}")


def run_grid(
    data: FeatureMatrix,
    reductions: Sequence[str] = REDUCTIONS,
    classifier_names: Sequence[str] = classifiers.CLASSIFIER_KINDS,
    ratio: float = 0.8,
    seed: int = 0,
    timing_runs: int = 3,
    *,
    threshold: float = 0.10,
    components: int = 16,
    configs: dict | None = None,
    ae_options: dict | None = None,
    stratified: bool = True,
    progress: Callable[[EvalReport], None] | None = None,
) -> list[EvalReport]:
    """Evaluate every (reduction, classifier) pair on one seeded split.

    Reductions are fitted once per reduction on the training split. Train
    time covers applying the reduction to the training split plus fitting;
    test time covers transforming the test split plus scoring. Both are
    medians over ``timing_runs`` repetitions. ``configs`` maps a classifier
    name to a config overriding its defaults.
    """
    if not data.is_binary():
        raise ValueError("run_grid expects the full-width binary matrix")
    if len(np.unique(data.labels)) < 2:
        raise ValueError("run_grid needs both classes present")
    split = split_train_test(data, ratio, seed, stratified)
    configs = {canonical_classifier(k): v for k, v in (configs or {}).items()}
    _warm_kernels(split.train)
    reports = []
    for red in (canonical_reduction(r) for r in reductions):
        try:
            reducer = fit_reduction(red, split.train, derive_seed(seed, red), threshold, components, ae_options)
        except Exception as exc:
            raise GridCellError(red, "*", exc) from exc
        for clf_name in classifier_names:
            kind = canonical_classifier(clf_name)
            cfg = configs.get(kind) or classifiers.default_config(kind)
            cell_seed = derive_seed(seed, red, kind)
            try:
                report = _run_cell(red, kind, cfg, reducer, split, cell_seed, timing_runs)
            except Exception as exc:
                raise GridCellError(red, kind, exc) from exc
            reports.append(report)
            if progress:
                progress(report)
    return reports


def _warm_kernels(train: FeatureMatrix) -> None:
    """Compile (or load cached) JIT kernels so their cost stays out of the timed cells."""
    rows = np.concatenate([np.flatnonzero(train.labels == c)[:8] for c in (0, 1)])
    tiny = train.take(rows)
    for cfg in (classifiers.DecisionTreeConfig(min_samples_leaf=1), classifiers.KnnConfig(k=3),
                classifiers.LinearSvmConfig(epochs=1)):
        classifiers.predict_scores(classifiers.fit(cfg, tiny, 0), tiny)


def _run_cell(red, kind, cfg, reducer, split, cell_seed, timing_runs) -> EvalReport:
    def train():
        tr = reducer.apply(split.train)
        return classifiers.fit(cfg, tr, cell_seed)

    model, train_t = _timed(train, timing_runs)

    def test():
        te = reducer.apply(split.test)
        return classifiers.predict_scores(model, te)

    scores, test_t = _timed(test, timing_runs)
    counts, met, auc = evaluate_scores(split.test.labels, scores)
    return EvalReport(
        reduction=red,
        classifier=kind,
        accuracy=float(met.accuracy),
        tpr=None if met.tpr is None else float(met.tpr),
        tnr=None if met.tnr is None else float(met.tnr),
        auc=auc,
        counts=counts,
        train_time_s=train_t,
        test_time_s=test_t,
        seed=cell_seed,
        extras={"oob_score": getattr(model, "oob_score", None)},
    )


def write_report_csv(reports: Sequence[EvalReport], sink: TextIO | str) -> None:
    if isinstance(sink, str) or hasattr(sink, "__fspath__"):
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            return write_report_csv(reports, fh)
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in reports:
        writer.writerow(r.row())


def format_table(reports: Sequence[EvalReport]) -> str:
    """Plain-text table in the layout of the evaluation grid (percentages)."""
    def pct(v):
        return "  n/a" if v is None else f"{100 * v:5.1f}"

    lines = [f"{'Reduction':<9} {'Classifier':<10} {'Acc':>5} {'TPR':>5} {'TNR':>5} {'AUC':>5} "
             f"{'Train (s)':>10} {'Test (s)':>9}"]
    for r in reports:
        lines.append(f"{r.reduction:<9} {r.classifier:<10} {pct(r.accuracy)} {pct(r.tpr)} {pct(r.tnr)} "
                     f"{pct(r.auc)} {r.train_time_s:10.4f} {r.test_time_s:9.4f}")
    return "\n".join(lines) + "\n"
