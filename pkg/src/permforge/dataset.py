"""Labeled feature matrices: vectorization, CSV persistence, splits, synthesis."""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .catalog import PermissionCatalog
from .errors import SchemaError, ShapeError
from .manifest import ManifestInfo

log = logging.getLogger(__name__)

MALWARE = 1
BENIGN = 0


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    row_ids: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeError(f"values must be 2-D, got shape {values.shape}")
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        n, d = values.shape
        names = tuple(self.feature_names)
        rows = tuple(str(r) for r in self.row_ids)
        if len(labels) != n or len(rows) != n:
            raise ShapeError(f"{n} rows but {len(labels)} labels and {len(rows)} row ids")
        if len(names) != d:
            raise ShapeError(f"{d} columns but {len(names)} feature names")
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 (benign) or 1 (malware)")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "row_ids", rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def is_binary(self) -> bool:
        return bool(np.isin(self.values, (0.0, 1.0)).all())

    def take(self, rows: Sequence[int] | np.ndarray) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        return FeatureMatrix(
            self.values[rows], self.labels[rows], self.feature_names, [self.row_ids[i] for i in rows]
        )

    def with_values(self, values: np.ndarray, feature_names: Sequence[str]) -> "FeatureMatrix":
        return FeatureMatrix(values, self.labels, tuple(feature_names), self.row_ids)

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and self.row_ids == other.row_ids
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class DatasetSplit:
    train: FeatureMatrix
    test: FeatureMatrix
    seed: int
    ratio: float


def normalize_permission(raw: str, catalog: PermissionCatalog) -> str | None:
    """Map a declared permission string onto a catalog name, or None.

    An exact match wins; otherwise the final dotted segment is looked up, so
    ``android.permission.SEND_SMS`` and ``com.android.launcher.permission.INSTALL_SHORTCUT``
    both resolve.
    """
    raw = raw.strip()
    if raw in catalog:
        return raw
    tail = raw.rsplit(".", 1)[-1]
    return tail if tail in catalog else None


def vectorize_with_report(
    manifests: Sequence[ManifestInfo],
    labels: Sequence[int],
    catalog: PermissionCatalog,
    row_ids: Sequence[str] | None = None,
) -> tuple[FeatureMatrix, Counter]:
    if len(manifests) == 0:
        raise ValueError("vectorize needs at least one manifest")
    if len(manifests) != len(labels):
        raise ValueError(f"{len(manifests)} manifests but {len(labels)} labels")
    if row_ids is None:
        row_ids = [f"row{i}" for i in range(len(manifests))]
    values = np.zeros((len(manifests), len(catalog)), dtype=np.float64)
    ignored: Counter = Counter()
    for i, info in enumerate(manifests):
        for raw in info.requested_permissions:
            name = normalize_permission(raw, catalog)
            if name is None:
                ignored[raw] += 1
            else:
                values[i, catalog.index_of(name)] = 1.0
    return FeatureMatrix(values, labels, catalog.names, row_ids), ignored


def vectorize(
    manifests: Sequence[ManifestInfo],
    labels: Sequence[int],
    catalog: PermissionCatalog,
    row_ids: Sequence[str] | None = None,
) -> FeatureMatrix:
    matrix, ignored = vectorize_with_report(manifests, labels, catalog, row_ids)
    if ignored:
        log.warning(
            "ignored %d out-of-catalog permission declarations (%d distinct)",
            sum(ignored.values()),
            len(ignored),
        )
    return matrix


def split_train_test(m: FeatureMatrix, ratio: float = 0.8, seed: int = 0, stratified: bool = True) -> DatasetSplit:
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    if m.n_rows < 2:
        raise ValueError("need at least two rows to split")
    rng = np.random.default_rng(seed)
    if stratified:
        train_parts = []
        for cls in (0, 1):
            idx = np.flatnonzero(m.labels == cls)
            if len(idx) == 0:
                continue
            idx = rng.permutation(idx)
            train_parts.append(idx[: int(round(ratio * len(idx)))])
        train_idx = np.sort(np.concatenate(train_parts))
    else:
        perm = rng.permutation(m.n_rows)
        n_train = min(max(int(round(ratio * m.n_rows)), 1), m.n_rows - 1)
        train_idx = np.sort(perm[:n_train])
    mask = np.zeros(m.n_rows, dtype=bool)
    mask[train_idx] = True
    return DatasetSplit(m.take(np.flatnonzero(mask)), m.take(np.flatnonzero(~mask)), seed, ratio)


def _format_value(v: float, binary: bool) -> str:
    if binary:
        return "1" if v else "0"
    return repr(float(v))


def save_csv(m: FeatureMatrix, sink: TextIO | str) -> None:
    """Write header ``features..., label, row_id`` then one line per row.

    Binary matrices are written as 0/1; anything else uses repr(), which
    round-trips float64 exactly.
    """
    if isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__"):
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            return save_csv(m, fh)
    binary = m.is_binary()
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow([*m.feature_names, "label", "row_id"])
    for row, label, rid in zip(m.values, m.labels, m.row_ids):
        writer.writerow([*(_format_value(v, binary) for v in row), int(label), rid])


def load_csv(source: TextIO | str) -> FeatureMatrix:
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_csv(fh)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty matrix file") from None
    if len(header) < 2 or header[-2] != "label" or header[-1] != "row_id":
        raise SchemaError("header must end with 'label,row_id'")
    names = header[:-2]
    if "label" in names or "row_id" in names:
        raise SchemaError("'label' and 'row_id' may only appear as the final two columns")
    values, labels, rows = [], [], []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise SchemaError(f"line {lineno}: expected {len(header)} fields, got {len(rec)}")
        try:
            values.append([float(x) for x in rec[:-2]])
            label = int(rec[-2])
        except ValueError as exc:
            raise SchemaError(f"line {lineno}: {exc}") from None
        if label not in (0, 1):
            raise SchemaError(f"line {lineno}: label must be 0 or 1, got {label}")
        labels.append(label)
        rows.append(rec[-1])
    arr = np.array(values, dtype=np.float64).reshape(len(values), len(names))
    return FeatureMatrix(arr, np.array(labels, dtype=np.int64), names, rows)


def read_labels(source: TextIO | str) -> dict[str, int]:
    """Read a ``row_id,label`` CSV into a mapping."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_labels(fh)
    reader = csv.reader(source)
    out = {}
    for lineno, rec in enumerate(reader, start=1):
        if not rec or (lineno == 1 and rec[:2] == ["row_id", "label"]):
            continue
        if len(rec) < 2:
            raise SchemaError(f"labels line {lineno}: expected row_id,label")
        try:
            label = int(rec[1])
        except ValueError:
            raise SchemaError(f"labels line {lineno}: bad label {rec[1]!r}") from None
        if label not in (0, 1):
            raise SchemaError(f"labels line {lineno}: label must be 0 or 1")
        out[rec[0]] = label
    return out


# ---------------------------------------------------------------- synthesis

# (malware, benign) usage probabilities planted in the default profile.
# The SMS group is strongly malware-leaning; network permissions are common to both.
_PLANTED = {
    "READ_PHONE_STATE": (0.85, 0.35),
    "WRITE_EXTERNAL_STORAGE": (0.55, 0.75),
    "ACCESS_WIFI_STATE": (0.55, 0.40),
    "RECEIVE_BOOT_COMPLETED": (0.60, 0.20),
    "WAKE_LOCK": (0.45, 0.40),
    "SEND_SMS": (0.65, 0.05),
    "ACCESS_COARSE_LOCATION": (0.40, 0.25),
    "ACCESS_NETWORK_STATE": (0.75, 0.90),
    "ACCESS_FINE_LOCATION": (0.35, 0.25),
    "VIBRATE": (0.30, 0.35),
    "RECEIVE_SMS": (0.60, 0.04),
    "READ_SMS": (0.58, 0.03),
    "READ_CONTACTS": (0.40, 0.12),
    "GET_ACCOUNTS": (0.20, 0.30),
    "WRITE_SMS": (0.56, 0.02),
    "CHANGE_WIFI_STATE": (0.25, 0.12),
    "INTERNET": (0.97, 0.98),
    "INSTALL_PACKAGES": (0.15, 0.01),
}

SMS_GROUP = ("SEND_SMS", "RECEIVE_SMS", "READ_SMS", "WRITE_SMS")
N_NEVER_USED = 59


@dataclass(frozen=True, eq=False)
class SynthConfig:
    n_per_class: int
    class_probs: tuple[np.ndarray, np.ndarray]  # (benign, malware)
    seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be positive")
        p0, p1 = (np.asarray(p, dtype=np.float64) for p in self.class_probs)
        if p0.shape != p1.shape or p0.ndim != 1:
            raise ValueError("class_probs must be two equal-length vectors")
        for p in (p0, p1):
            if not np.all((p >= 0.0) & (p <= 1.0)):
                raise ValueError("class probabilities must lie in [0, 1]")
        object.__setattr__(self, "class_probs", (_frozen(p0), _frozen(p1)))


def default_profile(catalog: PermissionCatalog, seed: int = 7) -> tuple[np.ndarray, np.ndarray]:
    """Class-conditional usage probabilities (benign, malware) over ``catalog``.

    Planted permissions get the fixed pairs above; ``N_NEVER_USED`` columns
    are never requested; the rest receive small background rates drawn
    once from ``seed``.
    """
    rng = np.random.default_rng(seed)
    d = len(catalog)
    benign = rng.uniform(0.0, 0.06, size=d)
    malware = np.clip(benign + rng.normal(0.0, 0.015, size=d), 0.0, 0.08)
    planted = [catalog.index_of(n) for n in _PLANTED if n in catalog]
    free = np.setdiff1d(np.arange(d), planted)
    never = rng.choice(free, size=min(N_NEVER_USED, len(free)), replace=False)
    benign[never] = 0.0
    malware[never] = 0.0
    for name, (pm, pb) in _PLANTED.items():
        j = catalog.index_of(name)
        if j is not None:
            malware[j], benign[j] = pm, pb
    return benign, malware


def generate_synthetic(cfg: SynthConfig, catalog: PermissionCatalog) -> FeatureMatrix:
    """Draw ``n_per_class`` benign then ``n_per_class`` malware rows of independent Bernoullis."""
    p0, p1 = cfg.class_probs
    if len(p0) != len(catalog):
        raise ValueError(f"probability vectors have length {len(p0)}, catalog has {len(catalog)}")
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_per_class
    probs = np.vstack([np.broadcast_to(p0, (n, len(p0))), np.broadcast_to(p1, (n, len(p1)))])
    values = (rng.random(probs.shape) < probs).astype(np.float64)
    labels = np.repeat([BENIGN, MALWARE], n)
    rows = [f"synth{i:06d}" for i in range(2 * n)]
    return FeatureMatrix(values, labels, catalog.names, rows)


def default_synthetic(catalog: PermissionCatalog, n_per_class: int, seed: int = 0) -> FeatureMatrix:
    return generate_synthetic(SynthConfig(n_per_class, default_profile(catalog), seed), catalog)
