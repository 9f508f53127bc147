"""Versioned text container shared by reduction models and classifiers.

Layout::

    permforge-model v1 <kind>
    meta <json object>
    array <name> <f8|i8> <ndim> <dim>...
    <one line per leading-axis row, space separated>
    ...
    end

Floats are written with repr(), which round-trips float64 exactly.
"""

from __future__ import annotations

import json
import os
from typing import Callable

import numpy as np

from .errors import ModelFormatError

MAGIC = "permforge-model"
VERSION = "v1"

_REGISTRY: dict[str, type] = {}


def register(kind: str) -> Callable[[type], type]:
    def deco(cls):
        cls.KIND = kind
        _REGISTRY[kind] = cls
        return cls

    return deco


def _fmt(v, integer: bool) -> str:
    return str(int(v)) if integer else repr(float(v))


def dumps(kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> str:
    lines = [f"{MAGIC} {VERSION} {kind}", "meta " + json.dumps(meta, sort_keys=True)]
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        integer = np.issubdtype(arr.dtype, np.integer) or arr.dtype == bool
        lines.append(f"array {name} {'i8' if integer else 'f8'} {arr.ndim} {' '.join(map(str, arr.shape))}".rstrip())
        if arr.ndim == 0:
            lines.append(_fmt(arr, integer))
        elif arr.ndim == 1:
            lines.append(" ".join(_fmt(v, integer) for v in arr))
        else:
            for row in arr.reshape(arr.shape[0], -1):
                lines.append(" ".join(_fmt(v, integer) for v in row))
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads(text: str) -> tuple[str, dict, dict[str, np.ndarray]]:
    lines = text.splitlines()
    if not lines:
        raise ModelFormatError("empty model file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != MAGIC:
        raise ModelFormatError(f"not a permforge model: {lines[0][:60]!r}")
    if head[1] != VERSION:
        raise ModelFormatError(f"unsupported model version {head[1]}")
    kind = head[2]
    if len(lines) < 2 or not lines[1].startswith("meta "):
        raise ModelFormatError("missing meta line")
    try:
        meta = json.loads(lines[1][5:])
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"bad meta json: {exc}") from None
    arrays: dict[str, np.ndarray] = {}
    pos = 2
    while pos < len(lines) and lines[pos] != "end":
        parts = lines[pos].split()
        try:
            if parts[0] != "array":
                raise ValueError(f"expected 'array', found {parts[0]!r}")
            name, dtype, ndim = parts[1], parts[2], int(parts[3])
            shape = tuple(int(s) for s in parts[4:4 + ndim])
            if len(shape) != ndim:
                raise ValueError("shape does not match ndim")
            conv = int if dtype == "i8" else float
            npdt = np.int64 if dtype == "i8" else np.float64
            pos += 1
            if ndim == 0:
                arr = np.array(conv(lines[pos]), dtype=npdt)
                pos += 1
            elif ndim == 1:
                arr = np.array([conv(v) for v in lines[pos].split()], dtype=npdt).reshape(shape)
                pos += 1
            else:
                rows = [[conv(v) for v in lines[pos + r].split()] for r in range(shape[0])]
                pos += shape[0]
                arr = np.array(rows, dtype=npdt).reshape(shape)
        except (IndexError, ValueError) as exc:
            raise ModelFormatError(f"line {pos + 1}: {exc}") from None
        arrays[name] = arr
    if pos >= len(lines):
        raise ModelFormatError("missing 'end' marker")
    return kind, meta, arrays


def model_to_text(model) -> str:
    meta, arrays = model.export_state()
    return dumps(model.KIND, meta, arrays)


def model_from_text(text: str):
    kind, meta, arrays = loads(text)
    try:
        cls = _REGISTRY[kind]
    except KeyError:
        raise ModelFormatError(f"unknown model kind {kind!r}") from None
    try:
        return cls.import_state(meta, arrays)
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"incomplete {kind} model: missing {exc}") from None


def save_model(model, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_text(model))


def load_model(path: str | os.PathLike):
    with open(path, encoding="utf-8") as fh:
        return model_from_text(fh.read())
