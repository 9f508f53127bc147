"""The ordered permission catalog that defines feature-vector columns."""

from __future__ import annotations

import enum
import io
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import BinaryIO, Iterable

from .errors import CatalogParseError, CatalogValidationError

DEFAULT_CATALOG_ENV = "PERMFORGE_CATALOG"


class ProtectionLevel(str, enum.Enum):
    NORMAL = "normal"
    DANGEROUS = "dangerous"
    SIGNATURE = "signature"
    SIGNATURE_OR_SYSTEM = "signatureOrSystem"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class PermissionSpec:
    name: str
    api_introduced: int
    api_deprecated: int | None = None
    protection_level: ProtectionLevel = ProtectionLevel.UNKNOWN

    def __post_init__(self):
        if not self.name or any(c.isspace() for c in self.name):
            raise CatalogValidationError(f"invalid permission name {self.name!r}")
        if self.api_introduced < 1:
            raise CatalogValidationError(f"{self.name}: api_introduced must be >= 1")
        if self.api_deprecated is not None and self.api_deprecated < self.api_introduced:
            raise CatalogValidationError(
                f"{self.name}: api_deprecated {self.api_deprecated} precedes api_introduced {self.api_introduced}"
            )


@dataclass(frozen=True)
class PermissionCatalog:
    entries: tuple[PermissionSpec, ...]
    version_tag: str = "unversioned"
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, int] = {}
        for j, spec in enumerate(self.entries):
            if spec.name in index:
                raise CatalogValidationError(f"duplicate permission name {spec.name!r}")
            index[spec.name] = j
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def index_of(self, name: str) -> int | None:
        return self._index.get(name)


def index_of(catalog: PermissionCatalog, name: str) -> int | None:
    """Column index of ``name`` in ``catalog``, or None when absent."""
    return catalog.index_of(name)


def _parse_lines(lines: Iterable[str]) -> PermissionCatalog:
    entries = []
    version = "unversioned"
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("version:"):
                version = body.split(":", 1)[1].strip() or version
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise CatalogParseError(f"expected 4 tab-separated fields, got {len(parts)}", lineno)
        name, intro, depr, level = (p.strip() for p in parts)
        try:
            api_introduced = int(intro)
            api_deprecated = None if depr == "-" else int(depr)
        except ValueError:
            raise CatalogParseError(f"non-integer API level in {line!r}", lineno) from None
        try:
            protection = ProtectionLevel(level)
        except ValueError:
            raise CatalogParseError(f"unknown protection level {level!r}", lineno) from None
        if name in seen:
            raise CatalogValidationError(
                f"duplicate permission name {name!r} on lines {seen[name]} and {lineno}"
            )
        seen[name] = lineno
        try:
            entries.append(PermissionSpec(name, api_introduced, api_deprecated, protection))
        except CatalogValidationError as exc:
            raise CatalogParseError(str(exc), lineno) from None
    if not entries:
        raise CatalogParseError("catalog contains no permission records")
    return PermissionCatalog(tuple(entries), version)


def load_catalog(source: BinaryIO | bytes) -> PermissionCatalog:
    """Parse a tab-separated catalog file, preserving line order."""
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    try:
        text = bytes(data).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CatalogParseError(f"catalog is not valid UTF-8: {exc}") from None
    return _parse_lines(io.StringIO(text))


def dump_catalog(catalog: PermissionCatalog) -> bytes:
    out = [f"# version: {catalog.version_tag}\n"]
    for e in catalog.entries:
        depr = "-" if e.api_deprecated is None else str(e.api_deprecated)
        out.append(f"{e.name}\t{e.api_introduced}\t{depr}\t{e.protection_level.value}\n")
    return "".join(out).encode("utf-8")


def default_catalog_bytes() -> bytes:
    return resources.files("permforge.data").joinpath("permissions.tsv").read_bytes()


def default_catalog(path: str | os.PathLike | None = None) -> PermissionCatalog:
    """Load ``path``, else ``$PERMFORGE_CATALOG``, else the bundled catalog."""
    path = path or os.environ.get(DEFAULT_CATALOG_ENV)
    if path:
        with open(path, "rb") as fh:
            return load_catalog(fh)
    return load_catalog(default_catalog_bytes())
