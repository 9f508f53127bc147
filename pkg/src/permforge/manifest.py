"""Permission extraction from APK containers, binary AXML and text manifests."""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass
from xml.etree import ElementTree as ET

from .errors import (
    ContainerError,
    EntryNotFoundError,
    ManifestFormatError,
    ManifestParseError,
    ManifestStructureError,
    UnsupportedCompressionError,
)

ANDROID_NS = "http://schemas.android.com/apk/res/android"
PERMISSION_TAGS = frozenset({"uses-permission", "uses-permission-sdk-23"})
MANIFEST_ENTRY = "AndroidManifest.xml"

NO_INDEX = 0xFFFFFFFF

RES_STRING_POOL = 0x0001
RES_XML_TREE = 0x0003
RES_XML_START_NAMESPACE = 0x0100
RES_XML_END_NAMESPACE = 0x0101
RES_XML_START_ELEMENT = 0x0102
RES_XML_END_ELEMENT = 0x0103
RES_XML_CDATA = 0x0104
RES_XML_RESOURCE_MAP = 0x0180

TYPE_STRING = 0x03
UTF8_FLAG = 0x0100


class InputFormat(str, enum.Enum):
    BINARY_AXML = "binary_axml"
    TEXT_XML = "text_xml"
    APK_CONTAINER = "apk_container"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ManifestInfo:
    package_name: str | None
    requested_permissions: frozenset[str]
    source_format: InputFormat

    def __post_init__(self):
        perms = frozenset(p for p in self.requested_permissions if p)
        object.__setattr__(self, "requested_permissions", perms)


def detect_format(data: bytes) -> InputFormat:
    """Classify ``data`` by its leading bytes. Never raises."""
    head = bytes(data[:64])
    if head.startswith(b"PK\x03\x04"):
        return InputFormat.APK_CONTAINER
    if len(head) >= 4 and struct.unpack_from("<HH", head) == (RES_XML_TREE, 0x0008):
        return InputFormat.BINARY_AXML
    text = head.lstrip(b"\xef\xbb\xbf").lstrip()
    if text.startswith(b"<?xml") or text.startswith(b"<manifest"):
        return InputFormat.TEXT_XML
    return InputFormat.UNKNOWN


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_text_manifest(data: bytes) -> ManifestInfo:
    try:
        root = ET.fromstring(bytes(data))
    except ET.ParseError as exc:
        raise ManifestParseError(f"malformed XML: {exc}") from None
    if _local(root.tag) != "manifest":
        raise ManifestStructureError(f"root element is <{_local(root.tag)}>, expected <manifest>")
    android_name = f"{{{ANDROID_NS}}}name"
    perms = set()
    for elem in root.iter():
        if not isinstance(elem.tag, str) or elem.tag not in PERMISSION_TAGS:
            continue
        value = elem.get(android_name, elem.get("name"))
        if value:
            perms.add(value)
    return ManifestInfo(root.get("package"), frozenset(perms), InputFormat.TEXT_XML)


class _StringPool:
    """Lazily decoded view over a RES_STRING_POOL chunk."""

    def __init__(self, buf: memoryview, start: int, header_size: int, end: int):
        if header_size < 28 or start + 28 > end:
            raise ManifestFormatError("string pool header too small", start)
        count, _styles, flags, strings_start, _styles_start = struct.unpack_from("<5I", buf, start + 8)
        offsets_at = start + header_size
        if count > (end - offsets_at) // 4:
            raise ManifestFormatError(f"string pool declares {count} strings beyond chunk end", start)
        data_at = start + strings_start
        if strings_start and not (offsets_at + 4 * count <= data_at <= end):
            raise ManifestFormatError("string data start outside chunk", start)
        self.buf = buf
        self.count = count
        self.offsets_at = offsets_at
        self.data_at = data_at
        self.end = end
        self.utf8 = bool(flags & UTF8_FLAG)
        self._cache: dict[int, str] = {}

    def get(self, index: int) -> str | None:
        if index == NO_INDEX:
            return None
        if index >= self.count:
            raise ManifestFormatError(f"string index {index} out of range (pool has {self.count})")
        cached = self._cache.get(index)
        if cached is None:
            (rel,) = struct.unpack_from("<I", self.buf, self.offsets_at + 4 * index)
            cached = self._decode(self.data_at + rel)
            self._cache[index] = cached
        return cached

    def _need(self, pos: int, n: int) -> None:
        if pos < 0 or pos + n > self.end:
            raise ManifestFormatError("string runs past string pool end", pos)

    def _decode(self, pos: int) -> str:
        buf = self.buf
        if self.utf8:
            pos = self._skip_len8(pos)  # UTF-16 length, unused
            self._need(pos, 1)
            n = buf[pos]
            pos += 1
            if n & 0x80:
                self._need(pos, 1)
                n = ((n & 0x7F) << 8) | buf[pos]
                pos += 1
            self._need(pos, n)
            raw = bytes(buf[pos:pos + n])
            try:
                return raw.decode("utf-8")
            except UnicodeDecodeError:
                return raw.decode("utf-8", errors="replace")
        self._need(pos, 2)
        (n,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        if n & 0x8000:
            self._need(pos, 2)
            (low,) = struct.unpack_from("<H", buf, pos)
            n = ((n & 0x7FFF) << 16) | low
            pos += 2
        self._need(pos, 2 * n)
        return bytes(buf[pos:pos + 2 * n]).decode("utf-16-le", errors="surrogatepass")

    def _skip_len8(self, pos: int) -> int:
        self._need(pos, 1)
        if self.buf[pos] & 0x80:
            self._need(pos, 2)
            return pos + 2
        return pos + 1


def parse_binary_manifest(data: bytes) -> ManifestInfo:
    """Walk the AXML chunk stream and collect requested permissions.

    Every read is bounded by the enclosing chunk; malformed input raises
    ManifestFormatError rather than reading out of bounds.
    """
    buf = memoryview(bytes(data))
    if len(buf) < 8:
        raise ManifestFormatError("stream shorter than a chunk header", 0)
    typ, hsize, total = struct.unpack_from("<HHI", buf, 0)
    if typ != RES_XML_TREE:
        raise ManifestFormatError(f"expected XML tree chunk, found type {typ:#06x}", 0)
    if hsize < 8 or total < hsize or total > len(buf):
        raise ManifestFormatError(f"bad tree chunk sizes (header {hsize}, size {total}, stream {len(buf)})", 0)

    pool: _StringPool | None = None
    namespaces: dict[int, int] = {}
    root_name: str | None = None
    package = None
    perms: set[str] = set()

    pos = hsize
    while pos + 8 <= total:
        ctype, chsize, csize = struct.unpack_from("<HHI", buf, pos)
        if chsize < 8 or csize < chsize or csize > total - pos:
            raise ManifestFormatError(
                f"bad chunk (type {ctype:#06x}, header {chsize}, size {csize})", pos
            )
        end = pos + csize
        if ctype == RES_STRING_POOL:
            if pool is None:
                pool = _StringPool(buf, pos, chsize, end)
        elif ctype == RES_XML_START_NAMESPACE:
            if chsize + 8 > csize:
                raise ManifestFormatError("namespace chunk too small", pos)
            prefix, uri = struct.unpack_from("<II", buf, pos + chsize)
            namespaces[uri] = prefix
        elif ctype == RES_XML_START_ELEMENT:
            if pool is None:
                raise ManifestFormatError("element precedes string pool", pos)
            tag, attrs = _read_element(buf, pos, chsize, end, pool)
            if root_name is None:
                root_name = tag
                if tag != "manifest":
                    raise ManifestStructureError(f"root element is <{tag}>, expected <manifest>")
            if tag == "manifest" and package is None:
                package = attrs.get((None, "package"))
            elif tag in PERMISSION_TAGS:
                value = attrs.get((ANDROID_NS, "name"), attrs.get((None, "name")))
                if value:
                    perms.add(value)
        elif ctype in (RES_XML_RESOURCE_MAP, RES_XML_END_NAMESPACE, RES_XML_END_ELEMENT, RES_XML_CDATA):
            pass
        pos = end
    if pos != total:
        raise ManifestFormatError("trailing bytes shorter than a chunk header", pos)
    if root_name is None:
        raise ManifestStructureError("no <manifest> element in binary manifest")
    return ManifestInfo(package, frozenset(perms), InputFormat.BINARY_AXML)


def _read_element(buf, pos, chsize, end, pool):
    body = pos + chsize
    if body + 20 > end:
        raise ManifestFormatError("start-element body truncated", pos)
    _ns, name_idx, attr_start, attr_size, attr_count = struct.unpack_from("<IIHHH", buf, body)
    tag = pool.get(name_idx)
    if tag is None:
        raise ManifestFormatError("element without a name", pos)
    attrs: dict[tuple[str | None, str], str] = {}
    if attr_count == 0:
        return tag, attrs
    if attr_size < 20:
        raise ManifestFormatError(f"attribute size {attr_size} < 20", pos)
    first = body + attr_start
    if first + attr_count * attr_size > end:
        raise ManifestFormatError("attributes run past element chunk", pos)
    for k in range(attr_count):
        at = first + k * attr_size
        ns_idx, aname_idx, raw_idx, _size, _res0, dtype, value = struct.unpack_from("<IIIHBBI", buf, at)
        aname = pool.get(aname_idx)
        if not aname:
            continue
        ns = pool.get(ns_idx)
        if raw_idx != NO_INDEX:
            text = pool.get(raw_idx)
        elif dtype == TYPE_STRING:
            text = pool.get(value)
        else:
            continue
        attrs[(ns or None, aname)] = text
    return tag, attrs


def _u16(buf, pos):
    return struct.unpack_from("<H", buf, pos)[0]


def _u32(buf, pos):
    return struct.unpack_from("<I", buf, pos)[0]


def _find_eocd(buf: memoryview) -> int:
    last = len(buf) - 22
    floor = max(0, last - 0xFFFF)
    for at in range(last, floor - 1, -1):
        if buf[at] == 0x50 and bytes(buf[at:at + 4]) == b"PK\x05\x06":
            return at
    raise ContainerError("no end-of-central-directory record found")


def extract_manifest_from_apk(data: bytes, entry: str = MANIFEST_ENTRY) -> bytes:
    """Return the decompressed bytes of ``entry`` from a ZIP archive.

    Only stored and deflated entries are handled; ZIP64 and multi-disk
    archives are rejected. The general-purpose encryption bit is ignored,
    as Android's installer does.
    """
    buf = memoryview(bytes(data))
    eocd = _find_eocd(buf)
    disk, cd_disk, _n_here, n_total, cd_size, cd_offset = struct.unpack_from("<HHHHII", buf, eocd + 4)
    if disk != 0 or cd_disk != 0:
        raise ContainerError("multi-disk archives are not supported")
    if cd_offset == 0xFFFFFFFF or n_total == 0xFFFF:
        raise ContainerError("ZIP64 archives are not supported")
    if cd_offset + cd_size > eocd:
        raise ContainerError("central directory extends past end record")

    pos = cd_offset
    target = entry.encode("utf-8")
    for _ in range(n_total):
        if pos + 46 > eocd or _u32(buf, pos) != 0x02014B50:
            raise ContainerError(f"bad central directory entry at offset {pos}")
        method = _u16(buf, pos + 10)
        csize = _u32(buf, pos + 20)
        usize = _u32(buf, pos + 24)
        nlen, xlen, clen = struct.unpack_from("<HHH", buf, pos + 28)
        local = _u32(buf, pos + 42)
        name = bytes(buf[pos + 46:pos + 46 + nlen])
        pos += 46 + nlen + xlen + clen
        if name != target:
            continue
        return _read_local_entry(buf, local, method, csize, usize)
    raise EntryNotFoundError(f"archive has no entry named {entry!r}")


def _read_local_entry(buf, local, method, csize, usize):
    if local + 30 > len(buf) or _u32(buf, local) != 0x04034B50:
        raise ContainerError(f"bad local file header at offset {local}")
    if csize == 0xFFFFFFFF or usize == 0xFFFFFFFF:
        raise ContainerError("ZIP64 entries are not supported")
    nlen, xlen = struct.unpack_from("<HH", buf, local + 26)
    start = local + 30 + nlen + xlen
    if start + csize > len(buf):
        raise ContainerError("entry data runs past end of archive")
    payload = bytes(buf[start:start + csize])
    if method == 0:
        return payload
    if method == 8:
        try:
            inflater = zlib.decompressobj(-15)
            out = inflater.decompress(payload) + inflater.flush()
        except zlib.error as exc:
            raise ContainerError(f"corrupt deflate stream: {exc}") from None
        return out
    raise UnsupportedCompressionError(f"compression method {method} is not supported")


def parse_manifest(data: bytes) -> ManifestInfo:
    """Dispatch on detect_format: APK, binary AXML or text XML."""
    fmt = detect_format(data)
    if fmt is InputFormat.APK_CONTAINER:
        data = extract_manifest_from_apk(data)
        fmt = detect_format(data)
        if fmt is InputFormat.APK_CONTAINER:
            raise ManifestFormatError("manifest entry is itself an archive")
    if fmt is InputFormat.BINARY_AXML:
        return parse_binary_manifest(data)
    if fmt is InputFormat.TEXT_XML:
        return parse_text_manifest(data)
    raise ManifestFormatError("unrecognised input format", 0)
