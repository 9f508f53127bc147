import struct
import zipfile

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from axml_build import build_apk, build_axml, build_text_manifest, string_pool
from conftest import real_manifests
from permforge.errors import (
    ContainerError,
    EntryNotFoundError,
    ManifestError,
    ManifestFormatError,
    ManifestParseError,
    ManifestStructureError,
    UnsupportedCompressionError,
)
from permforge.manifest import (
    InputFormat,
    detect_format,
    extract_manifest_from_apk,
    parse_binary_manifest,
    parse_manifest,
    parse_text_manifest,
)

INTERNET = "android.permission.INTERNET"
SEND_SMS = "android.permission.SEND_SMS"


# ------------------------------------------------------------ detect_format


@pytest.mark.parametrize(
    "data, fmt",
    [
        (b"PK\x03\x04rest", InputFormat.APK_CONTAINER),
        (b"\x03\x00\x08\x00\x10\x00\x00\x00", InputFormat.BINARY_AXML),
        (b"<?xml version='1.0'?><manifest/>", InputFormat.TEXT_XML),
        (b"  \n\t<manifest package='a'/>", InputFormat.TEXT_XML),
        (b"\xef\xbb\xbf<?xml version='1.0'?>", InputFormat.TEXT_XML),
        (b"", InputFormat.UNKNOWN),
        (b"\x00\x01", InputFormat.UNKNOWN),
        (b"hello", InputFormat.UNKNOWN),
    ],
)
def test_detect_format(data, fmt):
    assert detect_format(data) is fmt


@given(st.binary(max_size=64))
def test_detect_format_is_total(data):
    assert isinstance(detect_format(data), InputFormat)


def test_real_manifest_header_bytes():
    for _name, axml, _text in real_manifests():
        assert axml[:4] == b"\x03\x00\x08\x00"


# ------------------------------------------------------------ text manifests


def test_text_two_permissions():
    info = parse_text_manifest(build_text_manifest("com.example", [INTERNET, SEND_SMS]))
    assert info.requested_permissions == {INTERNET, SEND_SMS}
    assert info.package_name == "com.example"
    assert info.source_format is InputFormat.TEXT_XML


def test_text_no_permissions():
    assert parse_text_manifest(build_text_manifest("a.b", [])).requested_permissions == frozenset()


def test_text_sdk23_tag_counts():
    xml = (b'<manifest xmlns:android="http://schemas.android.com/apk/res/android" package="p">'
           b'<uses-permission-sdk-23 android:name="android.permission.CAMERA"/></manifest>')
    assert parse_text_manifest(xml).requested_permissions == {"android.permission.CAMERA"}


def test_text_truncated_is_parse_error():
    data = build_text_manifest("a.b", [INTERNET])[:-20]
    with pytest.raises(ManifestParseError):
        parse_text_manifest(data)


def test_text_wrong_root_is_structure_error():
    with pytest.raises(ManifestStructureError):
        parse_text_manifest(b"<application/>")


# ---------------------------------------------------------- binary manifests


def test_handcrafted_minimal_axml():
    data = build_axml(None, [INTERNET])
    assert data[:8] == struct.pack("<HHI", 3, 8, len(data))
    info = parse_binary_manifest(data)
    assert info.requested_permissions == {INTERNET}
    assert info.package_name is None


@pytest.mark.parametrize("utf8", [True, False])
@pytest.mark.parametrize("typed", [True, False])
def test_axml_string_encodings_and_typed_values(utf8, typed):
    perms = [INTERNET, SEND_SMS, "com.vendor.permission.ÜNICODE"]
    info = parse_binary_manifest(build_axml("com.x", perms, utf8=utf8, typed_values=typed))
    assert info.requested_permissions == set(perms)
    assert info.package_name == "com.x"


def test_axml_long_utf8_string_uses_two_byte_length():
    long_name = "android.permission." + "X" * 300
    assert parse_binary_manifest(build_axml("p", [long_name])).requested_permissions == {long_name}


def test_axml_no_permissions():
    assert parse_binary_manifest(build_axml("p", [])).requested_permissions == frozenset()


def test_axml_without_namespace_uses_plain_name():
    info = parse_binary_manifest(build_axml("p", [INTERNET], namespaced=False))
    assert info.requested_permissions == {INTERNET}


def test_axml_wrong_root():
    with pytest.raises(ManifestStructureError):
        parse_binary_manifest(build_axml("p", [INTERNET], root="application"))


def test_axml_bad_tree_type_reports_offset():
    data = bytearray(build_axml("p", [INTERNET]))
    data[0] = 0x07
    with pytest.raises(ManifestFormatError) as info:
        parse_binary_manifest(bytes(data))
    assert info.value.offset == 0


def test_axml_bad_inner_chunk_size_reports_offset():
    data = bytearray(build_axml("p", [INTERNET]))
    pool_size = struct.unpack_from("<I", data, 12)[0]
    resmap_at = 8 + pool_size
    struct.pack_into("<I", data, resmap_at + 4, 10 ** 6)
    with pytest.raises(ManifestFormatError) as info:
        parse_binary_manifest(bytes(data))
    assert info.value.offset == resmap_at


def test_axml_string_index_out_of_range():
    data = bytearray(build_axml("p", [INTERNET]))
    # first start-element sits right after pool, resource map and start-namespace
    pool_size = struct.unpack_from("<I", data, 12)[0]
    elem = 8 + pool_size + 8 + 24
    assert struct.unpack_from("<H", data, elem)[0] == 0x0102
    struct.pack_into("<I", data, elem + 16 + 4, 9999)
    with pytest.raises(ManifestFormatError, match="out of range"):
        parse_binary_manifest(bytes(data))


def test_axml_element_before_pool():
    body = struct.pack("<HHIII", 0x0102, 16, 36, 1, 0xFFFFFFFF) + b"\x00" * 20
    data = struct.pack("<HHI", 3, 8, 8 + len(body)) + body
    with pytest.raises(ManifestFormatError):
        parse_binary_manifest(data)


def test_string_pool_builder_layout():
    pool = string_pool(["a", "bc"])
    assert struct.unpack_from("<HHI", pool, 0) == (1, 28, len(pool))
    assert len(pool) % 4 == 0


@pytest.mark.parametrize("name, axml, text", real_manifests(), ids=[r[0] for r in real_manifests()])
def test_real_manifest_binary_equals_decoded_text(name, axml, text):
    binary = parse_binary_manifest(axml)
    decoded = parse_text_manifest(text)
    assert binary.requested_permissions == decoded.requested_permissions
    assert binary.package_name == decoded.package_name
    assert len(binary.requested_permissions) > 0


def test_parsing_is_pure():
    _name, axml, _ = real_manifests()[0]
    assert parse_binary_manifest(axml) == parse_binary_manifest(axml)


def test_fuzzed_real_manifests_raise_only_manifest_errors():
    rng = np.random.default_rng(11)
    seeds = [axml for _n, axml, _t in real_manifests()]
    for i in range(1500):
        base = bytearray(seeds[i % len(seeds)])
        if i % 3 == 0:
            data = bytes(base[: rng.integers(0, len(base))])
        else:
            for _ in range(rng.integers(1, 8)):
                base[rng.integers(0, len(base))] = rng.integers(0, 256)
            data = bytes(base)
        try:
            parse_binary_manifest(data)
        except ManifestError:
            pass


@settings(max_examples=300, deadline=1000)
@given(st.binary(max_size=512))
def test_random_bytes_after_tree_header(tail):
    data = struct.pack("<HHI", 3, 8, 8 + len(tail)) + tail
    try:
        parse_binary_manifest(data)
    except ManifestError:
        pass


# -------------------------------------------------------------- containers


def test_apk_stored_entry_round_trips():
    manifest = build_axml("p", [INTERNET])
    apk = build_apk(manifest, method=zipfile.ZIP_STORED)
    assert extract_manifest_from_apk(apk) == manifest


def test_apk_deflated_entry_round_trips():
    manifest = build_axml("p", [INTERNET, SEND_SMS])
    apk = build_apk(manifest, extra={"classes.dex": b"dex\n035" * 50, "res/a.png": b"\x89PNG"})
    out = extract_manifest_from_apk(apk)
    assert out == manifest
    assert detect_format(out) is InputFormat.BINARY_AXML


def test_apk_real_manifest_through_parse_manifest():
    for _name, axml, text in real_manifests():
        info = parse_manifest(build_apk(axml))
        assert info.requested_permissions == parse_text_manifest(text).requested_permissions


def test_apk_comment_after_eocd():
    import io
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        zf.comment = b"x" * 1000
        zf.writestr("AndroidManifest.xml", build_axml("p", [INTERNET]))
    assert parse_manifest(buf.getvalue()).requested_permissions == {INTERNET}


def test_apk_missing_entry():
    apk = build_apk(b"whatever", name="other.xml")
    with pytest.raises(EntryNotFoundError):
        extract_manifest_from_apk(apk)


def test_apk_without_eocd():
    with pytest.raises(ContainerError):
        extract_manifest_from_apk(b"PK\x03\x04" + b"\x00" * 100)


def test_apk_unsupported_method():
    apk = bytearray(build_apk(b"data", method=zipfile.ZIP_STORED))
    cd = apk.rfind(b"PK\x01\x02")
    struct.pack_into("<H", apk, cd + 10, 12)  # bzip2
    with pytest.raises(UnsupportedCompressionError):
        extract_manifest_from_apk(bytes(apk))


def test_apk_corrupt_deflate_stream():
    apk = bytearray(build_apk(build_axml("p", [INTERNET] * 3)))
    start = 30 + len("AndroidManifest.xml")
    apk[start:start + 4] = b"\xff\xff\xff\xff"
    with pytest.raises(ContainerError):
        extract_manifest_from_apk(bytes(apk))


def test_parse_manifest_dispatch():
    assert parse_manifest(build_text_manifest("a", [INTERNET])).source_format is InputFormat.TEXT_XML
    assert parse_manifest(build_axml("a", [INTERNET])).source_format is InputFormat.BINARY_AXML
    with pytest.raises(ManifestFormatError):
        parse_manifest(b"garbage")
