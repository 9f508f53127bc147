import pytest

from permforge.catalog import (
    DEFAULT_CATALOG_ENV,
    PermissionCatalog,
    PermissionSpec,
    ProtectionLevel,
    default_catalog,
    default_catalog_bytes,
    dump_catalog,
    index_of,
    load_catalog,
)
from permforge.errors import CatalogParseError, CatalogValidationError

SIGNIFICANT = [
    "READ_PHONE_STATE", "ACCESS_WIFI_STATE", "ACCESS_COARSE_LOCATION", "RECEIVE_BOOT_COMPLETED",
    "WRITE_EXTERNAL_STORAGE", "ACCESS_FINE_LOCATION", "READ_CONTACTS", "READ_SMS", "SEND_SMS",
    "RECEIVE_SMS", "GET_TASKS", "VIBRATE", "WAKE_LOCK", "WRITE_SMS", "CALL_PHONE", "CHANGE_WIFI_STATE",
]


def test_default_catalog_has_197_unique_names(catalog):
    assert len(catalog) == 197
    assert len(set(catalog.names)) == 197
    assert catalog.version_tag == "android-29-r1"


def test_bundled_file_is_sorted():
    cat = load_catalog(default_catalog_bytes())
    assert cat.names == sorted(cat.names)


@pytest.mark.parametrize("name", SIGNIFICANT + ["INTERNET", "ACCESS_NETWORK_STATE"])
def test_common_permissions_present(catalog, name):
    assert name in catalog


def test_index_of(catalog):
    assert index_of(catalog, "ACCEPT_HANDOVER") == 0
    assert index_of(catalog, "NOT_A_PERMISSION") is None
    j = catalog.index_of("SEND_SMS")
    assert catalog.names[j] == "SEND_SMS"


def test_deprecated_entries_carry_levels(catalog):
    spec = catalog.entries[catalog.index_of("GET_TASKS")]
    assert spec.api_introduced == 1 and spec.api_deprecated == 21


def test_dump_load_round_trip(catalog):
    again = load_catalog(dump_catalog(catalog))
    assert again == catalog


def test_load_accepts_file_objects(tmp_path):
    p = tmp_path / "c.tsv"
    p.write_bytes(b"A\t1\t-\tnormal\nB\t3\t5\tdangerous\n")
    with open(p, "rb") as fh:
        cat = load_catalog(fh)
    assert cat.names == ["A", "B"]
    assert cat.entries[1].protection_level is ProtectionLevel.DANGEROUS


def test_duplicate_name_rejected():
    with pytest.raises(CatalogValidationError, match="duplicate"):
        load_catalog(b"A\t1\t-\tnormal\nA\t2\t-\tnormal\n")


@pytest.mark.parametrize(
    "blob, line",
    [
        (b"A\t1\t-\n", 1),
        (b"A\t1\t-\tnormal\nB\tx\t-\tnormal\n", 2),
        (b"A\t1\t-\tcosmic\n", 1),
        (b"A\t5\t2\tnormal\n", 1),
    ],
)
def test_malformed_lines_report_line_number(blob, line):
    with pytest.raises(CatalogParseError) as info:
        load_catalog(blob)
    assert info.value.line == line


def test_empty_catalog_rejected():
    with pytest.raises(CatalogParseError):
        load_catalog(b"# only comments\n\n")


def test_spec_validation():
    with pytest.raises(CatalogValidationError):
        PermissionSpec("HAS SPACE", 1)
    with pytest.raises(CatalogValidationError):
        PermissionCatalog((PermissionSpec("A", 1), PermissionSpec("A", 2)))


def test_env_override(tmp_path, monkeypatch):
    p = tmp_path / "tiny.tsv"
    p.write_bytes(b"# version: tiny\nSEND_SMS\t1\t-\tdangerous\n")
    monkeypatch.setenv(DEFAULT_CATALOG_ENV, str(p))
    cat = default_catalog()
    assert cat.names == ["SEND_SMS"] and cat.version_tag == "tiny"
