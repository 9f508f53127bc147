from pathlib import Path

import pytest

from permforge.catalog import default_catalog
from permforge.dataset import default_synthetic

FIXTURES = Path(__file__).parent / "fixtures"
MANIFEST_DIR = FIXTURES / "manifests"


def real_manifests():
    """(name, binary bytes, decoded text bytes) for every captured APK manifest."""
    out = []
    for axml in sorted(MANIFEST_DIR.glob("*.axml")):
        text = axml.with_suffix(".decoded.xml")
        out.append((axml.stem, axml.read_bytes(), text.read_bytes()))
    return out


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def small_corpus(catalog):
    return default_synthetic(catalog, 150, seed=3)


# ---------------------------------------------------------------- acceptance

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    n, title = marker.args
    _ACCEPTANCE[n] = ("PASS" if rep.passed else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        status, title = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {title}")
