import io
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from permforge.dataset import (
    N_NEVER_USED,
    SMS_GROUP,
    FeatureMatrix,
    SynthConfig,
    default_profile,
    default_synthetic,
    generate_synthetic,
    load_csv,
    normalize_permission,
    read_labels,
    save_csv,
    split_train_test,
    vectorize,
    vectorize_with_report,
)
from permforge.errors import SchemaError, ShapeError
from permforge.features import fit_pca
from permforge.manifest import InputFormat, ManifestInfo


def info(*perms):
    return ManifestInfo("pkg", frozenset(perms), InputFormat.TEXT_XML)


def tiny(values, labels):
    values = np.asarray(values, dtype=float)
    return FeatureMatrix(values, labels, [f"f{j}" for j in range(values.shape[1])],
                         [f"r{i}" for i in range(values.shape[0])])


# ----------------------------------------------------------------- matrix


def test_matrix_is_read_only_and_validated():
    m = tiny([[0, 1], [1, 0]], [0, 1])
    with pytest.raises(ValueError):
        m.values[0, 0] = 5
    with pytest.raises(ShapeError):
        tiny([[0, 1]], [0, 1])
    with pytest.raises(ValueError):
        tiny([[0, 1]], [2])


def test_take_and_equality():
    m = tiny([[0, 1], [1, 0], [1, 1]], [0, 1, 1])
    sub = m.take([2, 0])
    assert sub.row_ids == ("r2", "r0")
    assert np.array_equal(sub.values, [[1, 1], [0, 1]])
    assert m == tiny([[0, 1], [1, 0], [1, 1]], [0, 1, 1])
    assert m != sub


# -------------------------------------------------------------- vectorize


def test_normalize_permission(catalog):
    assert normalize_permission("android.permission.SEND_SMS", catalog) == "SEND_SMS"
    assert normalize_permission("SEND_SMS", catalog) == "SEND_SMS"
    assert normalize_permission("com.android.launcher.permission.INSTALL_SHORTCUT", catalog) == "INSTALL_SHORTCUT"
    assert normalize_permission("com.acme.permission.C2D", catalog) is None


def test_vectorize_sets_columns(catalog):
    m = vectorize([info("android.permission.INTERNET"), info("android.permission.SEND_SMS", "x.y.Z")],
                  [0, 1], catalog)
    assert m.shape == (2, 197)
    assert m.values.sum() == 2
    assert m.values[0, catalog.index_of("INTERNET")] == 1
    assert m.values[1, catalog.index_of("SEND_SMS")] == 1
    assert m.row_ids == ("row0", "row1")


def test_vectorize_reports_ignored(catalog, caplog):
    _m, ignored = vectorize_with_report([info("x.y.Z", "INTERNET")], [1], catalog)
    assert ignored == Counter({"x.y.Z": 1})
    with caplog.at_level("WARNING"):
        vectorize([info("x.y.Z")], [1], catalog)
    assert "ignored 1" in caplog.text


def test_vectorize_rejects_empty_and_mismatch(catalog):
    with pytest.raises(ValueError):
        vectorize([], [], catalog)
    with pytest.raises(ValueError):
        vectorize([info()], [0, 1], catalog)


def test_vectorize_order_permutes_rows(catalog):
    docs = [info("SEND_SMS"), info("INTERNET", "CAMERA"), info()]
    a = vectorize(docs, [1, 0, 0], catalog, ["a", "b", "c"])
    b = vectorize(docs[::-1], [0, 0, 1], catalog, ["c", "b", "a"])
    assert np.array_equal(a.values[::-1], b.values)


# ------------------------------------------------------------------ split


def test_split_sizes_and_determinism(catalog):
    m = tiny(np.eye(10), [0, 1] * 5)
    s = split_train_test(m, 0.8, seed=4)
    assert s.train.n_rows == 8 and s.test.n_rows == 2
    s2 = split_train_test(m, 0.8, seed=4)
    assert s.train == s2.train and s.test == s2.test


def test_stratified_split_on_60_40_mix():
    labels = [1] * 60 + [0] * 40
    m = tiny(np.zeros((100, 1)), labels)
    for seed in range(20):
        s = split_train_test(m, 0.8, seed)
        n_mal = int(s.train.labels.sum())
        n_ben = s.train.n_rows - n_mal
        assert abs(n_mal - 48) <= 1 and abs(n_ben - 32) <= 1


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 60), st.floats(0.05, 0.95), st.integers(0, 2 ** 32 - 1), st.booleans())
def test_split_partitions_rows(n, ratio, seed, stratified):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, n)
    m = tiny(rng.integers(0, 2, (n, 3)), labels)
    s = split_train_test(m, ratio, seed, stratified)
    assert sorted(s.train.row_ids + s.test.row_ids) == sorted(m.row_ids)


def test_split_ratio_out_of_range():
    m = tiny(np.zeros((4, 1)), [0, 1, 0, 1])
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            split_train_test(m, bad)


# -------------------------------------------------------------------- csv


def test_binary_csv_round_trip(tmp_path):
    m = tiny([[0, 1, 1], [1, 0, 0]], [1, 0])
    p = tmp_path / "m.csv"
    save_csv(m, p)
    assert p.read_text().splitlines()[0] == "f0,f1,f2,label,row_id"
    assert load_csv(p) == m


def test_reduced_csv_round_trip(small_corpus):
    pca = fit_pca(small_corpus, 5)
    reduced = pca.apply(small_corpus)
    buf = io.StringIO()
    save_csv(reduced, buf)
    back = load_csv(io.StringIO(buf.getvalue()))
    assert back.feature_names == reduced.feature_names
    assert np.max(np.abs(back.values - reduced.values)) <= 1e-12


@pytest.mark.parametrize(
    "text",
    ["", "a,b,row_id\n", "a,label\n1,0\n", "a,label,row_id\n1,0\n", "a,label,row_id\nx,0,r\n",
     "a,label,row_id\n1,3,r\n", "label,label,row_id\n1,0,r\n"],
)
def test_csv_schema_errors(text):
    with pytest.raises(SchemaError):
        load_csv(io.StringIO(text))


def test_read_labels():
    assert read_labels(io.StringIO("row_id,label\na,1\nb,0\n")) == {"a": 1, "b": 0}
    with pytest.raises(SchemaError):
        read_labels(io.StringIO("a,7\n"))


# -------------------------------------------------------------- synthetic


def test_synthetic_zero_probabilities(catalog):
    z = np.zeros(len(catalog))
    m = generate_synthetic(SynthConfig(5, (z, z), 1), catalog)
    assert m.shape == (10, 197) and m.values.sum() == 0
    assert list(m.labels) == [0] * 5 + [1] * 5


def test_synthetic_is_deterministic(catalog):
    assert default_synthetic(catalog, 20, seed=9) == default_synthetic(catalog, 20, seed=9)
    assert default_synthetic(catalog, 20, seed=9) != default_synthetic(catalog, 20, seed=10)


def test_synthetic_law_of_large_numbers(catalog):
    p0 = np.zeros(len(catalog))
    p1 = np.zeros(len(catalog))
    p0[0], p1[0] = 0.1, 0.9
    m = generate_synthetic(SynthConfig(10000, (p0, p1), 5), catalog)
    assert abs(m.values[m.labels == 1, 0].mean() - 0.9) <= 0.02
    assert abs(m.values[m.labels == 0, 0].mean() - 0.1) <= 0.02


def test_synthetic_rejects_bad_probabilities(catalog):
    z = np.zeros(len(catalog))
    with pytest.raises(ValueError):
        SynthConfig(5, (z + 1.5, z))
    with pytest.raises(ValueError):
        generate_synthetic(SynthConfig(5, (np.zeros(3), np.zeros(3))), catalog)


def test_default_profile_shape(catalog):
    benign, malware = default_profile(catalog)
    for name in SMS_GROUP:
        j = catalog.index_of(name)
        assert malware[j] - benign[j] > 0.5
    assert int(np.sum((benign == 0) & (malware == 0))) == N_NEVER_USED
