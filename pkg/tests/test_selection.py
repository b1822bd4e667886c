"""Recursive elimination, correlation analysis, and report round trips."""

import numpy as np
import pytest

from lddos import selection
from lddos.dataset import LabeledDataset
from lddos.errors import ClassTooSmall, DegenerateWeights, SchemaMismatch


def informative_dataset(n=60, noise_cols=2, dup=False, seed=0):
    """One signal column (positive class shifted), optional exact duplicate
    of it, plus pure-noise columns."""
    rng = np.random.default_rng(seed)
    y = np.array([0, 1] * (n // 2))
    signal = rng.normal(0, 0.2, size=n) + 3.0 * y
    cols = [signal]
    names = ["sig"]
    if dup:
        cols.append(signal.copy())
        names.append("sig_copy")
    for j in range(noise_cols):
        cols.append(rng.normal(size=n))
        names.append(f"noise{j}")
    return LabeledDataset(schema=names, rows=np.column_stack(cols), labels=y)


def test_curve_covers_every_cardinality():
    data = informative_dataset()
    report = selection.rfecv(data, k=4, seed=1)
    assert [n for n, _ in report.accuracy_curve] == [1, 2, 3]
    assert len(report.ranking) == 3
    assert sorted(report.ranking) == sorted(data.schema)


def test_signal_feature_survives_elimination():
    data = informative_dataset(noise_cols=3)
    report = selection.rfecv(data, k=4, seed=2)
    assert report.ranking[-1] == "sig"  # last survivor = most important
    assert "sig" in report.chosen


def test_plateau_picks_smallest_cardinality():
    # one perfect feature: the curve is flat at 1.0, so chosen must be size 1
    data = informative_dataset(noise_cols=2)
    report = selection.rfecv(data, k=4, seed=3)
    best = max(a for _, a in report.accuracy_curve)
    by_n = dict(report.accuracy_curve)
    assert by_n[len(report.chosen)] >= best - 0.001
    for n in range(1, len(report.chosen)):
        assert by_n[n] < best - 0.001


def test_duplicate_column_tie_drops_higher_index():
    # bit-identical columns give bit-identical mean |weights|; the tie
    # rule must eliminate the later schema entry first
    data = informative_dataset(noise_cols=0, dup=True)
    report = selection.rfecv(data, k=4, seed=4)
    assert report.ranking[0] == "sig_copy"
    assert report.ranking[-1] == "sig"


def test_degenerate_weights_raise():
    data = LabeledDataset(
        schema=["z1", "z2"],
        rows=np.zeros((20, 2)),
        labels=np.array([0, 1] * 10),
    )
    with pytest.raises(DegenerateWeights):
        selection.rfecv(data, k=4, seed=0)


def test_empty_schema_rejected():
    data = LabeledDataset(schema=[], rows=np.zeros((10, 0)), labels=[0, 1] * 5)
    with pytest.raises(SchemaMismatch):
        selection.rfecv(data, k=2)


def test_class_too_small_propagates():
    data = informative_dataset(n=6)
    with pytest.raises(ClassTooSmall):
        selection.rfecv(data, k=10)


def test_rfecv_deterministic():
    data = informative_dataset(noise_cols=4, seed=8)
    r1 = selection.rfecv(data, k=5, seed=7)
    r2 = selection.rfecv(data, k=5, seed=7)
    assert selection.serialize_report(r1) == selection.serialize_report(r2)


# -- correlation --------------------------------------------------------------

def test_correlation_matrix_values():
    rng = np.random.default_rng(5)
    x = rng.normal(size=50)
    rows = np.column_stack([x, 2.0 * x + 1.0, -x, np.full(50, 7.0)])
    r = selection.correlation_matrix(rows)
    assert r.shape == (4, 4)
    assert np.allclose(np.diag(r), 1.0)
    assert r[0, 1] == pytest.approx(1.0)
    assert r[0, 2] == pytest.approx(-1.0)
    assert r[0, 3] == 0.0  # constant column
    assert np.allclose(r, r.T)
    assert np.all(np.abs(r) <= 1.0)


def test_prune_correlated_drops_lower_ranked_duplicate():
    corr = np.array([
        [1.0, 1.0, 0.1],
        [1.0, 1.0, 0.1],
        [0.1, 0.1, 1.0],
    ])
    report = selection.SelectionReport(
        schema=["a", "b", "c"],
        ranking=["a", "c", "b"],  # b eliminated last = ranked highest
        accuracy_curve=[(1, 0.9), (2, 0.95), (3, 0.95)],
        chosen=["a", "b", "c"],
        correlation=corr,
    )
    kept = selection.prune_correlated(report, threshold=0.95)
    # a and b are interchangeable; b outranks a and must survive
    assert kept == ["b", "c"]


def test_prune_keeps_everything_below_threshold():
    data = informative_dataset(noise_cols=2)
    report = selection.rfecv(data, k=4, seed=1)
    assert set(selection.prune_correlated(report, threshold=1.1)) == set(
        report.chosen
    )


# -- report text ---------------------------------------------------------------

def test_report_roundtrip():
    data = informative_dataset(noise_cols=3, seed=2)
    report = selection.rfecv(data, k=4, seed=9)
    text = selection.serialize_report(report)
    again = selection.parse_report(text)
    assert again.schema == report.schema
    assert again.ranking == report.ranking
    assert again.chosen == report.chosen
    assert again.accuracy_curve == report.accuracy_curve
    assert np.array_equal(again.correlation, report.correlation)
    assert again.metadata["k"] == "4"
    assert selection.serialize_report(again) == text


def test_report_sections_present():
    data = informative_dataset()
    text = selection.serialize_report(selection.rfecv(data, k=4))
    for section in ("[metadata]", "[chosen]", "[ranking]", "[curve]",
                    "[correlation]"):
        assert section in text
    assert "n_features,accuracy" in text
