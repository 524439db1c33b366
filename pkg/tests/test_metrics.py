import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.distance import jensenshannon

from torsynth.metrics import (ConfusionMatrix, class_balance, confusion, js_divergence,
                              js_from_histograms, report, report_from_confusion, roc_auc)
from conftest import make_ds
from oracles import jsd_base2, pair_counting_auc

binary_pairs = st.integers(1, 60).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 1), min_size=n, max_size=n),
                        st.lists(st.integers(0, 1), min_size=n, max_size=n)))


# --- confusion and report -------------------------------------------------------

def test_confusion_hand_case():
    assert confusion([0, 0, 1, 1], [0, 1, 1, 1]) == ConfusionMatrix(tn=1, fp=1, fn=0, tp=2)


def test_report_hand_case_is_exact():
    r = report([0, 0, 1, 1], [0, 1, 1, 1])
    assert r.accuracy == 0.75
    assert r.precision[1] == 2 / 3 and r.recall[1] == 1.0 and r.f1[1] == 0.8
    assert r.support == (2, 2)


def test_degenerate_and_perfect_predictions():
    r = report([0, 1, 0, 1], [0, 0, 0, 0])
    assert r.recall[1] == 0.0 and r.precision[1] == 0.0 and r.f1[1] == 0.0
    perfect = report([0, 1, 1], [0, 1, 1])
    assert perfect.accuracy == perfect.macro_f1 == perfect.macro_precision == 1.0
    assert perfect.f1 == (1.0, 1.0)


def test_confusion_errors():
    with pytest.raises(ValueError):
        confusion([0, 1], [0])
    with pytest.raises(ValueError):
        confusion([0, 2], [0, 1])
    with pytest.raises(ValueError):
        report([], [])


@given(binary_pairs)
def test_flipping_predictions_swaps_cells(pair):
    y, p = pair
    a = confusion(y, p)
    b = confusion(y, [1 - v for v in p])
    assert (a.tp, a.fn, a.tn, a.fp) == (b.fn, b.tp, b.fp, b.tn)
    assert a.total == len(y)


@given(binary_pairs)
def test_report_agrees_with_direct_computation(pair):
    y, p = np.array(pair[0]), np.array(pair[1])
    r = report_from_confusion(confusion(y, p))
    assert r.accuracy == np.mean(y == p)
    for c in (0, 1):
        called, actual = p == c, y == c
        hit = int(np.sum(called & actual))
        prec = hit / called.sum() if called.sum() else 0.0
        rec = hit / actual.sum() if actual.sum() else 0.0
        assert r.precision[c] == prec and r.recall[c] == rec
        assert r.f1[c] == (2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    assert r.macro_f1 == (r.f1[0] + r.f1[1]) / 2


# --- ROC ----------------------------------------------------------------------

def test_auc_hand_cases():
    assert roc_auc([1, 1, 0, 0], [0.4, 0.8, 0.1, 0.5]).auc == 0.75
    assert roc_auc([0, 0, 1], [0.1, 0.2, 0.9]).auc == 1.0
    flat = roc_auc([0, 1, 0, 1], [0.3] * 4)
    assert flat.auc == 0.5 and flat.fpr.size == 2


def test_auc_rejects_single_class_and_bad_scores():
    with pytest.raises(ValueError):
        roc_auc([1, 1], [0.2, 0.4])
    with pytest.raises(ValueError):
        roc_auc([0, 1], [0.2, np.nan])
    with pytest.raises(ValueError):
        roc_auc([0, 1], [0.2])


scored = st.integers(2, 500).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 1), min_size=n, max_size=n),
    st.lists(st.integers(-20, 20), min_size=n, max_size=n))).filter(
    lambda t: 0 < sum(t[0]) < len(t[0]))


@given(scored)
def test_auc_matches_pair_counting_and_curve_invariants(case):
    y, s = np.array(case[0]), np.array(case[1], dtype=float) / 7.0
    curve = roc_auc(y, s)
    assert abs(curve.auc - pair_counting_auc(y, s)) < 1e-9
    assert (curve.fpr[0], curve.tpr[0]) == (0.0, 0.0)
    assert (curve.fpr[-1], curve.tpr[-1]) == (1.0, 1.0)
    assert (np.diff(curve.fpr) >= 0).all() and (np.diff(curve.tpr) >= 0).all()
    assert curve.fpr.size == np.unique(s).size + 1
    trap = np.trapezoid(curve.tpr, curve.fpr)
    assert abs(curve.auc - trap) < 1e-12


@given(scored)
def test_auc_invariant_under_increasing_transforms(case):
    y, s = np.array(case[0]), np.array(case[1], dtype=float)
    base = roc_auc(y, s).auc
    assert roc_auc(y, 3.0 * s + 1.0).auc == base
    assert roc_auc(y, s ** 3).auc == base


def test_roc_csv_roundtrip(tmp_path):
    curve = roc_auc([0, 1, 1, 0], [0.1, 0.7, 0.4, 0.4])
    path = tmp_path / "roc.csv"
    curve.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["fpr", "tpr", "threshold"]
    np.testing.assert_array_equal([float(r[1]) for r in rows[1:]], curve.tpr)
    assert rows[1][2] == "inf"


# --- class balance -----------------------------------------------------------------

def test_class_balance_cases():
    assert class_balance(make_ds(np.zeros((200, 1)), [0] * 100 + [1] * 100)) == {0: 0.5, 1: 0.5}
    assert class_balance(np.array([0] * 90 + [1] * 10)) == {0: 0.9, 1: 0.1}
    with pytest.raises(ValueError):
        class_balance(np.array([], dtype=int))


# --- Jensen-Shannon -------------------------------------------------------------------

def test_js_closed_form_two_bins():
    # M = (0.75, 0.25); JSD = 0.5*log2(4/3) + 0.5*(0.5*log2(2/3) + 0.5*log2(2))
    expected = 0.5 * np.log2(4 / 3) + 0.25 * np.log2(2 / 3) + 0.25
    assert js_from_histograms([1, 0], [0.5, 0.5]) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.3113, abs=1e-4)


@given(st.lists(st.floats(0, 10), min_size=2, max_size=30).filter(lambda v: sum(v) > 0),
       st.integers(0, 10_000))
def test_js_matches_scipy_and_is_bounded_symmetric(p, seed):
    q = np.random.default_rng(seed).random(len(p)) + 1e-3
    d = js_from_histograms(p, q)
    assert 0.0 <= d <= 1.0
    assert d == pytest.approx(jensenshannon(p, q, base=2) ** 2, abs=1e-9)
    assert d == pytest.approx(jsd_base2(p, q), abs=1e-12)
    assert d == pytest.approx(js_from_histograms(q, p), abs=1e-12)


def test_js_divergence_identical_is_zero():
    a = make_ds(np.random.default_rng(0).random((1000, 2)), np.zeros(1000, int))
    rep = js_divergence(a, a)
    assert rep.per_feature == {"f0": 0.0, "f1": 0.0} and rep.bins == 50


def test_js_divergence_disjoint_support_approaches_one():
    # add-one smoothing over 50 bins leaves a residual that shrinks with n
    rng = np.random.default_rng(0)
    values = []
    for n in (1000, 10_000, 100_000):
        a = make_ds(rng.random((n, 1)), np.zeros(n, int))
        b = make_ds(rng.random((n, 1)) + 5.0, np.zeros(n, int))
        rep = js_divergence(a, b)
        edges = np.linspace(min(a.features.min(), b.features.min()), rep_hi(a, b), 51)
        ha = np.histogram(a.features[:, 0], edges)[0] + 1.0
        hb = np.histogram(b.features[:, 0], edges)[0] + 1.0
        assert rep.mean == pytest.approx(jensenshannon(ha, hb, base=2) ** 2, abs=1e-12)
        values.append(rep.mean)
    assert values[0] < values[1] < values[2] <= 1.0
    assert 1.0 - values[2] < 0.01


def rep_hi(a, b):
    return max(a.features.max(), b.features.max())


def test_js_divergence_uses_pooled_bins_with_smoothing():
    a = make_ds([[0.0], [0.0], [1.0]], [0, 0, 0])
    b = make_ds([[1.0], [1.0], [1.0]], [0, 0, 0])
    # pooled range [0, 1], 2 bins: counts a=(2,1), b=(0,3), plus one each
    expected = jensenshannon([3, 2], [1, 4], base=2) ** 2
    assert js_divergence(a, b, bins=2).mean == pytest.approx(expected, abs=1e-12)


def test_js_divergence_errors():
    a = make_ds([[0.0]], [0])
    with pytest.raises(ValueError):
        js_divergence(a, a, bins=1)
    with pytest.raises(ValueError):
        js_divergence(a, make_ds([[0.0, 1.0]], [0]))
