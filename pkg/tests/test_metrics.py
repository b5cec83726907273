import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from envbal.metrics import (
    ConfusionMatrix,
    RankTable,
    chi2_sf,
    class_variances,
    confusion,
    friedman,
    holm,
    mean_rankings,
    metric_set,
)


def test_confusion_examples():
    truth = ["p"] * 10 + ["n"] * 20
    assert confusion(truth, truth, "p") == ConfusionMatrix(10, 0, 0, 20)
    truth = ["p"] * 53 + ["n"] * 171
    assert confusion(["n"] * 224, truth, "p") == ConfusionMatrix(0, 53, 0, 171)
    flip = ["n" if t == "p" else "p" for t in truth]
    cm = confusion(flip, truth, "p")
    assert cm.tp == 0 and cm.tn == 0


def test_confusion_errors():
    with pytest.raises(ValueError):
        confusion(["a"], ["a", "b"], "a")
    with pytest.raises(ValueError):
        confusion(["a", "c"], ["a", "b"], "a")


def test_metric_set_degenerate_predictor():
    ms = metric_set(ConfusionMatrix(0, 53, 0, 171))
    assert ms.acc == pytest.approx(171 / 224)
    assert (ms.auc, ms.f_measure, ms.g_mean) == (0.5, 0.0, 0.0)


def test_metric_set_perfect():
    ms = metric_set(ConfusionMatrix(10, 0, 0, 20))
    assert all(v == 1.0 for v in ms.as_dict().values())


def test_metric_set_hand_values():
    ms = metric_set(ConfusionMatrix(3, 1, 2, 4))
    assert ms.precision == pytest.approx(0.6)
    assert ms.recall == pytest.approx(0.75)
    assert ms.f_measure == pytest.approx(2 / 3)
    assert ms.auc == pytest.approx((0.75 + 4 / 6) / 2)
    assert round(ms.auc, 4) == 0.7083
    assert ms.g_mean == pytest.approx(math.sqrt(0.5))


counts = st.tuples(*[st.integers(0, 50)] * 4).filter(lambda c: sum(c) > 0)


@settings(max_examples=300, deadline=None)
@given(counts)
def test_metric_invariants(c):
    tp, fn, fp, tn = c
    ms = metric_set(ConfusionMatrix(*c))
    sens = tp / (tp + fn) if tp + fn else 0.0
    spec = tn / (tn + fp) if tn + fp else 0.0
    assert ms.g_mean**2 == pytest.approx(sens * spec, abs=1e-12)
    assert ms.auc == (sens + spec) / 2
    assert ms.g_mean <= ms.auc + 1e-15
    if ms.precision + ms.recall > 0:
        assert ms.f_measure == pytest.approx(2 * ms.precision * ms.recall / (ms.precision + ms.recall))
    else:
        assert ms.f_measure == 0.0
    if tp == 0:
        assert ms.f_measure == 0.0
    for v in ms.as_dict().values():
        assert 0.0 <= v <= 1.0
    if fn > 0:
        up = metric_set(ConfusionMatrix(tp + 1, fn - 1, fp, tn))
        for name, v in ms.as_dict().items():
            assert getattr(up, name) >= v - 1e-15, name


def test_class_variances():
    assert class_variances(np.ones((4, 3)), np.zeros((2, 3)))[0] == 0.0
    assert class_variances([[0.0, 0.0], [2.0, 0.0]], [[1.0, 0.0]])[1] == 0.0
    intra, inter = class_variances([[0.0, 0.0], [2.0, 0.0]], [[3.0, 4.0]])
    assert intra == pytest.approx(0.5)
    assert inter == pytest.approx(10.0)
    with pytest.raises(ValueError):
        class_variances(np.zeros((0, 2)), np.zeros((1, 2)))


def test_chi2_sf_closed_forms():
    # df = 2: exp(-x/2); df = 1: erfc(sqrt(x/2))
    for x in (0.1, 1.0, 8.0, 30.0):
        assert chi2_sf(x, 2) == pytest.approx(math.exp(-x / 2), rel=1e-10)
        assert chi2_sf(x, 1) == pytest.approx(math.erfc(math.sqrt(x / 2)), rel=1e-10)
    assert chi2_sf(0.0, 3) == 1.0


def constant_rank_table():
    # method A always best, C always worst, 4 datasets
    scores = np.array([[0.9, 0.8, 0.7, 0.95], [0.5, 0.6, 0.4, 0.7], [0.1, 0.2, 0.3, 0.1]])
    return RankTable(("A", "B", "C"), ("d1", "d2", "d3", "d4"), scores)


def test_friedman_closed_form_case():
    stat, p = friedman(constant_rank_table())
    assert stat == pytest.approx(8.0, abs=1e-9)
    assert p == pytest.approx(math.exp(-4.0), abs=1e-12)
    assert p == pytest.approx(0.01832, abs=1e-4)


def test_friedman_all_ties():
    rt = RankTable(("a", "b", "c"), ("x", "y"), np.full((3, 2), 0.5))
    assert friedman(rt) == (0.0, 1.0)


def test_friedman_row_permutation_and_monotone_transform():
    rng = np.random.default_rng(0)
    S = rng.uniform(size=(4, 7))
    base = friedman(RankTable(tuple("abcd"), tuple("1234567"), S))
    perm = rng.permutation(7)
    shuffled = friedman(RankTable(tuple("abcd"), tuple(np.array(list("1234567"))[perm]), S[:, perm]))
    transformed = friedman(RankTable(tuple("abcd"), tuple("1234567"), np.exp(3 * S) - 2))
    assert shuffled == pytest.approx(base, abs=1e-12)
    assert transformed == pytest.approx(base, abs=1e-12)


def test_friedman_degenerate():
    with pytest.raises(ValueError):
        friedman(RankTable(("a",), ("x", "y"), [[1.0, 2.0]]))


def test_holm_examples():
    assert holm([1.0, 1.0, 1.0]) == [False, False, False]
    assert holm([0.01, 0.03, 0.04], 0.05) == [True, False, False]
    assert holm([0.04], 0.05) == [True]
    assert holm([0.04, 0.01, 0.03], 0.05) == [False, True, False]
    assert holm([0.0, 0.0], 0.0) == [False, False]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=12), st.floats(0.001, 0.5))
def test_holm_subset_of_unadjusted(ps, alpha):
    rej = holm(ps, alpha)
    for p, r in zip(ps, rej):
        if r:
            assert p <= alpha


def test_mean_rankings():
    rt = constant_rank_table()
    assert mean_rankings(rt) == {"A": 1.0, "B": 2.0, "C": 3.0}
    tie = RankTable(("a", "b"), ("x", "y", "z"), np.ones((2, 3)))
    assert mean_rankings(tie) == {"a": 1.5, "b": 1.5}
    hand = RankTable(("a", "b", "c"), ("x", "y", "z"), [[3, 1, 2], [2, 2, 3], [1, 3, 1]])
    # x: a1 b2 c3 | y: c1 a3 b2 -> ranks (c best) | z: b1 a2 c3
    assert mean_rankings(hand) == pytest.approx({"a": (1 + 3 + 2) / 3, "b": (2 + 2 + 1) / 3, "c": (3 + 1 + 3) / 3})


def test_rank_sums():
    S = np.random.default_rng(1).integers(0, 3, size=(5, 8))
    ranks = RankTable(tuple("abcde"), tuple("12345678"), S).ranks
    np.testing.assert_allclose(ranks.sum(axis=0), 5 * 6 / 2)
