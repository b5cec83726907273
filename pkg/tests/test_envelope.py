import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from envbal import fcm
from envbal.envelope import CorrectionSettings, layer_step, midmd_correct, plan_layers, run
from envbal.fcm import FcmConfig
from envbal.mmd import Kernel, mmd_sq


@pytest.mark.parametrize(
    "mn, mj, counts, deficit",
    [
        (100, 210, (50, 75), 110),  # Vertebral counts
        (50, 456, (25, 38, 57, 85, 128, 192), 406),  # Yeast-0-3-5-9-vs-7-8 counts
        (10, 11, (5,), 1),
    ],
)
def test_plan_examples(mn, mj, counts, deficit):
    plan = plan_layers(mn, mj, 2.0, 9)
    assert plan.cluster_counts == counts
    assert plan.deficit == deficit
    assert plan.shortfall_fill == 0


def test_plan_cap_shortfall_and_clamp():
    plan = plan_layers(10, 200, 2.0, 2)
    assert plan.cluster_counts == (5, 8)
    assert plan.shortfall_fill == 190 - 13
    assert plan_layers(2, 5, 1.5, 9).cluster_counts[0] == 1  # ceil(2/1.5)=2 clamped to 1


@pytest.mark.parametrize("args", [(1, 5, 2, 9), (5, 5, 2, 9), (5, 4, 2, 9), (5, 9, 1.0, 9), (5, 9, 2, 0)])
def test_plan_errors(args):
    with pytest.raises(ValueError):
        plan_layers(*args)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 300), st.integers(1, 3000), st.floats(1.05, 6.0), st.integers(1, 12))
def test_plan_invariants(mn, extra, t, cap):
    plan = plan_layers(mn, mn + extra, t, cap)
    assert 1 <= plan.n_layers <= cap
    for c, size in zip(plan.cluster_counts, plan.input_sizes()):
        assert 1 <= c < size
    assert plan.total + plan.shortfall_fill >= plan.deficit
    assert plan.shortfall_fill == 0 or plan.n_layers == cap


def test_layer_step_square_center():
    X = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]])
    np.testing.assert_allclose(layer_step(X, 1, FcmConfig()).prototypes, [[1.0, 1.0]], atol=1e-12)


def test_layer_step_precondition():
    with pytest.raises(ValueError):
        layer_step(np.zeros((4, 2)), 4, FcmConfig())


def multisum_prototypes(X, layers, U, m):
    """Two-level sum: original points plus each earlier layer's prototypes, written out per block."""
    c = U.shape[0]
    blocks = [X] + layers
    out = np.zeros((c, X.shape[1]))
    for i in range(c):
        num = np.zeros(X.shape[1])
        den = 0.0
        col = 0
        for B in blocks:
            for row in B:
                w = U[i, col] ** m
                num += w * row
                den += w
                col += 1
        out[i] = num / den
    return out


def test_layer_two_update_equals_multisum():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(12, 3))
    V1 = layer_step(X, 6, FcmConfig(seed=1)).prototypes
    aug = np.vstack([X, V1])
    U = fcm.update_memberships(aug, rng.normal(size=(9, 3)), 2.0)
    np.testing.assert_allclose(fcm.update_prototypes(aug, U, 2.0), multisum_prototypes(X, [V1], U, 2.0), rtol=0, atol=1e-12)


def test_midmd_linear_shift_back():
    X = np.random.default_rng(0).normal(size=(10, 2))
    V = midmd_correct(X, X + 1.0, Kernel("linear"))
    np.testing.assert_allclose(V, X, atol=1e-12)
    assert mmd_sq(X, V, Kernel("linear")).mmd_sq <= 1e-10


def test_midmd_linear_fixed_point_and_geometry():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(10, 2))
    V = rng.normal(size=(4, 2))
    V -= V.mean(axis=0) - X.mean(axis=0)
    np.testing.assert_allclose(midmd_correct(X, V), V, atol=1e-14)
    W = rng.normal(3.0, size=(4, 2))
    C = midmd_correct(X, W)
    np.testing.assert_allclose(C[1:] - C[0], W[1:] - W[0], atol=1e-12)


def test_midmd_rbf_never_increases():
    rng = np.random.default_rng(21)
    X, V = rng.normal(size=(20, 2)), rng.normal(1.0, size=(5, 2))
    k = Kernel("rbf", 1.0)
    before = mmd_sq(X, V, k).mmd_sq
    C = midmd_correct(X, V, k, CorrectionSettings(step=0.5))
    after = mmd_sq(X, C, k).mmd_sq
    assert after < before


def blob(seed, n=40, d=2):
    return np.random.default_rng(seed).normal(size=(n, d))


def test_run_single_layer_two_points():
    X = np.array([[0.0, 0.0], [2.0, 4.0]])
    plan = plan_layers(2, 3, 2.0, 9)
    out = run(X, plan)
    np.testing.assert_allclose(out.generated, [[1.0, 2.0]], atol=1e-12)


def test_run_bookkeeping_and_linear_mmd():
    X = blob(5)
    plan = plan_layers(40, 140, 2.0, 9)
    out = run(X, plan, FcmConfig(seed=9))
    assert [l.size for l in out.layers] == list(plan.cluster_counts)
    assert out.generated.shape[0] == plan.total
    assert [l.input_size for l in out.layers] == plan.input_sizes()
    for layer in out.layers:
        assert layer.mmd_after <= 1e-10
        assert layer.mmd_after <= layer.mmd_before + 1e-12


def test_run_geometry_bounds():
    X = blob(6)
    out = run(X, plan_layers(40, 100, 2.0, 9), FcmConfig(seed=2))
    aug = X
    for layer in out.layers:
        lo, hi = aug.min(axis=0), aug.max(axis=0)
        assert np.all(layer.raw_prototypes >= lo - 1e-12) and np.all(layer.raw_prototypes <= hi + 1e-12)
        shift = np.abs(aug.mean(axis=0) - layer.raw_prototypes.mean(axis=0))
        assert np.all(layer.prototypes >= lo - shift - 1e-12) and np.all(layer.prototypes <= hi + shift + 1e-12)
        aug = np.vstack([aug, layer.prototypes])


def test_run_deterministic():
    X = blob(7)
    plan = plan_layers(40, 120, 2.0, 9)
    a = run(X, plan, FcmConfig(seed=3), Kernel("rbf"))
    b = run(X, plan, FcmConfig(seed=3), Kernel("rbf"))
    assert np.array_equal(a.generated, b.generated)
    assert a.mmd_after == b.mmd_after


def test_run_uncorrected_and_original_target():
    X = blob(8)
    plan = plan_layers(40, 100, 2.0, 9)
    raw = run(X, plan, FcmConfig(seed=1), correction=CorrectionSettings(enabled=False))
    assert raw.mmd_before == raw.mmd_after
    cor = run(X, plan, FcmConfig(seed=1))
    # identical first-layer FCM, differing by one translation
    d = cor.layers[0].prototypes - raw.layers[0].prototypes
    np.testing.assert_allclose(d, np.broadcast_to(d[0], d.shape), atol=1e-12)
    orig = run(X, plan, FcmConfig(seed=1), correction=CorrectionSettings(target="original"))
    for layer in orig.layers:
        assert abs(layer.prototypes.mean(axis=0) - X.mean(axis=0)).max() < 1e-12


def test_run_rejects_mismatched_plan():
    with pytest.raises(ValueError):
        run(blob(0, n=10), plan_layers(12, 20))
