import math

import numpy as np
import pytest

from tli import (
    InjectionConfig,
    RankMismatchError,
    ShapeMismatchError,
    center_crop,
    combo_injection,
    resize,
    softmax_mix,
    softmax_weights,
)

from generators import random_shape_like, random_tensor
from oracles import resize_direct


def f32(values):
    return np.asarray(values, dtype=np.float32)


# --- center_crop ---

def test_crop_shrink_1d():
    out, mask = center_crop(f32([1, 2, 3, 4]), (2,))
    assert np.array_equal(out, f32([2, 3]))
    assert mask.all()


def test_crop_same_shape_identity():
    x = f32([[1, 2], [3, 4]])
    out, mask = center_crop(x, (2, 2))
    assert np.array_equal(out, x)
    assert mask.all()


def test_crop_grow_1d_pads_zeros():
    out, mask = center_crop(f32([5, 6]), (4,))
    assert np.array_equal(out, f32([0, 5, 6, 0]))
    assert np.array_equal(mask, [False, True, True, False])


def test_crop_mixed_grow_shrink_2d():
    x = f32([[1, 2, 3], [4, 5, 6]])
    out, mask = center_crop(x, (4, 2))
    # dim0 grows (offset 1), dim1 shrinks (start floor((3-2)/2)=0).
    assert np.array_equal(out, f32([[0, 0], [1, 2], [4, 5], [0, 0]]))
    assert np.array_equal(mask[:, 0], [False, True, True, False])


def test_crop_overlap_values_verbatim():
    rng = np.random.default_rng(41)
    for _ in range(50):
        src = random_tensor(rng, max_dim=9)
        target = random_shape_like(rng, src, max_dim=9)
        out, mask = center_crop(src, target)
        assert out.shape == tuple(target)
        assert np.array_equal(out[~mask], np.zeros((~mask).sum(), np.float32))
        src_window = [
            slice((n - m) // 2, (n - m) // 2 + m) if m <= n else slice(0, n)
            for n, m in zip(src.shape, target)
        ]
        assert np.array_equal(out[mask], src[tuple(src_window)].ravel())


def test_crop_rank_mismatch():
    with pytest.raises(RankMismatchError):
        center_crop(f32([1, 2]), (2, 2))


# --- resize ---

def test_resize_hand_value():
    out = resize(f32([1, 3]), (4,))
    assert np.allclose(out, [1, 5 / 3, 7 / 3, 3], atol=1e-6)


def test_resize_same_shape_bitwise_identity():
    rng = np.random.default_rng(42)
    for _ in range(20):
        src = random_tensor(rng)
        out = resize(src, src.shape)
        assert np.array_equal(out.view(np.uint32), src.view(np.uint32))


def test_resize_constant_stays_constant():
    rng = np.random.default_rng(43)
    for _ in range(20):
        rank = int(rng.integers(1, 5))
        shape = tuple(int(rng.integers(1, 7)) for _ in range(rank))
        target = tuple(int(rng.integers(1, 7)) for _ in range(rank))
        c = np.float32(rng.uniform(-5, 5))
        out = resize(np.full(shape, c, np.float32), target)
        assert np.array_equal(out, np.full(target, c, np.float32))


def test_resize_single_output_is_center():
    assert resize(f32([2, 4]), (1,))[0] == pytest.approx(3.0)
    assert resize(f32([1, 2, 3]), (1,))[0] == pytest.approx(2.0)


def test_resize_envelope():
    rng = np.random.default_rng(44)
    for _ in range(50):
        src = random_tensor(rng, max_dim=8)
        target = random_shape_like(rng, src, max_dim=8)
        out = resize(src, target)
        assert out.min() >= src.min()
        assert out.max() <= src.max()


def test_resize_matches_direct_oracle_1d_2d():
    rng = np.random.default_rng(45)
    for _ in range(40):
        rank = int(rng.integers(1, 3))
        shape = tuple(int(rng.integers(1, 10)) for _ in range(rank))
        target = tuple(int(rng.integers(1, 10)) for _ in range(rank))
        src = rng.uniform(-1, 1, size=shape).astype(np.float32)
        expected = resize_direct(src, target)
        assert np.allclose(resize(src, target), expected, atol=1e-6)


def test_resize_rank_mismatch():
    with pytest.raises(RankMismatchError):
        resize(f32([[1, 2]]), (3,))


# --- combo_injection ---

def test_combo_hand_value():
    out = combo_injection(f32([1, 2, 3, 4]), (2,), 0.75)
    assert np.allclose(out, [1.75, 3.25], atol=1e-6)


def test_combo_same_shape_is_bitwise_identity_for_any_lambda():
    rng = np.random.default_rng(46)
    for lam in (0.0, 0.25, 0.75, 1.0):
        src = random_tensor(rng)
        out = combo_injection(src, src.shape, lam)
        assert np.array_equal(out.view(np.uint32), src.view(np.uint32))


def test_combo_lambda_endpoints():
    rng = np.random.default_rng(47)
    for _ in range(30):
        src = random_tensor(rng, max_dim=8)
        target = random_shape_like(rng, src, max_dim=8)
        resized = resize(src, target)
        cropped, mask = center_crop(src, target)
        zero = combo_injection(src, target, 0.0)
        one = combo_injection(src, target, 1.0)
        assert np.array_equal(zero, resized)
        assert np.array_equal(one[mask], cropped[mask])
        assert np.array_equal(one[~mask], resized[~mask])


def test_combo_outside_overlap_is_resize():
    src = f32([5, 6])
    out = combo_injection(src, (4,), 0.75)
    resized = resize(src, (4,))
    _, mask = center_crop(src, (4,))
    assert np.array_equal(out[~mask], resized[~mask])


def test_combo_linear_in_source():
    rng = np.random.default_rng(48)
    for _ in range(30):
        src = random_tensor(rng, max_dim=8)
        target = random_shape_like(rng, src, max_dim=8)
        alpha = np.float32(rng.uniform(-3, 3))
        lam = float(rng.uniform(0, 1))
        scaled = combo_injection(alpha * src, target, lam)
        reference = alpha * combo_injection(src, target, lam)
        assert np.allclose(scaled, reference, rtol=1e-6, atol=1e-7)


def test_combo_output_shape_always_target():
    rng = np.random.default_rng(49)
    for _ in range(30):
        src = random_tensor(rng)
        target = random_shape_like(rng, src)
        assert combo_injection(src, target, 0.75).shape == tuple(target)


def test_combo_rejects_bad_lambda():
    with pytest.raises(ValueError):
        combo_injection(f32([1]), (1,), 1.5)


# --- softmax mixing ---

def test_single_candidate_bitwise():
    rng = np.random.default_rng(50)
    t = random_tensor(rng)
    out = softmax_mix([(t, 0.3)])
    assert np.array_equal(out.view(np.uint32), t.view(np.uint32))


def test_equal_scores_give_mean():
    rng = np.random.default_rng(51)
    a, b = rng.uniform(-1, 1, (3, 4)).astype(np.float32), rng.uniform(-1, 1, (3, 4)).astype(np.float32)
    out = softmax_mix([(a, 0.5), (b, 0.5)])
    assert np.allclose(out, (a.astype(np.float64) + b) / 2, atol=1e-6)


def test_softmax_hand_value():
    w = softmax_weights([0.9, 0.1])
    expected = math.exp(0.9) / (math.exp(0.9) + math.exp(0.1))
    assert w[0] == pytest.approx(expected, abs=1e-12)
    assert round(float(w[0]), 4) == 0.6900
    assert round(float(w[1]), 4) == 0.3100
    a, b = np.ones((2,), np.float32), np.zeros((2,), np.float32)
    out = softmax_mix([(a, 0.9), (b, 0.1)])
    assert np.allclose(out, expected, atol=1e-6)


def test_softmax_weights_sum_to_one():
    rng = np.random.default_rng(52)
    for _ in range(50):
        scores = rng.uniform(-5, 5, size=rng.integers(1, 6)).tolist()
        tau = float(rng.uniform(0.05, 4.0))
        w = softmax_weights(scores, tau)
        assert abs(w.sum() - 1.0) < 1e-6
        assert (w > 0).all()


def test_mix_permutation_invariant():
    rng = np.random.default_rng(53)
    candidates = [(rng.uniform(-1, 1, (4, 4)).astype(np.float32), float(rng.uniform(0, 1)))
                  for _ in range(4)]
    base = softmax_mix(candidates)
    flipped = softmax_mix(list(reversed(candidates)))
    assert np.allclose(base, flipped, rtol=1e-6, atol=1e-7)


def test_temperature_sharpens():
    cold = softmax_weights([1.0, 0.0], temperature=0.1)
    hot = softmax_weights([1.0, 0.0], temperature=10.0)
    assert cold[0] > hot[0]
    with pytest.raises(ValueError):
        softmax_weights([1.0], temperature=0.0)


def test_mix_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        softmax_mix([(np.zeros((2,), np.float32), 1.0),
                     (np.zeros((3,), np.float32), 1.0)])


def test_injection_config_validation():
    assert InjectionConfig().crop_weight == 0.75
    with pytest.raises(ValueError):
        InjectionConfig(crop_weight=-0.1)
    with pytest.raises(ValueError):
        InjectionConfig(temperature=0.0)
    with pytest.raises(ValueError):
        InjectionConfig(k=0)
