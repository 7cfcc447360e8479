"""Scene generation and the DepthMap data model."""

import numpy as np
import pytest

from plrank.depth import SCENE_KINDS, DepthMap, SceneSpec, generate_scene


def test_ramp_h_rows():
    scene = generate_scene(SceneSpec("ramp-h", 4, 4, (0.0, 3.0)))
    expected = np.array([0.0, 1.0, 2.0, 3.0], dtype=np.float32)
    for row in scene.values:
        assert np.array_equal(row, expected)
    assert scene.mask.all()


def test_ramp_v_columns():
    scene = generate_scene(SceneSpec("ramp-v", 4, 6, (0.0, 3.0)))
    expected = np.array([0.0, 1.0, 2.0, 3.0], dtype=np.float32)
    for col in scene.values.T:
        assert np.array_equal(col, expected)


def test_bowl_center_is_minimum():
    scene = generate_scene(SceneSpec("bowl", 9, 9, (2.0, 7.0)))
    assert scene.values[4, 4] == scene.values.min()
    assert scene.values[4, 4] == pytest.approx(2.0)
    assert scene.values[0, 0] == pytest.approx(7.0)


def test_steps_masks_discontinuity_borders():
    scene = generate_scene(SceneSpec("steps", 4, 8, (0.0, 3.0)))
    jumps = np.flatnonzero(scene.values[0, 1:] != scene.values[0, :-1])
    assert jumps.size > 0
    for j in jumps:
        assert not scene.mask[:, j].any()
        assert not scene.mask[:, j + 1].any()
    # away from jumps the mask is valid
    assert scene.mask.any()


def test_steps_minimum_width_keeps_valid_pixels():
    scene = generate_scene(SceneSpec("steps", 4, 4, (0.0, 1.0)))
    assert scene.valid_count >= 2


def test_smooth_spans_range():
    scene = generate_scene(SceneSpec("smooth", 16, 16, (1.0, 4.0), seed=5))
    assert scene.values.min() == pytest.approx(1.0, abs=1e-5)
    assert scene.values.max() == pytest.approx(4.0, abs=1e-5)


def test_determinism():
    for kind in SCENE_KINDS:
        spec = SceneSpec(kind, 8, 8, (0.0, 5.0), seed=3)
        a = generate_scene(spec)
        b = generate_scene(spec)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.mask, b.mask)


def test_invariants_over_random_specs():
    rng = np.random.default_rng(0)
    for _ in range(100):
        kind = SCENE_KINDS[int(rng.integers(len(SCENE_KINDS)))]
        H = int(rng.integers(4, 24))
        W = int(rng.integers(4, 24))
        lo = float(rng.uniform(0, 3))
        hi = lo + float(rng.uniform(0.5, 10))
        scene = generate_scene(SceneSpec(kind, H, W, (lo, hi), seed=int(rng.integers(1000))))
        valid = scene.values[scene.mask]
        assert scene.values.shape == (H, W)
        assert scene.values.dtype == np.float32
        assert np.all(np.isfinite(valid))
        assert valid.min() >= 0
        assert scene.valid_count >= 2


def test_spec_validation():
    with pytest.raises(ValueError):
        SceneSpec("spiral", 8, 8)
    with pytest.raises(ValueError):
        SceneSpec("ramp-h", 3, 8)
    with pytest.raises(ValueError):
        SceneSpec("ramp-h", 8, 8, (5.0, 5.0))
    with pytest.raises(ValueError):
        SceneSpec("ramp-h", 8, 8, (-1.0, 5.0))


def test_depth_map_validation():
    with pytest.raises(ValueError):
        DepthMap(np.zeros((4, 4)), np.ones((3, 4), dtype=bool))
    with pytest.raises(ValueError):
        DepthMap(np.full((4, 4), np.nan), np.ones((4, 4), dtype=bool))
    with pytest.raises(ValueError):
        DepthMap(np.full((4, 4), -1.0), np.ones((4, 4), dtype=bool))
    # invalid pixels may hold anything
    values = np.zeros((4, 4))
    values[0, 0] = np.nan
    mask = np.ones((4, 4), dtype=bool)
    mask[0, 0] = False
    dm = DepthMap(values, mask)
    assert dm.valid_count == 15


def test_depth_map_is_read_only():
    dm = generate_scene(SceneSpec("ramp-h", 4, 4, (0.0, 3.0)))
    with pytest.raises(ValueError):
        dm.values[0, 0] = 9.0
