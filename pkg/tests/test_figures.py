import numpy as np
import pytest

from plrank.depth import DepthMap, SceneSpec, generate_scene
from plrank.figures import (
    save_depth_heatmap,
    save_nll_trace,
    save_report_chart,
    save_rmse_curve,
)
from plrank.metrics import EvalReport

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def assert_png(path):
    data = path.read_bytes()
    assert data[:8] == PNG_MAGIC
    assert len(data) > 1000


def test_heatmap_from_depth_map(tmp_path):
    scene = generate_scene(SceneSpec("steps", 16, 16, (1.0, 9.0), seed=1))
    out = tmp_path / "scene.png"
    save_depth_heatmap(scene, out, title="steps")
    assert_png(out)


def test_heatmap_from_raw_grid(tmp_path):
    out = tmp_path / "grid.png"
    save_depth_heatmap(np.random.default_rng(2).normal(size=(8, 8)), out)
    assert_png(out)


def test_heatmap_with_masked_pixels(tmp_path):
    values = np.ones((6, 6), np.float32)
    mask = np.ones((6, 6), bool)
    mask[2:4, 2:4] = False
    out = tmp_path / "masked.png"
    save_depth_heatmap(DepthMap(values, mask), out)
    assert_png(out)


def test_nll_trace(tmp_path):
    out = tmp_path / "trace.png"
    save_nll_trace(np.array([2.0, 1.0, 0.5, 0.4]), out, title="training")
    assert_png(out)


def test_rmse_curve(tmp_path):
    rows = [(500, s, 0.1 / (s + 1)) for s in range(3)]
    rows += [(5000, s, 0.03 / (s + 1)) for s in range(3)]
    out = tmp_path / "curve.png"
    save_rmse_curve(rows, out)
    assert_png(out)


def test_rmse_curve_needs_rows(tmp_path):
    with pytest.raises(ValueError):
        save_rmse_curve([], tmp_path / "x.png")


def test_report_chart(tmp_path):
    reports = [
        ("trained", EvalReport(0.013, 0.998, 0.042, 3.2, 49000, 100, 8)),
        ("noise", EvalReport(0.5, 0.87, 0.3, 85.0, 50000, 100, 8)),
    ]
    out = tmp_path / "chart.png"
    save_report_chart(reports, out, title="comparison")
    assert_png(out)


def test_report_chart_needs_rows(tmp_path):
    with pytest.raises(ValueError):
        save_report_chart([], tmp_path / "x.png")
