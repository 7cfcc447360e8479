"""Ranking and metric-depth evaluation on sampled pixel pairs and sets.

Four numbers summarize a prediction against a ground-truth depth map:

* ordinal error: fraction of sampled pixel pairs whose predicted depth
  order contradicts the ground truth, ground-truth ties excluded.
* nDCG: sampled location sets are ordered by predicted closeness and scored
  with relevance 1 / (depth + 1) under a log2 position discount, normalized
  by the best achievable ordering.
* RMSE between prediction and truth, both divided by a depth capacity C.
* delta > 1.25: percentage of pixels where max(pred/z, z/pred) exceeds 1.25.

Predictors come in two orientations: depth-like (higher means farther, the
default) and score-like (higher means closer). Comparisons normalize to
closer-first order, so ordinal error and nDCG are orientation-agnostic;
RMSE and the ratio metric expect actual depth, aligned beforehand.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .depth import DepthMap
from .errors import CapacityError, UndefinedMetricError

__all__ = [
    "EvalReport",
    "delta_metric",
    "evaluate",
    "format_report_table",
    "ndcg",
    "ordinal_error",
    "ordinal_relation",
    "read_report_csv",
    "rmse",
    "sample_eval_pairs",
    "sample_eval_ranking_sets",
    "write_report_csv",
]


def _check_location(location, depth_map: DepthMap) -> tuple[int, int]:
    row, col = int(location[0]), int(location[1])
    if not (0 <= row < depth_map.height and 0 <= col < depth_map.width):
        raise ValueError(f"location {(row, col)} out of bounds")
    if not depth_map.mask[row, col]:
        raise ValueError(f"location {(row, col)} is masked out")
    return row, col


def ordinal_relation(l1, l2, depth_map: DepthMap, threshold: float = 0.0) -> int:
    """+1 when l1 is deeper than l2, -1 when shallower, 0 when tied.

    threshold > 0 widens the tie band: depths whose max-ratio stays below
    1 + threshold compare as equal (two exact zeros tie; zero against a
    positive depth never does).
    """
    if not (np.isfinite(threshold) and threshold >= 0):
        raise ValueError(f"threshold must be >= 0, got {threshold!r}")
    r1, c1 = _check_location(l1, depth_map)
    r2, c2 = _check_location(l2, depth_map)
    d1 = float(depth_map.values[r1, c1])
    d2 = float(depth_map.values[r2, c2])
    if threshold > 0.0 and d1 != d2:
        low, high = min(d1, d2), max(d1, d2)
        ratio = np.inf if low == 0.0 else high / low
        if ratio < 1.0 + threshold:
            return 0
    return int(np.sign(d1 - d2))


def _validated_pairs(depth_map: DepthMap, pairs) -> np.ndarray:
    locs = np.asarray(pairs, dtype=np.intp)
    if locs.ndim != 3 or locs.shape[1:] != (2, 2):
        raise ValueError(f"pairs must have shape (m, 2, 2), got {locs.shape}")
    rows, cols = locs[..., 0], locs[..., 1]
    if locs.size and (
        rows.min() < 0
        or rows.max() >= depth_map.height
        or cols.min() < 0
        or cols.max() >= depth_map.width
    ):
        raise ValueError("pair location out of bounds")
    if not np.all(depth_map.mask[rows, cols]):
        raise ValueError("pair location is masked out")
    return locs


def _depth_like(pred: np.ndarray, pred_higher_is_closer: bool) -> np.ndarray:
    return -pred if pred_higher_is_closer else pred


def ordinal_error(pred, truth: DepthMap, pairs, pred_higher_is_closer: bool = False) -> float:
    """Fraction of ground-truth-ordered pairs the prediction gets wrong.

    Pairs with tied ground truth are dropped from both numerator and
    denominator; a predicted tie on a retained pair counts as an error.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"pred shape {pred.shape} != truth shape {truth.shape}")
    locs = _validated_pairs(truth, pairs)
    depths = truth.values.astype(np.float64)[locs[..., 0], locs[..., 1]]
    gt_rel = np.sign(depths[:, 0] - depths[:, 1])
    retained = gt_rel != 0
    if not np.any(retained):
        raise UndefinedMetricError("every sampled pair is tied in the ground truth")
    ordered = _depth_like(pred, pred_higher_is_closer)[locs[..., 0], locs[..., 1]]
    if not np.all(np.isfinite(ordered[retained])):
        raise ValueError("pred must be finite at evaluated pixels")
    pred_rel = np.sign(ordered[:, 0] - ordered[:, 1])
    return float(np.mean(pred_rel[retained] != gt_rel[retained]))


def ndcg(pred, truth: DepthMap, ranking_sets, pred_higher_is_closer: bool = False) -> float:
    """Mean normalized DCG over location sets ordered by predicted closeness.

    Relevance of a location is 1 / (depth + 1); position i (1-based) is
    discounted by log2(i + 1). The ideal order sorts by true closeness.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"pred shape {pred.shape} != truth shape {truth.shape}")
    sets = [np.asarray(s, dtype=np.intp) for s in ranking_sets]
    if not sets:
        raise UndefinedMetricError("need at least one ranking set")
    ordered = _depth_like(pred, pred_higher_is_closer)
    truth_depths = truth.values.astype(np.float64)
    total = 0.0
    for locs in sets:
        if locs.ndim != 2 or locs.shape[1] != 2 or locs.shape[0] < 2:
            raise ValueError(f"ranking set must have shape (k >= 2, 2), got {locs.shape}")
        rows, cols = locs[:, 0], locs[:, 1]
        if (
            rows.min() < 0
            or rows.max() >= truth.height
            or cols.min() < 0
            or cols.max() >= truth.width
        ):
            raise ValueError("ranking set location out of bounds")
        if not np.all(truth.mask[rows, cols]):
            raise ValueError("ranking set location is masked out")
        linear = rows * truth.width + cols
        if np.unique(linear).size != linear.size:
            raise ValueError("ranking set locations must be distinct")
        depths = truth_depths[rows, cols]
        scores = ordered[rows, cols]
        if not np.all(np.isfinite(scores)):
            raise ValueError("pred must be finite at evaluated pixels")
        relevance = 1.0 / (depths + 1.0)
        discount = 1.0 / np.log2(np.arange(locs.shape[0]) + 2.0)
        dcg = relevance[np.argsort(scores, kind="stable")] @ discount
        ideal = relevance[np.argsort(depths, kind="stable")] @ discount
        total += float(dcg / ideal)
    return total / len(sets)


def rmse(pred, truth: DepthMap, max_capacity: float) -> float:
    """Root-mean-square error over valid pixels, both maps divided by capacity."""
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"pred shape {pred.shape} != truth shape {truth.shape}")
    if not (np.isfinite(max_capacity) and max_capacity > 0):
        raise ValueError(f"max_capacity must be positive, got {max_capacity!r}")
    if truth.valid_count == 0:
        raise UndefinedMetricError("no valid pixels to evaluate")
    z = truth.values.astype(np.float64)[truth.mask]
    if max_capacity < z.max():
        raise ValueError(
            f"max_capacity {max_capacity!r} is below the deepest valid pixel {z.max()!r}"
        )
    p = pred[truth.mask]
    if not np.all(np.isfinite(p)):
        raise ValueError("pred must be finite at valid pixels")
    return float(np.sqrt(np.mean((p / max_capacity - z / max_capacity) ** 2)))


def delta_metric(pred, truth: DepthMap) -> float:
    """Percentage of pixels with max(pred/z, z/pred) > 1.25.

    Valid pixels with zero true depth are excluded (the ratio is undefined
    there); nonpositive predictions count as exceeding the threshold.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"pred shape {pred.shape} != truth shape {truth.shape}")
    eligible = truth.mask & (truth.values > 0)
    if not np.any(eligible):
        raise UndefinedMetricError("no valid pixels with positive true depth")
    z = truth.values.astype(np.float64)[eligible]
    p = pred[eligible]
    if not np.all(np.isfinite(p)):
        raise ValueError("pred must be finite at evaluated pixels")
    with np.errstate(divide="ignore"):
        ratio = np.where(p > 0, np.maximum(p / z, z / p), np.inf)
    return 100.0 * float(np.mean(ratio > 1.25))


def sample_eval_pairs(depth_map: DepthMap, count: int, rng) -> np.ndarray:
    """(count, 2, 2) array of uniform pairs of distinct valid pixels."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    valid_linear = np.flatnonzero(depth_map.mask.ravel())
    if valid_linear.size < 2:
        raise CapacityError(f"need >= 2 valid pixels, map has {valid_linear.size}")
    draws = rng.integers(0, valid_linear.size, size=(count, 2))
    while True:
        same = draws[:, 0] == draws[:, 1]
        if not np.any(same):
            break
        draws[same] = rng.integers(0, valid_linear.size, size=(int(same.sum()), 2))
    linear = valid_linear[draws]
    return np.stack(np.divmod(linear, depth_map.width), axis=-1)


def sample_eval_ranking_sets(depth_map: DepthMap, count: int, size: int, rng) -> np.ndarray:
    """(count, size, 2) array of uniform sets of distinct valid pixels."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if size < 2:
        raise ValueError(f"size must be >= 2, got {size}")
    valid_linear = np.flatnonzero(depth_map.mask.ravel())
    if valid_linear.size < size:
        raise CapacityError(
            f"need >= {size} valid pixels for a ranking set, map has {valid_linear.size}"
        )
    linear = np.stack(
        [rng.choice(valid_linear, size=size, replace=False) for _ in range(count)]
    )
    return np.stack(np.divmod(linear, depth_map.width), axis=-1)


@dataclass(frozen=True)
class EvalReport:
    """One evaluation row. pair_count is the number of pairs retained after
    dropping ground-truth ties; delta_excluded counts valid zero-depth pixels
    left out of the ratio metric."""

    ordinal_error: float
    ndcg: float
    rmse: float
    delta_gt_1_25: float
    pair_count: int
    ranking_count: int
    delta_excluded: int

    def __post_init__(self):
        if not (0.0 <= self.ordinal_error <= 1.0):
            raise ValueError(f"ordinal_error out of range: {self.ordinal_error!r}")
        if not (0.0 <= self.ndcg <= 1.0):
            raise ValueError(f"ndcg out of range: {self.ndcg!r}")
        if self.rmse < 0.0:
            raise ValueError(f"rmse must be nonnegative: {self.rmse!r}")
        if not (0.0 <= self.delta_gt_1_25 <= 100.0):
            raise ValueError(f"delta_gt_1_25 out of range: {self.delta_gt_1_25!r}")
        if min(self.pair_count, self.ranking_count, self.delta_excluded) < 0:
            raise ValueError("counts must be nonnegative")


def evaluate(
    pred,
    truth: DepthMap,
    *,
    max_capacity: float | None = None,
    pred_higher_is_closer: bool = False,
    num_pairs: int = 50000,
    num_ranking_sets: int = 100,
    ranking_size: int = 500,
    ndcg_normalized: bool = False,
    rng=None,
) -> EvalReport:
    """Full evaluation with freshly sampled pairs and ranking sets.

    max_capacity defaults to the deepest valid pixel. ndcg_normalized
    computes relevance on truth divided by capacity instead of raw depths;
    the resulting values are comparable only within one regime. RMSE and
    the ratio metric read `pred` as-is, so align score-like predictions to
    metric depth first.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"pred shape {pred.shape} != truth shape {truth.shape}")
    if max_capacity is None:
        if truth.valid_count == 0:
            raise UndefinedMetricError("no valid pixels to evaluate")
        max_capacity = float(truth.values[truth.mask].max())
    pairs = sample_eval_pairs(truth, num_pairs, rng)
    sets = sample_eval_ranking_sets(truth, num_ranking_sets, ranking_size, rng)
    depths = truth.values.astype(np.float64)[pairs[..., 0], pairs[..., 1]]
    retained = int(np.sum(np.sign(depths[:, 0] - depths[:, 1]) != 0))
    ndcg_truth = truth
    if ndcg_normalized:
        ndcg_truth = DepthMap(
            (truth.values / np.float32(max_capacity)).astype(np.float32), truth.mask.copy()
        )
    return EvalReport(
        ordinal_error=ordinal_error(pred, truth, pairs, pred_higher_is_closer),
        ndcg=ndcg(pred, ndcg_truth, sets, pred_higher_is_closer),
        rmse=rmse(pred, truth, max_capacity),
        delta_gt_1_25=delta_metric(pred, truth),
        pair_count=retained,
        ranking_count=len(sets),
        delta_excluded=int(np.sum(truth.mask & (truth.values == 0))),
    )


_CSV_HEADER = "label,ordinal_error,ndcg,rmse,delta_gt_1_25,pair_count,ranking_count,delta_excluded"


def write_report_csv(reports, path) -> None:
    """CSV of labeled EvalReport rows; reports is a sequence of (label, report)."""
    with open(os.fspath(path), "w", encoding="utf-8") as f:
        f.write(_CSV_HEADER + "\n")
        for label, report in reports:
            if "," in label or "\n" in label:
                raise ValueError(f"label {label!r} cannot contain commas or newlines")
            f.write(
                f"{label},{float(report.ordinal_error)!r},{float(report.ndcg)!r},"
                f"{float(report.rmse)!r},{float(report.delta_gt_1_25)!r},"
                f"{report.pair_count},{report.ranking_count},{report.delta_excluded}\n"
            )


def read_report_csv(path) -> list[tuple[str, EvalReport]]:
    from .errors import FormatError

    path = os.fspath(path)
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        if f.readline().strip() != _CSV_HEADER:
            raise FormatError(f"{path}: not an evaluation report CSV")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise FormatError(f"{path}:{lineno}: expected 8 columns, got {len(parts)}")
            try:
                report = EvalReport(
                    ordinal_error=float(parts[1]),
                    ndcg=float(parts[2]),
                    rmse=float(parts[3]),
                    delta_gt_1_25=float(parts[4]),
                    pair_count=int(parts[5]),
                    ranking_count=int(parts[6]),
                    delta_excluded=int(parts[7]),
                )
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed report row") from None
            rows.append((parts[0], report))
    return rows


def format_report_table(reports) -> str:
    """Aligned plain-text table, one row per labeled report."""
    rows = [
        (
            label,
            f"{report.ordinal_error:.4f}",
            f"{report.ndcg:.4f}",
            f"{report.rmse:.4f}",
            f"{report.delta_gt_1_25:.2f}",
        )
        for label, report in reports
    ]
    header = ("model", "ordinal_err", "ndcg", "rmse", "delta>1.25%")
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(5)]
    lines = []
    for row in [header, *rows]:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"
