"""Differentiable pixel scorers trained by ranking negative log-likelihood.

Two scorers bracket the memorization/generalization spectrum:

* TabularScorer: one free score per pixel of an H x W grid.
* LinearFeatureScorer: four coefficients over the fixed per-pixel features
  (row / (H-1), col / (W-1), distance-from-center / max-distance, 1).

Training minimizes the mean ranking NLL over samples with mini-batch SGD or
Adam. The gradient of a batch is the mean of the per-ranking gradients,
chained through the scorer (a scatter-add for the tabular scorer, a feature
dot product for the linear one). Both scorers initialize at zero: the NLL is
invariant under adding a constant to all scores, so zero is as good as any
constant and keeps runs reproducible.

train() consumes a fixed sample list. train_resampled() redraws a fresh
sample set from the depth map every epoch, which lets a tabular scorer reach
pixels a fixed set would never touch.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass

import numpy as np

from .depth import DepthMap
from .errors import FormatError
from .plackett_luce import nll_and_gradient_matrix
from .sampling import SamplerConfig, sample_rankings

__all__ = [
    "AdamOptimizer",
    "LinearFeatureScorer",
    "SgdOptimizer",
    "TabularScorer",
    "TrainConfig",
    "TrainResult",
    "load_scorer",
    "read_nll_trace",
    "save_scorer",
    "train",
    "train_resampled",
    "write_nll_trace",
]


def _check_locations(locations, height: int, width: int) -> np.ndarray:
    locs = np.asarray(locations, dtype=np.intp)
    if locs.ndim < 1 or locs.shape[-1] != 2:
        raise ValueError(f"locations must have trailing dimension 2, got shape {locs.shape}")
    rows, cols = locs[..., 0], locs[..., 1]
    if rows.size and (
        rows.min() < 0 or rows.max() >= height or cols.min() < 0 or cols.max() >= width
    ):
        raise ValueError(f"location out of bounds for a {height}x{width} grid")
    return locs


@dataclass
class TabularScorer:
    """Free per-pixel raw scores on an H x W grid."""

    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        if weights.ndim != 2:
            raise ValueError(f"weights must be 2-D, got shape {weights.shape}")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        self.weights = weights

    @classmethod
    def zeros(cls, height: int, width: int) -> "TabularScorer":
        return cls(np.zeros((height, width)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    @property
    def parameters(self) -> np.ndarray:
        return self.weights

    def scores_at(self, locations) -> np.ndarray:
        locs = _check_locations(locations, *self.weights.shape)
        return self.weights[locs[..., 0], locs[..., 1]]

    def score_grid(self) -> np.ndarray:
        return self.weights.copy()

    def parameter_gradient(self, locations, upstream) -> np.ndarray:
        locs = _check_locations(locations, *self.weights.shape)
        height, width = self.weights.shape
        linear = (locs[..., 0] * width + locs[..., 1]).ravel()
        grad = np.bincount(linear, weights=np.ravel(upstream), minlength=height * width)
        return grad.reshape(height, width)


@dataclass
class LinearFeatureScorer:
    """Scores as a dot product of shared coefficients with per-pixel features.

    Feature order: normalized row, normalized col, normalized radial distance
    from the grid center, constant bias.
    """

    coefficients: np.ndarray
    height: int
    width: int

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=np.float64)
        if coefficients.shape != (4,):
            raise ValueError(f"coefficients must have shape (4,), got {coefficients.shape}")
        if not np.all(np.isfinite(coefficients)):
            raise ValueError("coefficients must be finite")
        if self.height < 1 or self.width < 1:
            raise ValueError(f"grid dimensions must be positive, got {self.height}x{self.width}")
        self.coefficients = coefficients

    @classmethod
    def zeros(cls, height: int, width: int) -> "LinearFeatureScorer":
        return cls(np.zeros(4), height, width)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def parameters(self) -> np.ndarray:
        return self.coefficients

    def features(self, locations) -> np.ndarray:
        locs = _check_locations(locations, self.height, self.width)
        rows = locs[..., 0].astype(np.float64)
        cols = locs[..., 1].astype(np.float64)
        center_r, center_c = (self.height - 1) / 2, (self.width - 1) / 2
        max_dist = np.hypot(center_r, center_c)
        feats = np.empty(locs.shape[:-1] + (4,))
        feats[..., 0] = rows / max(self.height - 1, 1)
        feats[..., 1] = cols / max(self.width - 1, 1)
        feats[..., 2] = np.hypot(rows - center_r, cols - center_c) / max(max_dist, 1e-12)
        feats[..., 3] = 1.0
        return feats

    def scores_at(self, locations) -> np.ndarray:
        return self.features(locations) @ self.coefficients

    def score_grid(self) -> np.ndarray:
        rows, cols = np.mgrid[0 : self.height, 0 : self.width]
        return self.scores_at(np.stack([rows, cols], axis=-1))

    def parameter_gradient(self, locations, upstream) -> np.ndarray:
        feats = self.features(locations)
        up = np.asarray(upstream, dtype=np.float64)
        return feats.reshape(-1, 4).T @ up.reshape(-1)


@dataclass(frozen=True)
class TrainConfig:
    """Optimization knobs. batch_size None means full batch."""

    epochs: int = 200
    learning_rate: float = 0.1
    batch_size: int | None = None
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if not (np.isfinite(self.learning_rate) and self.learning_rate >= 0):
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate!r}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")


class SgdOptimizer:
    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        params -= self.learning_rate * grad


class AdamOptimizer:
    def __init__(self, learning_rate: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.step_count = 0
        self.first_moment = None
        self.second_moment = None

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        if self.first_moment is None:
            self.first_moment = np.zeros_like(params)
            self.second_moment = np.zeros_like(params)
        self.step_count += 1
        self.first_moment = self.beta1 * self.first_moment + (1 - self.beta1) * grad
        self.second_moment = self.beta2 * self.second_moment + (1 - self.beta2) * grad * grad
        m_hat = self.first_moment / (1 - self.beta1**self.step_count)
        v_hat = self.second_moment / (1 - self.beta2**self.step_count)
        params -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def _make_optimizer(config: TrainConfig):
    if config.optimizer == "sgd":
        return SgdOptimizer(config.learning_rate)
    return AdamOptimizer(config.learning_rate)


@dataclass
class TrainResult:
    """Trained scorer plus the NLL trace (entry 0 = before any update)."""

    scorer: object
    nll_trace: np.ndarray


def _ordered_locations(sample) -> np.ndarray:
    locs = np.asarray(sample.locations, dtype=np.intp)
    order = np.asarray(sample.ground_truth, dtype=np.intp)
    n = locs.shape[0]
    if n < 2:
        raise ValueError("every training sample needs a ranking of length >= 2")
    if order.shape != (n,) or np.unique(order).size != n or order.min() < 0 or order.max() >= n:
        raise ValueError("sample ground_truth must be a permutation of its locations")
    return locs[order]


def _group_by_length(samples) -> list[np.ndarray]:
    """Stack position-ordered location arrays, one (m, n, 2) block per length n."""
    if not samples:
        raise ValueError("need at least one training sample")
    by_length: dict[int, list[np.ndarray]] = {}
    for sample in samples:
        ordered = _ordered_locations(sample)
        by_length.setdefault(ordered.shape[0], []).append(ordered)
    return [np.stack(by_length[n]) for n in sorted(by_length)]


def _mean_nll(scorer, groups: list[np.ndarray]) -> float:
    total = 0.0
    count = 0
    for block in groups:
        nll, _ = nll_and_gradient_matrix(scorer.scores_at(block))
        total += float(nll.sum())
        count += block.shape[0]
    return total / count


def _batch_step(scorer, optimizer, blocks: list[np.ndarray]) -> float:
    """One optimizer step; returns the mean NLL at the pre-step parameters."""
    grad = np.zeros_like(scorer.parameters)
    total = 0.0
    count = 0
    for block in blocks:
        if block.shape[0] == 0:
            continue
        nll, upstream = nll_and_gradient_matrix(scorer.scores_at(block))
        total += float(nll.sum())
        grad += scorer.parameter_gradient(block, upstream)
        count += block.shape[0]
    if count:
        optimizer.step(scorer.parameters, grad / count)
        return total / count
    return np.nan


def train(scorer, samples, config: TrainConfig, spread_limit: float | None = None) -> TrainResult:
    """Fit a copy of `scorer` to a fixed sample list; returns it with the NLL trace.

    spread_limit, when set, stops training as soon as max - min of the
    parameters exceeds it (guard for non-identifiable data, where the NLL
    has no finite minimizer and scores diverge).
    """
    groups = _group_by_length(samples)
    trained = copy.deepcopy(scorer)
    optimizer = _make_optimizer(config)
    rng = np.random.default_rng(config.seed)
    num = sum(block.shape[0] for block in groups)
    batch_size = min(config.batch_size or num, num)
    trace: list[float] = []
    if batch_size == num:
        # full batch: the step's pre-update NLL equals the previous epoch's
        # post-update NLL, so one pass per epoch covers both
        for _ in range(config.epochs):
            trace.append(_batch_step(trained, optimizer, groups))
            if spread_limit is not None and np.ptp(trained.parameters) > spread_limit:
                break
        trace.append(_mean_nll(trained, groups))
    else:
        # flat index -> (group, row) lookup used for mini-batch slicing
        group_ids = np.concatenate([np.full(b.shape[0], g) for g, b in enumerate(groups)])
        row_ids = np.concatenate([np.arange(b.shape[0]) for b in groups])
        trace.append(_mean_nll(trained, groups))
        for _ in range(config.epochs):
            order = rng.permutation(num)
            for start in range(0, num, batch_size):
                batch = order[start : start + batch_size]
                blocks = [
                    groups[g][row_ids[batch[group_ids[batch] == g]]] for g in range(len(groups))
                ]
                _batch_step(trained, optimizer, blocks)
            trace.append(_mean_nll(trained, groups))
            if spread_limit is not None and np.ptp(trained.parameters) > spread_limit:
                break
    return TrainResult(trained, np.asarray(trace))


def train_resampled(
    scorer,
    depth_map: DepthMap,
    sampler_config: SamplerConfig,
    config: TrainConfig,
    spread_limit: float | None = None,
    threads: int = 1,
) -> TrainResult:
    """Like train(), but draws a fresh sample set from the map every epoch.

    Trace entry e is the NLL of epoch e's fresh samples under the parameters
    entering that epoch (entry 0 = initial scorer); the final entry is the
    post-update NLL on the last epoch's samples.
    """
    trained = copy.deepcopy(scorer)
    optimizer = _make_optimizer(config)
    rng = np.random.default_rng(config.seed)
    trace: list[float] = []
    groups: list[np.ndarray] = []
    for _ in range(config.epochs):
        samples = sample_rankings(depth_map, sampler_config, rng, threads=threads)
        groups = _group_by_length(samples)
        num = sum(block.shape[0] for block in groups)
        batch_size = min(config.batch_size or num, num)
        if batch_size == num:
            trace.append(_batch_step(trained, optimizer, groups))
        else:
            group_ids = np.concatenate([np.full(b.shape[0], g) for g, b in enumerate(groups)])
            row_ids = np.concatenate([np.arange(b.shape[0]) for b in groups])
            trace.append(_mean_nll(trained, groups))
            order = rng.permutation(num)
            for start in range(0, num, batch_size):
                batch = order[start : start + batch_size]
                blocks = [
                    groups[g][row_ids[batch[group_ids[batch] == g]]] for g in range(len(groups))
                ]
                _batch_step(trained, optimizer, blocks)
        if spread_limit is not None and np.ptp(trained.parameters) > spread_limit:
            break
    if groups:
        trace.append(_mean_nll(trained, groups))
    # epochs == 0 draws no samples, so the trace is empty rather than padded
    return TrainResult(trained, np.asarray(trace))


# ------------------------------------------------------------- serialization


def save_scorer(scorer, path, little_endian: bool = True) -> None:
    """TabularScorer -> PFM of weights; LinearFeatureScorer -> 4-line text file."""
    from .pfm import write_pfm_values

    if isinstance(scorer, TabularScorer):
        write_pfm_values(scorer.weights, path, little_endian)
    elif isinstance(scorer, LinearFeatureScorer):
        with open(os.fspath(path), "w", encoding="ascii") as f:
            for value in scorer.coefficients:
                f.write(f"{float(value)!r}\n")
    else:
        raise ValueError(f"cannot serialize scorer of type {type(scorer).__name__}")


def load_scorer(path, height: int | None = None, width: int | None = None):
    """Inverse of save_scorer. Linear scorers need the grid shape supplied."""
    from .pfm import read_pfm_values

    path = os.fspath(path)
    with open(path, "rb") as f:
        magic = f.read(2)
    if magic == b"Pf":
        values, _ = read_pfm_values(path)
        return TabularScorer(values.astype(np.float64))
    with open(path, "r", encoding="ascii") as f:
        lines = [line.strip() for line in f if line.strip()]
    if len(lines) != 4:
        raise FormatError(f"{path}: expected 4 coefficient lines, got {len(lines)}")
    try:
        coefficients = np.array([float(line) for line in lines])
    except ValueError:
        raise FormatError(f"{path}: malformed coefficient line") from None
    if height is None or width is None:
        raise ValueError("loading a linear scorer requires the grid height and width")
    return LinearFeatureScorer(coefficients, height, width)


def write_nll_trace(trace, path) -> None:
    """CSV with columns epoch, mean_nll; epoch 0 is the pre-training loss."""
    with open(os.fspath(path), "w", encoding="ascii") as f:
        f.write("epoch,mean_nll\n")
        for epoch, value in enumerate(np.asarray(trace, dtype=np.float64)):
            f.write(f"{epoch},{float(value)!r}\n")


def read_nll_trace(path) -> np.ndarray:
    path = os.fspath(path)
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().strip()
        if header != "epoch,mean_nll":
            raise FormatError(f"{path}: not an NLL trace CSV")
        values = []
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                epoch, value = line.split(",")
                if int(epoch) != len(values):
                    raise ValueError
                values.append(float(value))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed trace row") from None
    return np.asarray(values)
