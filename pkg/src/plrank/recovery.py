"""Metric depth from learned raw scores via a least-squares affine map.

A scorer trained on rankings is identified only up to an additive constant,
and under Gumbel noise its scores track negated log depth rather than depth.
Both gaps close with a single affine transform z_hat = scale * w + shift
fitted against ground truth by least squares over valid pixels. The scale is
left unconstrained: a negative scale absorbs the closer-means-higher-score
sign convention.

rum_recovery_experiment runs the whole loop on a synthetic latent-utility
model: draw noisy rankings, fit free per-item scores by NLL minimization,
align them to the latent values, and report the RMSE. Rankings that all
agree make the NLL minimizer escape to infinity, so training stops once the
score spread passes a fixed limit and the result is flagged instead.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .depth import DepthMap
from .errors import DegenerateFitError, FormatError
from .random_utility import LatentUtilities, sample_dataset
from .sampling import RankingSample
from .training import TabularScorer, TrainConfig, train

__all__ = [
    "AffineFit",
    "RecoveryResult",
    "fit_affine",
    "read_experiment_results",
    "recover_depth",
    "rum_recovery_experiment",
    "write_experiment_results",
]

# log-domain score spread beyond which rankings are treated as non-identifiable
SPREAD_LIMIT = 50.0


@dataclass(frozen=True)
class AffineFit:
    scale: float
    shift: float

    def __post_init__(self):
        if not (np.isfinite(self.scale) and np.isfinite(self.shift)):
            raise ValueError(f"fit must be finite, got ({self.scale!r}, {self.shift!r})")


def fit_affine(predicted, truth, mask=None) -> AffineFit:
    """Least-squares (scale, shift) mapping predicted scores onto truth.

    `truth` is a DepthMap (its mask applies) or a plain array, optionally
    with an explicit boolean mask. Needs two valid pixels and non-constant
    predictions; anything less leaves the normal equations singular.
    """
    pred = np.asarray(predicted, dtype=np.float64)
    if isinstance(truth, DepthMap):
        if mask is not None:
            raise ValueError("mask comes from the DepthMap; do not pass both")
        values = truth.values.astype(np.float64)
        valid = truth.mask
    else:
        values = np.asarray(truth, dtype=np.float64)
        valid = np.ones(values.shape, bool) if mask is None else np.asarray(mask, bool)
    if pred.shape != values.shape or valid.shape != values.shape:
        raise ValueError(
            f"shape mismatch: predicted {pred.shape}, truth {values.shape}, mask {valid.shape}"
        )
    p = pred[valid]
    z = values[valid]
    if p.size < 2:
        raise DegenerateFitError(f"need >= 2 valid pixels to fit, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise ValueError("predicted values must be finite at valid pixels")
    if np.ptp(p) == 0.0:
        raise DegenerateFitError("constant predictions leave the fit underdetermined")
    centered = p - p.mean()
    denom = float(centered @ centered)
    if denom == 0.0:
        raise DegenerateFitError("constant predictions leave the fit underdetermined")
    scale = float(centered @ (z - z.mean())) / denom
    shift = float(z.mean() - scale * p.mean())
    if not (np.isfinite(scale) and np.isfinite(shift)):
        raise DegenerateFitError("fit overflowed; predictions are near-degenerate")
    return AffineFit(scale, shift)


def recover_depth(scores, fit: AffineFit, floor: float | None = 1e-6) -> np.ndarray:
    """Apply z_hat = scale * w + shift; clamp below at `floor` (None disables).

    `scores` is a raw-score array or any scorer exposing score_grid(). The
    default floor keeps ratio metrics defined; pass None to inspect the raw
    affine image.
    """
    if floor is not None and not (np.isfinite(floor) and floor > 0):
        raise ValueError(f"floor must be positive or None, got {floor!r}")
    grid = scores.score_grid() if hasattr(scores, "score_grid") else None
    if grid is None:
        grid = np.asarray(scores, dtype=np.float64)
    recovered = fit.scale * grid + fit.shift
    if floor is not None:
        recovered = np.maximum(recovered, floor)
    return recovered


@dataclass
class RecoveryResult:
    """Outcome of one ranking-to-metric-depth run.

    `recovered` is the unclamped affine image of the learned scores; `rmse`
    compares it to the latent values. When `non_identifiable` is set the
    observed rankings carry no finite optimum and both numbers are reported
    for completeness only.
    """

    recovered: np.ndarray
    fit: AffineFit
    rmse: float
    non_identifiable: bool
    nll_trace: np.ndarray


def rum_recovery_experiment(
    utilities: LatentUtilities, num_rankings: int, config: TrainConfig, rng
) -> RecoveryResult:
    """Sample rankings, fit per-item scores, align to the latent values."""
    if utilities.noise_kind != "gumbel":
        raise ValueError("recovery analysis holds for gumbel noise only")
    n = len(utilities)
    rankings = sample_dataset(utilities, num_rankings, rng)
    non_identifiable = bool(np.all(rankings == rankings[0]))
    locations = tuple((0, j) for j in range(n))
    samples = [
        RankingSample(locations, tuple(int(i) for i in row), 0.0) for row in rankings
    ]
    result = train(
        TabularScorer.zeros(1, n), samples, config, spread_limit=SPREAD_LIMIT
    )
    weights = result.scorer.weights.ravel()
    if np.ptp(weights) > SPREAD_LIMIT:
        non_identifiable = True
    z = utilities.values.astype(np.float64)
    fit = fit_affine(weights, z)
    # centered residuals: algebraically s*(w) + t - z, but immune to the
    # rounding of large shared offsets, so shifting z shifts nothing here
    residuals = fit.scale * (weights - weights.mean()) - (z - z.mean())
    rmse = float(np.sqrt(np.mean(residuals**2)))
    recovered = recover_depth(weights, fit, floor=None)
    return RecoveryResult(recovered, fit, rmse, non_identifiable, result.nll_trace)


def write_experiment_results(rows, path) -> None:
    """CSV of (num_rankings, seed, rmse) rows."""
    with open(os.fspath(path), "w", encoding="ascii") as f:
        f.write("num_rankings,seed,rmse\n")
        for num_rankings, seed, rmse in rows:
            f.write(f"{int(num_rankings)},{int(seed)},{float(rmse)!r}\n")


def read_experiment_results(path) -> list[tuple[int, int, float]]:
    path = os.fspath(path)
    rows = []
    with open(path, "r", encoding="ascii") as f:
        header = f.readline().strip()
        if header != "num_rankings,seed,rmse":
            raise FormatError(f"{path}: not an experiment results CSV")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                num_rankings, seed, rmse = line.split(",")
                rows.append((int(num_rankings), int(seed), float(rmse)))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed results row") from None
    return rows
