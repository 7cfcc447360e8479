"""Informativeness-guided sampling of ranking sets from a depth map.

A candidate set of n valid pixel locations is scored by how much depth
structure it exposes: with the set's depths sorted ascending d_1 <= ... <= d_n,

    informativeness = sum_i (d_{i+1} - d_i)  +  penalty * #ambiguous pairs,

where an adjacent pair is ambiguous when max(d_{i+1}/d_i, d_i/d_{i+1}) < 1 + tau.
Two zero depths count as ambiguous (ratio 1); a zero against a positive depth
never does (ratio +inf). With tau = 0 no pair is ever ambiguous and the score
reduces to the plain spread. The default penalty of -10 pushes near-equal
depths out of the selection.

sample_rankings draws N*R candidate sets uniformly over valid pixels (without
replacement within a set), scores all of them, and keeps the R highest. Exact
depth ties inside a set are ordered by ascending linearized pixel index so the
ground-truth ranking is always total.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .depth import DepthMap
from .errors import CapacityError, FormatError

__all__ = [
    "RankingSample",
    "SamplerConfig",
    "read_samples",
    "sample_rankings",
    "score_candidate",
    "write_samples",
]


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs of the candidate sampler; defaults follow the evaluation protocol."""

    ranking_size: int = 5
    rankings_per_image: int = 400
    oversample_factor: int = 5
    tau: float = 0.03
    penalty: float = -10.0

    def __post_init__(self):
        if self.ranking_size < 2:
            raise ValueError(f"ranking_size must be >= 2, got {self.ranking_size}")
        if self.rankings_per_image < 1:
            raise ValueError(f"rankings_per_image must be >= 1, got {self.rankings_per_image}")
        if self.oversample_factor < 2:
            raise ValueError(f"oversample_factor must be > 1, got {self.oversample_factor}")
        if not (np.isfinite(self.tau) and self.tau >= 0):
            raise ValueError(f"tau must be a nonnegative real, got {self.tau!r}")
        if not np.isfinite(self.penalty):
            raise ValueError(f"penalty must be finite, got {self.penalty!r}")


@dataclass(frozen=True)
class RankingSample:
    """n locations, their closest-first ground-truth order, and the set's score."""

    locations: tuple[tuple[int, int], ...]
    ground_truth: tuple[int, ...]
    informativeness: float

    def __post_init__(self):
        if len(self.ground_truth) != len(self.locations):
            raise ValueError("ground_truth and locations must have equal length")


def _informativeness(sorted_depths: np.ndarray, tau: float, penalty: float) -> np.ndarray:
    # sorted_depths: (m, n) ascending along axis 1, float64
    upper = sorted_depths[:, 1:]
    lower = sorted_depths[:, :-1]
    spread = np.sum(upper - lower, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(upper == lower, 1.0, np.where(lower == 0.0, np.inf, upper / lower))
    ambiguous = np.sum(ratio < 1.0 + tau, axis=1)
    return spread + penalty * ambiguous


def score_candidate(locations, depth_map: DepthMap, config: SamplerConfig):
    """Ground-truth ranking (closest first) and informativeness of one set.

    The ranking is a permutation of positions into `locations`; exact depth
    ties are broken by ascending linearized pixel index.
    """
    locs = np.asarray(locations, dtype=np.intp)
    if locs.ndim != 2 or locs.shape[1] != 2 or locs.shape[0] < 2:
        raise ValueError(f"locations must be an (n>=2, 2) sequence, got shape {locs.shape}")
    rows, cols = locs[:, 0], locs[:, 1]
    H, W = depth_map.values.shape
    if rows.min() < 0 or rows.max() >= H or cols.min() < 0 or cols.max() >= W:
        raise ValueError("location out of bounds")
    linear = rows * W + cols
    if np.unique(linear).size != linear.size:
        raise ValueError("locations must be distinct")
    if not depth_map.mask[rows, cols].all():
        bad = locs[~depth_map.mask[rows, cols]][0]
        raise ValueError(f"location ({bad[0]}, {bad[1]}) is masked invalid")
    depths = depth_map.values[rows, cols].astype(np.float64)
    order = np.lexsort((linear, depths))
    info = _informativeness(depths[order][None, :], config.tau, config.penalty)[0]
    return tuple(int(i) for i in order), float(info)


def _draw_candidate_sets(num_sets: int, population: int, size: int, rng) -> np.ndarray:
    """(num_sets, size) indices into [0, population), distinct within each row.

    Rows are drawn with replacement and rows containing duplicates are redrawn,
    which is uniform over distinct tuples and much faster than per-row choice
    when size << population.
    """
    idx = rng.integers(0, population, size=(num_sets, size))
    while True:
        sorted_rows = np.sort(idx, axis=1)
        bad = np.flatnonzero((sorted_rows[:, 1:] == sorted_rows[:, :-1]).any(axis=1))
        if bad.size == 0:
            return idx
        idx[bad] = rng.integers(0, population, size=(bad.size, size))


def _score_sets(depths: np.ndarray, config: SamplerConfig):
    # depths: (m, n) float64, columns already in ascending-linear-index order
    order = np.argsort(depths, axis=1, kind="stable")
    sorted_depths = np.take_along_axis(depths, order, axis=1)
    info = _informativeness(sorted_depths, config.tau, config.penalty)
    return order, info


def sample_rankings(
    depth_map: DepthMap, config: SamplerConfig, rng: np.random.Generator, threads: int = 1
) -> list[RankingSample]:
    """Draw N*R candidate sets, keep the R most informative (descending)."""
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    n = config.ranking_size
    valid_linear = np.flatnonzero(depth_map.mask.ravel())
    if valid_linear.size < n:
        raise CapacityError(
            f"map has {valid_linear.size} valid pixels, need at least {n} for one ranking"
        )
    total = config.oversample_factor * config.rankings_per_image
    draws = _draw_candidate_sets(total, valid_linear.size, n, rng)
    # canonical within-set order: ascending linear index, so that the stable
    # depth sort breaks exact ties by pixel index
    linear = np.sort(valid_linear[draws], axis=1)
    depths = depth_map.values.ravel().astype(np.float64)[linear]
    if threads == 1 or total < 2 * threads:
        order, info = _score_sets(depths, config)
    else:
        chunks = np.array_split(np.arange(total), threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _score_sets(depths[c], config), chunks))
        order = np.concatenate([p[0] for p in parts], axis=0)
        info = np.concatenate([p[1] for p in parts], axis=0)
    keep = np.argsort(-info, kind="stable")[: config.rankings_per_image]
    width = depth_map.values.shape[1]
    samples = []
    for i in keep:
        rows, cols = np.divmod(linear[i], width)
        samples.append(
            RankingSample(
                locations=tuple((int(r), int(c)) for r, c in zip(rows, cols)),
                ground_truth=tuple(int(j) for j in order[i]),
                informativeness=float(info[i]),
            )
        )
    return samples


def write_samples(samples, path) -> None:
    """One sample per line: `row,col;row,col;... | informativeness`, closest first."""
    with open(os.fspath(path), "w", encoding="ascii") as f:
        for sample in samples:
            ordered = (sample.locations[j] for j in sample.ground_truth)
            locs = ";".join(f"{r},{c}" for r, c in ordered)
            f.write(f"{locs} | {sample.informativeness!r}\n")


def read_samples(path) -> list[RankingSample]:
    """Parse the line format written by write_samples."""
    samples = []
    path = os.fspath(path)
    with open(path, "r", encoding="ascii") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                locs_part, info_part = line.split("|")
                locations = tuple(
                    (int(r), int(c))
                    for r, c in (pair.split(",") for pair in locs_part.strip().split(";"))
                )
                informativeness = float(info_part.strip())
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed ranking-sample line") from None
            if len(locations) < 2:
                raise FormatError(f"{path}:{lineno}: ranking needs at least 2 locations")
            samples.append(
                RankingSample(
                    locations=locations,
                    ground_truth=tuple(range(len(locations))),
                    informativeness=informativeness,
                )
            )
    return samples
