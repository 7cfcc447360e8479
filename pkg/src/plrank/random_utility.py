"""Random-utility ranking simulator (Thurstone-style).

Observed rankings arise by ordering noisy measurements X_i = z_i + s * eps_i
of latent depths z_i ascending (smallest measured depth ranks first, matching
the closest-first convention used everywhere in this package).

Gumbel noise uses the minimum convention: eps_i is the negation of a standard
(maximum-convention) Gumbel draw. Under unit scale this makes X_i = log T_i
for competing exponential clocks T_i ~ Exp(rate = exp(-z_i)), so the ascending
order of X is distributed exactly as a Plackett-Luce ranking with weights
exp(-z_i). With the maximum convention that identity does not hold; the
choice here is what makes the simulator usable as a PL ground truth.

Gaussian noise is provided as a control: it produces a ranking distribution
that genuinely differs from every PL model once the z_i are well separated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LatentUtilities", "sample_dataset", "sample_ranking"]

NOISE_KINDS = ("gumbel", "gaussian")


@dataclass(frozen=True)
class LatentUtilities:
    """Latent depths plus the noise model corrupting their measurement."""

    values: np.ndarray
    noise_kind: str = "gumbel"
    noise_scale: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise ValueError(f"latent values must be a non-empty 1-D sequence, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("latent values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}, got {self.noise_kind!r}")
        if not (np.isfinite(self.noise_scale) and self.noise_scale > 0):
            raise ValueError(f"noise_scale must be positive, got {self.noise_scale!r}")

    def __len__(self) -> int:
        return self.values.size


def _noise(utilities: LatentUtilities, shape, rng: np.random.Generator) -> np.ndarray:
    if utilities.noise_kind == "gumbel":
        # Minimum-convention Gumbel: negate the standard draw.
        return -rng.gumbel(size=shape)
    return rng.normal(size=shape)


def sample_ranking(utilities: LatentUtilities, rng: np.random.Generator) -> tuple[int, ...]:
    """One noisy ranking: items ordered by measured depth ascending."""
    if len(utilities) < 2:
        raise ValueError("need at least 2 items to rank")
    x = utilities.values + utilities.noise_scale * _noise(utilities, len(utilities), rng)
    return tuple(int(i) for i in np.argsort(x, kind="stable"))


def sample_dataset(utilities: LatentUtilities, count: int, rng: np.random.Generator) -> np.ndarray:
    """`count` i.i.d. rankings as a (count, n) integer array, one row each."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if len(utilities) < 2:
        raise ValueError("need at least 2 items to rank")
    n = len(utilities)
    x = utilities.values[None, :] + utilities.noise_scale * _noise(utilities, (count, n), rng)
    return np.argsort(x, axis=1, kind="stable")
