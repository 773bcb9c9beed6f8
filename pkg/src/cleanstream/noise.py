"""Symmetric label-noise injection with per-batch noise levels.

Noise is label-only and independent of features and classes: a batch-level
fraction is drawn from a clamped normal, and exactly that fraction of the
batch (rounded) gets its given label flipped to a uniformly random *other*
class. ``true_label`` is never touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import Batch


@dataclass(frozen=True)
class NoiseSpec:
    """Distribution of per-batch noise levels.

    ``std_dev`` is read as a fraction of ``mean_level`` in ``relative`` mode
    (the default, 0.2 of the mean) and as an absolute value in ``absolute``
    mode.
    """

    mean_level: float
    std_dev_mode: str = "relative"
    std_dev: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean_level <= 1.0:
            raise ValueError(f"mean_level must be in [0, 1], got {self.mean_level}")
        if self.std_dev_mode not in ("relative", "absolute"):
            raise ValueError(
                f"std_dev_mode must be 'relative' or 'absolute', got "
                f"{self.std_dev_mode!r}"
            )
        if self.std_dev < 0.0:
            raise ValueError(f"std_dev must be >= 0, got {self.std_dev}")

    @property
    def sigma(self) -> float:
        """Standard deviation actually used when drawing a batch level."""
        if self.std_dev_mode == "relative":
            return self.std_dev * self.mean_level
        return self.std_dev


def draw_batch_noise_level(spec: NoiseSpec, rng) -> float:
    """Draw one batch's noise level: Normal(mean, sigma) clamped into [0, 1]."""
    return float(min(1.0, max(0.0, rng.normal(spec.mean_level, spec.sigma))))


def flip_count(level: float, batch_size: int) -> int:
    """Number of instances to corrupt: level * size, rounded half up."""
    return int(math.floor(level * batch_size + 0.5))


def inject_symmetric_noise(batch: Batch, level: float, num_classes: int, rng) -> Batch:
    """Corrupt exactly ``flip_count(level, |batch|)`` distinct instances in place.

    Each chosen instance's given label becomes a class drawn uniformly from
    the other ``num_classes - 1`` classes, so a flip never reproduces the true
    label. Records the drawn level on the batch and returns it.
    """
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    if not 0.0 <= level <= 1.0:
        raise ValueError(f"noise level must be in [0, 1], got {level}")
    n = len(batch.instances)
    flips = flip_count(level, n)
    if flips:
        chosen = rng.choice(n, size=flips, replace=False)
        for i in chosen:
            inst = batch.instances[int(i)]
            r = int(rng.integers(num_classes - 1))
            inst.given_label = r + 1 if r >= inst.true_label else r
    batch.drawn_noise_level = level
    return batch
