"""Threshold semantics for gradable size adjectives.

An object counts as "big" relative to a reference set when its area clears
a cutoff placed inside the set's size range:

    T = max_area - k * (max_area - min_area)

with k in (0, 0.5) so the cutoff always sits in the upper half of the range.
Scenes are judged with a per-scene k drawn from a truncated normal; the
distribution's center (k = 0.29) doubles as the "sharp" observer used to
score how often noisy ground truth disagrees with the modal judgment.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SHARP_K = 0.29

K_MU = 0.29
K_SIGMA = 0.066
K_LOW = 0.01
K_HIGH = 0.49

MAX_K_REDRAWS = 100


class SemanticsError(ValueError):
    """Base class for judgment-layer failures."""


class DegenerateReferenceError(SemanticsError):
    """Reference set has max_area == min_area, so no threshold exists."""


class SuperlativeTieError(SemanticsError):
    """The strict maximum or minimum of a reference set is not unique."""


class EmptyReferenceError(SemanticsError):
    """A reference set restriction produced no objects."""


class ObjectNotInReferenceError(SemanticsError):
    """Judged object is not a member of the reference set."""


class KSamplingError(RuntimeError):
    """Truncated-normal sampler failed to land inside (k_low, k_high)."""


@dataclass(frozen=True)
class ThresholdConfig:
    """Parameters of the truncated-normal k sampler."""

    mu: float = K_MU
    sigma: float = K_SIGMA
    k_low: float = K_LOW
    k_high: float = K_HIGH

    def __post_init__(self) -> None:
        if not 0.0 < self.k_low < self.k_high < 0.5:
            raise ValueError(
                f"k bounds must satisfy 0 < low < high < 0.5, "
                f"got ({self.k_low}, {self.k_high})"
            )
        if not self.k_low < self.mu < self.k_high:
            raise ValueError(f"mu={self.mu} outside ({self.k_low}, {self.k_high})")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class VagueK:
    """A realized threshold coefficient plus how it was obtained."""

    value: float
    source: str = "sampled"  # "sampled" | "sharp" | "fixed"

    def __post_init__(self) -> None:
        if not 0.0 < self.value < 0.5:
            raise ValueError(f"k must lie in (0, 0.5), got {self.value}")


def sharp_k() -> VagueK:
    """The distribution mode, used as the noise-free reference observer."""
    return VagueK(SHARP_K, source="sharp")


def fixed_k(value: float) -> VagueK:
    return VagueK(float(value), source="fixed")


def sample_k(config: ThresholdConfig, rng: np.random.Generator) -> VagueK:
    """Draw k ~ Normal(mu, sigma) truncated to (k_low, k_high) by redrawing.

    Rejection keeps the shape of the normal inside the window.  With the
    default parameters one draw lands inside the window >99.8% of the time,
    so hitting the redraw cap means the generator is broken, not unlucky.
    """
    for _ in range(MAX_K_REDRAWS):
        value = float(rng.normal(config.mu, config.sigma))
        if config.k_low < value < config.k_high:
            return VagueK(value, source="sampled")
    raise KSamplingError(
        f"no draw inside ({config.k_low}, {config.k_high}) "
        f"after {MAX_K_REDRAWS} attempts"
    )


@dataclass(frozen=True)
class ReferenceSet:
    """The comparison class a size judgment is made against."""

    object_ids: tuple[int, ...]
    areas: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.object_ids) == 0:
            raise EmptyReferenceError("reference set must contain objects")
        if len(self.object_ids) != len(self.areas):
            raise ValueError("object_ids and areas must align")

    @property
    def max_area(self) -> int:
        return max(self.areas)

    @property
    def min_area(self) -> int:
        return min(self.areas)

    def area_of(self, object_id: int) -> int:
        try:
            return self.areas[self.object_ids.index(object_id)]
        except ValueError:
            raise ObjectNotInReferenceError(
                f"object {object_id} not in reference set {self.object_ids}"
            ) from None


def whole_scene(scene) -> ReferenceSet:
    """Reference set spanning every object in the scene."""
    return ReferenceSet(
        object_ids=tuple(obj.id for obj in scene.objects),
        areas=tuple(obj.pixel_area for obj in scene.objects),
    )


def restrict(scene, shape: str) -> ReferenceSet:
    """Reference set of all objects in the scene with the given shape."""
    members = [obj for obj in scene.objects if obj.shape == shape]
    if not members:
        raise EmptyReferenceError(f"no {shape!r} objects in scene {scene.scene_id}")
    return ReferenceSet(
        object_ids=tuple(obj.id for obj in members),
        areas=tuple(obj.pixel_area for obj in members),
    )


def threshold(ref: ReferenceSet, k: VagueK) -> float:
    """Cutoff area: anything at or above it counts as big."""
    if ref.max_area == ref.min_area:
        raise DegenerateReferenceError(
            f"degenerate reference set, all areas equal {ref.max_area}"
        )
    return ref.max_area - k.value * (ref.max_area - ref.min_area)


@dataclass(frozen=True)
class SizeJudgment:
    """Outcome of judging one object against a reference set."""

    object_id: int
    is_big: bool
    threshold: float
    k: float
    norm_distance: float  # (area - threshold) / (max - min), sign matches is_big


def judge(object_id: int, ref: ReferenceSet, k: VagueK) -> SizeJudgment:
    """Judge whether an object is big relative to `ref` under coefficient k.

    The boundary is inclusive: area == threshold counts as big.  "Small" is
    the complement, so every judged object is exactly one of the two.
    """
    area = ref.area_of(object_id)
    cut = threshold(ref, k)
    distance = (area - cut) / (ref.max_area - ref.min_area)
    return SizeJudgment(
        object_id=object_id,
        is_big=area >= cut,
        threshold=cut,
        k=k.value,
        norm_distance=distance,
    )


def superlative(ref: ReferenceSet) -> tuple[int, int]:
    """Return (biggest_id, smallest_id), requiring both extremes be unique."""
    if ref.max_area == ref.min_area:
        raise DegenerateReferenceError(
            f"degenerate reference set, all areas equal {ref.max_area}"
        )
    if ref.areas.count(ref.max_area) > 1:
        raise SuperlativeTieError(f"maximum area {ref.max_area} is tied")
    if ref.areas.count(ref.min_area) > 1:
        raise SuperlativeTieError(f"minimum area {ref.min_area} is tied")
    biggest = ref.object_ids[ref.areas.index(ref.max_area)]
    smallest = ref.object_ids[ref.areas.index(ref.min_area)]
    return biggest, smallest
