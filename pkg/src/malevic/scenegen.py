"""Symbolic scene construction.

A scene is 5-9 colored shapes on a square canvas.  Sizes are drawn from a
fixed ladder of labels whose squares give the intended pixel areas; real
valued dimensions for each shape are solved from that area.  Scenes are
produced by rejection sampling: attribute draws that violate the task's
query constraints (or land on the wrong truth value) are thrown away, so
accepted scenes are uniform over the admissible set for their class.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import semantics

SHAPES = ("circle", "rectangle", "square", "triangle")
COLORS = ("red", "blue", "white", "yellow", "green")
SIZE_LABELS = (30, 40, 50, 60, 70, 80, 90, 100, 110, 120)

CANVAS_SIZE = 1478
MIN_OBJECTS = 5
MAX_OBJECTS = 9

# Queried objects keep away from the ends of the size ladder so that both
# adjectives stay satisfiable regardless of what else lands in the scene.
TARGET_LABEL_MIN = 40
TARGET_LABEL_MAX = 110

RECT_ASPECT_RANGE = (1.5, 3.0)  # width / height, landscape
TRIANGLE_RATIO_RANGE = (0.8, 1.25)  # base / height, isoceles, apex up

# Bounding boxes cover the shape's real extent plus this many pixels on each
# side, giving the rasterizer room to snap footprints to whole pixels.
BBOX_PAD = 2
BBOX_MARGIN = 4  # minimum empty pixels between any two bounding boxes
MAX_OCCUPANCY = 0.5  # total bbox area / canvas area

PLACEMENT_ATTEMPTS = 1000
SCENE_RETRIES = 10000


class SceneGenError(RuntimeError):
    """Base class for scene construction failures."""


class PlacementError(SceneGenError):
    """Could not lay out the scene's bounding boxes without overlap."""


class GenerationExhaustedError(SceneGenError):
    """Rejection sampling hit the retry cap for one class of scene."""

    def __init__(self, message: str, class_target=None):
        super().__init__(message)
        self.class_target = class_target


@dataclass
class SceneObject:
    id: int
    shape: str
    color: str
    size_label: int
    pixel_area: int
    dims: dict[str, float]
    center: tuple[int, int] | None = None
    bbox: tuple[int, int, int, int] | None = None  # x0, y0, x1, y1 (exclusive)


@dataclass
class Scene:
    scene_id: str
    canvas_size: int
    task: str
    rng_seed: int
    objects: list[SceneObject] = field(default_factory=list)

    def object_by_id(self, object_id: int) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(f"no object {object_id} in scene {self.scene_id}")


@dataclass
class SceneDraw:
    """One accepted rejection-sampling outcome: scene, query target, and k."""

    scene: Scene
    target_id: int
    k: semantics.VagueK | None  # None for superlative tasks


def label_area(label: int) -> int:
    """Intended pixel area for a size label."""
    if label not in SIZE_LABELS:
        raise ValueError(f"size label {label} not in {SIZE_LABELS}")
    return label * label


def solve_dimensions(shape: str, pixel_area: int, rng: np.random.Generator) -> dict[str, float]:
    """Solve real-valued dimensions whose geometric area equals pixel_area.

    Rectangles and triangles draw one free aspect parameter from the rng;
    circles and squares are fully determined by the area.
    """
    if pixel_area <= 0:
        raise ValueError(f"pixel_area must be positive, got {pixel_area}")
    if shape == "square":
        return {"side": math.sqrt(pixel_area)}
    if shape == "circle":
        return {"radius": math.sqrt(pixel_area / math.pi)}
    if shape == "rectangle":
        aspect = float(rng.uniform(*RECT_ASPECT_RANGE))
        width = math.sqrt(pixel_area * aspect)
        return {"width": width, "height": pixel_area / width}
    if shape == "triangle":
        ratio = float(rng.uniform(*TRIANGLE_RATIO_RANGE))
        base = math.sqrt(2.0 * pixel_area * ratio)
        return {"base": base, "height": 2.0 * pixel_area / base}
    raise ValueError(f"unknown shape {shape!r}")


def geometric_area(shape: str, dims: dict[str, float]) -> float:
    if shape == "square":
        return dims["side"] ** 2
    if shape == "circle":
        return math.pi * dims["radius"] ** 2
    if shape == "rectangle":
        return dims["width"] * dims["height"]
    if shape == "triangle":
        return dims["base"] * dims["height"] / 2.0
    raise ValueError(f"unknown shape {shape!r}")


def dims_extent(shape: str, dims: dict[str, float]) -> tuple[float, float]:
    """Width and height of the shape's tight axis-aligned extent."""
    if shape == "square":
        return dims["side"], dims["side"]
    if shape == "circle":
        return 2.0 * dims["radius"], 2.0 * dims["radius"]
    if shape == "rectangle":
        return dims["width"], dims["height"]
    if shape == "triangle":
        return dims["base"], dims["height"]
    raise ValueError(f"unknown shape {shape!r}")


def bbox_for(shape: str, dims: dict[str, float], center: tuple[int, int]) -> tuple[int, int, int, int]:
    """Padded integer bounding box around a shape at an integer center."""
    ext_w, ext_h = dims_extent(shape, dims)
    cx, cy = center
    x0 = math.floor(cx - ext_w / 2.0) - BBOX_PAD
    x1 = math.ceil(cx + ext_w / 2.0) + BBOX_PAD
    y0 = math.floor(cy - ext_h / 2.0) - BBOX_PAD
    y1 = math.ceil(cy + ext_h / 2.0) + BBOX_PAD
    return x0, y0, x1, y1


def _boxes_conflict(a: tuple[int, int, int, int], b: tuple[int, int, int, int], margin: int) -> bool:
    return (
        a[0] < b[2] + margin
        and b[0] < a[2] + margin
        and a[1] < b[3] + margin
        and b[1] < a[3] + margin
    )


def place_nonoverlapping(
    objects: list[SceneObject],
    rng: np.random.Generator,
    canvas_size: int = CANVAS_SIZE,
    margin: int = BBOX_MARGIN,
    attempts: int = PLACEMENT_ATTEMPTS,
) -> list[SceneObject]:
    """Assign centers so all padded bounding boxes are inside the canvas and
    pairwise separated by at least `margin` pixels.

    Objects are placed one at a time at uniformly drawn integer centers,
    rerolling on conflict.  Raises PlacementError when an object cannot be
    placed, or immediately when the boxes could not plausibly fit at all.
    """
    total_box_area = 0
    for obj in objects:
        ext_w, ext_h = dims_extent(obj.shape, obj.dims)
        total_box_area += (ext_w + 2 * BBOX_PAD) * (ext_h + 2 * BBOX_PAD)
    if total_box_area > MAX_OCCUPANCY * canvas_size * canvas_size:
        raise PlacementError(
            f"bounding boxes cover {total_box_area:.0f}px^2, more than "
            f"{MAX_OCCUPANCY:.0%} of the canvas"
        )

    placed: list[tuple[int, int, int, int]] = []
    for obj in objects:
        ext_w, ext_h = dims_extent(obj.shape, obj.dims)
        lo_x = math.ceil(ext_w / 2.0) + BBOX_PAD
        hi_x = canvas_size - math.ceil(ext_w / 2.0) - BBOX_PAD
        lo_y = math.ceil(ext_h / 2.0) + BBOX_PAD
        hi_y = canvas_size - math.ceil(ext_h / 2.0) - BBOX_PAD
        if lo_x > hi_x or lo_y > hi_y:
            raise PlacementError(f"object {obj.id} does not fit on the canvas")
        for _ in range(attempts):
            cx = int(rng.integers(lo_x, hi_x + 1))
            cy = int(rng.integers(lo_y, hi_y + 1))
            box = bbox_for(obj.shape, obj.dims, (cx, cy))
            if any(_boxes_conflict(box, other, margin) for other in placed):
                continue
            obj.center = (cx, cy)
            obj.bbox = box
            placed.append(box)
            break
        else:
            raise PlacementError(
                f"object {obj.id} unplaced after {attempts} attempts"
            )
    return objects


def excluded_extreme(value, pool, rule: str) -> bool:
    """Whether a queried value is ruled out as an extreme of `pool`.

    "none" never excludes; "ties" excludes any value matching the pool max
    or min, shared or not; "strict" excludes only the pool's unique max or
    unique min.  `pool` contains the queried value itself.
    """
    if rule == "none":
        return False
    pool_max, pool_min = max(pool), min(pool)
    if rule == "ties":
        return value >= pool_max or value <= pool_min
    if rule == "strict":
        return (value == pool_max and pool.count(pool_max) == 1) or (
            value == pool_min and pool.count(pool_min) == 1
        )
    raise ValueError(f"unknown extreme-exclusion rule {rule!r}")


def _attributes_admissible(task, class_target, shapes, colors, labels, k_value) -> bool:
    """Check all query constraints and the required truth value for one draw.

    The query target is index 0.  Works on bare attribute lists so rejected
    draws never pay for dimension solving or placement.
    """
    t_label = labels[0]
    if not TARGET_LABEL_MIN <= t_label <= TARGET_LABEL_MAX:
        return False

    if task.unique_by == "color":
        if colors.count(class_target.color) != 1:
            return False
    else:  # "color+shape"
        hits = sum(
            1
            for s, c in zip(shapes, colors)
            if s == class_target.shape and c == class_target.color
        )
        if hits != 1:
            return False

    if not task.single_shape and len(set(shapes)) < 2:
        return False

    if task.refset == "shape":
        ref_labels = [l for s, l in zip(shapes, labels) if s == class_target.shape]
    else:
        ref_labels = labels
    if len(ref_labels) < task.min_refset_size:
        return False
    ref_max, ref_min = max(ref_labels), min(ref_labels)
    if ref_max == ref_min:
        return False

    if excluded_extreme(t_label, labels, task.exclude_scene_extremes):
        return False
    if excluded_extreme(t_label, ref_labels, task.exclude_refset_extremes):
        return False

    if task.form == "superlative":
        wants_max = (class_target.adjective == "biggest") == class_target.truth
        extreme = ref_max if wants_max else ref_min
        if t_label != extreme or ref_labels.count(extreme) != 1:
            return False
        # the opposite extreme must also be unique or the superlative
        # question itself is ill-posed for this scene
        other = ref_min if wants_max else ref_max
        if ref_labels.count(other) != 1:
            return False
    else:
        t_area = t_label * t_label
        cut = ref_max * ref_max - k_value * (ref_max * ref_max - ref_min * ref_min)
        is_big = t_area >= cut
        wants_big = (class_target.adjective == "big") == class_target.truth
        if is_big != wants_big:
            return False
    return True


def _query_selection_rate(task, class_target, shapes, labels, config) -> float:
    """Acceptance rate for one admissible draw under the task's
    query-selection profile.

    Queries at the judged-side extreme of their reference set always pass,
    except that for subset reference sets an extreme shared with the whole
    scene's extreme does not count (querying it would be indistinguishable
    from whole-scene reasoning) and is thinned like a far mid-range query.
    Mid-range queries pass at `task.borderline_query_rate` when the
    target's critical coefficient (the k value at which its judgment would
    flip) lies within one sigma of the mean k, and at
    `task.middle_query_rate` otherwise.
    """
    if task.refset == "shape":
        ref_labels = [l for s, l in zip(shapes, labels) if s == class_target.shape]
    else:
        ref_labels = labels
    t_label = labels[0]
    judged_big = (class_target.adjective == "big") == class_target.truth
    extreme = max(ref_labels) if judged_big else min(ref_labels)
    if t_label == extreme:
        scene_extreme = max(labels) if judged_big else min(labels)
        if task.refset == "scene" or t_label != scene_extreme:
            return 1.0
        return task.middle_query_rate
    ref_max, ref_min = max(ref_labels), min(ref_labels)
    max_a, min_a = ref_max * ref_max, ref_min * ref_min
    critical_k = (max_a - t_label * t_label) / (max_a - min_a)
    if abs(critical_k - config.mu) <= config.sigma:
        return task.borderline_query_rate
    return task.middle_query_rate


def sample_scene(
    task,
    class_target,
    rng: np.random.Generator,
    *,
    scene_id: str = "",
    rng_seed: int = 0,
    threshold_config: semantics.ThresholdConfig | None = None,
    retries: int = SCENE_RETRIES,
) -> SceneDraw:
    """Rejection-sample one scene satisfying `class_target` under `task`.

    Every attempt redraws the object count, all attributes, and (for
    positive-form tasks) the judgment coefficient k, so accepted (scene, k)
    pairs follow the joint distribution conditioned on the class.  The
    query target is pinned to the class shape and color; remaining slots
    are uniform, except that mid-range queries are kept only at the task's
    `middle_query_rate`.  Raises GenerationExhaustedError after `retries`
    failures.
    """
    if threshold_config is None:
        threshold_config = semantics.ThresholdConfig()
    positive = task.form == "positive"

    for _ in range(retries):
        n = int(rng.integers(MIN_OBJECTS, MAX_OBJECTS + 1))
        if task.single_shape:
            shapes = [class_target.shape] * n
        else:
            shapes = [SHAPES[i] for i in rng.integers(0, len(SHAPES), size=n)]
            shapes[0] = class_target.shape
        colors = [COLORS[i] for i in rng.integers(0, len(COLORS), size=n)]
        colors[0] = class_target.color
        labels = [SIZE_LABELS[i] for i in rng.integers(0, len(SIZE_LABELS), size=n)]
        k = semantics.sample_k(threshold_config, rng) if positive else None

        if not _attributes_admissible(
            task, class_target, shapes, colors, labels, k.value if k else 0.0
        ):
            continue
        # Mid-range queries are thinned to the task's configured rates, which
        # concentrates queried objects at reference-set extremes while keeping
        # a controlled share of near-threshold cases.
        if positive and (
            task.middle_query_rate < 1.0 or task.borderline_query_rate < 1.0
        ):
            rate = _query_selection_rate(
                task, class_target, shapes, labels, threshold_config
            )
            if rate < 1.0 and rng.random() >= rate:
                continue

        order = [int(i) for i in rng.permutation(n)]
        objects = []
        target_id = -1
        for new_id, old in enumerate(order):
            dims = solve_dimensions(shapes[old], label_area(labels[old]), rng)
            objects.append(
                SceneObject(
                    id=new_id,
                    shape=shapes[old],
                    color=colors[old],
                    size_label=labels[old],
                    pixel_area=label_area(labels[old]),
                    dims=dims,
                )
            )
            if old == 0:
                target_id = new_id
        try:
            place_nonoverlapping(objects, rng)
        except PlacementError:
            continue

        scene = Scene(
            scene_id=scene_id,
            canvas_size=CANVAS_SIZE,
            task=task.name,
            rng_seed=rng_seed,
            objects=objects,
        )
        return SceneDraw(scene=scene, target_id=target_id, k=k)

    raise GenerationExhaustedError(
        f"no admissible scene for {class_target} in task {task.name} "
        f"after {retries} attempts",
        class_target=class_target,
    )
