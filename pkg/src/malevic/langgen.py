"""Sentence generation over scenes.

Each datapoint is a seven-word verification sentence about one object:

    The {color} {shape} is a {big|small} {head}        (positive form)
    The {color} {shape} is the {biggest|smallest} {head}  (superlative form)

where the head noun is either the target's shape word or the literal
"object".  Sentences come in sibling pairs sharing a scene: the true
sentence and its false twin, which differs only in the flipped adjective.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import scenegen, semantics

POSITIVE_ADJECTIVES = ("big", "small")
SUPERLATIVE_ADJECTIVES = ("biggest", "smallest")

FLIP = {
    "big": "small",
    "small": "big",
    "biggest": "smallest",
    "smallest": "biggest",
}

OBJECT_HEAD = "object"


class LangGenError(ValueError):
    """Raised when a requested sentence cannot be produced for a scene."""


@dataclass(frozen=True)
class QueryConstraints:
    """What makes an object fair game as the subject of a sentence."""

    unique_by: str = "color"  # "color" | "color+shape"
    area_window: tuple[int, int] = (
        scenegen.TARGET_LABEL_MIN**2,
        scenegen.TARGET_LABEL_MAX**2,
    )
    # Extreme-exclusion rules; see scenegen.excluded_extreme.
    not_scene_extreme: str = "none"  # "none" | "strict" | "ties"
    not_refset_extreme: str = "none"
    min_refset_size: int = 1


@dataclass(frozen=True)
class SentenceRecord:
    """One realized sentence with its recorded ground truth."""

    text: str
    target_id: int
    target_color: str
    target_shape: str
    head_noun: str
    adjective: str
    form: str  # "positive" | "superlative"
    truth: bool
    k_used: float | None  # None for superlative form
    threshold_used: float | None


def realize_text(color: str, shape: str, adjective: str, head: str) -> str:
    """Render the fixed seven-word template."""
    if color not in scenegen.COLORS:
        raise LangGenError(f"unknown color {color!r}")
    if shape not in scenegen.SHAPES:
        raise LangGenError(f"unknown shape {shape!r}")
    if adjective in POSITIVE_ADJECTIVES:
        article = "a"
    elif adjective in SUPERLATIVE_ADJECTIVES:
        article = "the"
    else:
        raise LangGenError(f"unknown adjective {adjective!r}")
    return f"The {color} {shape} is {article} {adjective} {head}"


def head_noun_for(task, shape: str) -> str:
    """The head noun a task uses when querying an object of this shape."""
    return OBJECT_HEAD if task.head_rule == "object" else shape


def reference_set_for(task, scene: scenegen.Scene, shape: str) -> semantics.ReferenceSet:
    """The comparison class a task judges against: whole scene or same-shape."""
    if task.refset == "shape":
        return semantics.restrict(scene, shape)
    return semantics.whole_scene(scene)


def eligible_targets(scene: scenegen.Scene, task) -> list[int]:
    """All object ids that may be queried in this scene under this task.

    An object qualifies when it is uniquely describable (by color alone in
    single-shape scenes, by color+shape otherwise), its area sits inside
    the query window, its reference set is large enough and not degenerate,
    and it avoids whatever extremes the task rules out — only unique
    extremes under the "strict" rule, shared ones too under "ties".
    """
    cons = task.constraints
    scene_areas = [obj.pixel_area for obj in scene.objects]
    out = []
    for obj in scene.objects:
        if cons.unique_by == "color":
            if sum(1 for o in scene.objects if o.color == obj.color) != 1:
                continue
        else:
            if (
                sum(
                    1
                    for o in scene.objects
                    if o.color == obj.color and o.shape == obj.shape
                )
                != 1
            ):
                continue
        if not cons.area_window[0] <= obj.pixel_area <= cons.area_window[1]:
            continue
        if task.refset == "shape":
            ref_areas = [o.pixel_area for o in scene.objects if o.shape == obj.shape]
        else:
            ref_areas = scene_areas
        if len(ref_areas) < cons.min_refset_size:
            continue
        if max(ref_areas) == min(ref_areas):
            continue
        if scenegen.excluded_extreme(obj.pixel_area, scene_areas, cons.not_scene_extreme):
            continue
        if scenegen.excluded_extreme(obj.pixel_area, ref_areas, cons.not_refset_extreme):
            continue
        if task.form == "superlative":
            # both extremes must be unique for the question to be well posed
            if ref_areas.count(max(ref_areas)) > 1 or ref_areas.count(min(ref_areas)) > 1:
                continue
        out.append(obj.id)
    return out


def generate_positive(
    scene: scenegen.Scene,
    target_id: int,
    task,
    k: semantics.VagueK,
) -> tuple[SentenceRecord, SentenceRecord]:
    """Build the (true, false) positive-form sibling pair for one target.

    The false sentence is the true one with the adjective flipped; nothing
    else changes, so the pair differs in exactly one word.
    """
    if target_id not in eligible_targets(scene, task):
        raise LangGenError(
            f"object {target_id} is not a licensed query target in "
            f"scene {scene.scene_id} for task {task.name}"
        )
    target = scene.object_by_id(target_id)
    ref = reference_set_for(task, scene, target.shape)
    judgment = semantics.judge(target_id, ref, k)
    true_adj = "big" if judgment.is_big else "small"
    head = head_noun_for(task, target.shape)

    def record(adjective: str, truth: bool) -> SentenceRecord:
        return SentenceRecord(
            text=realize_text(target.color, target.shape, adjective, head),
            target_id=target_id,
            target_color=target.color,
            target_shape=target.shape,
            head_noun=head,
            adjective=adjective,
            form="positive",
            truth=truth,
            k_used=k.value,
            threshold_used=judgment.threshold,
        )

    return record(true_adj, True), record(FLIP[true_adj], False)


def generate_superlative(
    scene: scenegen.Scene,
    target_id: int,
    task,
) -> tuple[SentenceRecord, SentenceRecord]:
    """Build the (true, false) superlative-form sibling pair for one target.

    The target must be the unique biggest or unique smallest member of its
    reference set; the false sibling claims the opposite superlative.
    """
    if target_id not in eligible_targets(scene, task):
        raise LangGenError(
            f"object {target_id} is not a licensed query target in "
            f"scene {scene.scene_id} for task {task.name}"
        )
    target = scene.object_by_id(target_id)
    ref = reference_set_for(task, scene, target.shape)
    biggest, smallest = semantics.superlative(ref)
    if target_id == biggest:
        true_adj = "biggest"
    elif target_id == smallest:
        true_adj = "smallest"
    else:
        raise LangGenError(
            f"object {target_id} is neither extreme of its reference set "
            f"in scene {scene.scene_id}"
        )
    head = head_noun_for(task, target.shape)

    def record(adjective: str, truth: bool) -> SentenceRecord:
        return SentenceRecord(
            text=realize_text(target.color, target.shape, adjective, head),
            target_id=target_id,
            target_color=target.color,
            target_shape=target.shape,
            head_noun=head,
            adjective=adjective,
            form="superlative",
            truth=truth,
            k_used=None,
            threshold_used=None,
        )

    return record(true_adj, True), record(FLIP[true_adj], False)
