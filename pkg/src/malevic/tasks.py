"""Task definitions.

Four main tasks plus two hard diagnostic variants and the compositional
seen/unseen pair:

    SUP1    superlative, single-shape scenes, whole-scene reference set
    POS1    positive, single-shape scenes, whole-scene reference set
    POS     positive, mixed scenes, head "object", whole-scene reference set
    SETPOS  positive, mixed scenes, head = shape, same-shape reference set

Hard variants exclude queried objects at (tie-inclusive) extremes so that
min/max shortcuts collapse to chance; the compositional tasks restrict
which adjective-shape pairs may occur.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from . import langgen, scenegen


@dataclass(frozen=True)
class ClassKey:
    """One of the balanced record classes: who is asked what, and the answer."""

    shape: str
    color: str
    adjective: str
    truth: bool

    def __str__(self) -> str:
        return f"{self.shape}:{self.color}:{self.adjective}:{str(self.truth).lower()}"

    @classmethod
    def parse(cls, key: str) -> "ClassKey":
        shape, color, adjective, truth = key.split(":")
        return cls(shape=shape, color=color, adjective=adjective, truth=truth == "true")


@dataclass(frozen=True)
class TaskSpec:
    name: str
    form: str  # "positive" | "superlative"
    single_shape: bool
    unique_by: str  # "color" | "color+shape"
    head_rule: str  # "shape" | "object"
    refset: str  # "scene" | "shape"
    min_refset_size: int = 1
    # Extreme-exclusion rules for the queried object: "none", "strict"
    # (only a unique scene/reference-set max or min is barred), or "ties"
    # (any object matching the max or min area is barred, shared or not).
    exclude_scene_extremes: str = "none"
    exclude_refset_extremes: str = "none"
    allowed_pairs: tuple[tuple[str, str], ...] | None = None  # (adjective, shape)
    # Query-selection rates for admissible draws whose queried object is NOT
    # at the judged-side extreme of its reference set (the max when judged
    # big, the min when judged small; ties count as extreme).  Extreme-rank
    # queries are always kept; mid-range queries whose critical coefficient
    # falls within one sigma of the mean k ("borderline" cases, where a
    # resampled k can flip the judgment) are kept at borderline_query_rate,
    # all other mid-range queries at middle_query_rate.  Rates below 1.0
    # concentrate queries at the reference-set extremes; the borderline rate
    # independently controls how much near-threshold mass survives.  Both
    # are calibrated per task to its target distributional profile.
    middle_query_rate: float = 1.0
    borderline_query_rate: float = 1.0

    @property
    def adjectives(self) -> tuple[str, str]:
        if self.form == "superlative":
            return langgen.SUPERLATIVE_ADJECTIVES
        return langgen.POSITIVE_ADJECTIVES

    @property
    def constraints(self) -> langgen.QueryConstraints:
        return langgen.QueryConstraints(
            unique_by=self.unique_by,
            not_scene_extreme=self.exclude_scene_extremes,
            not_refset_extreme=self.exclude_refset_extremes,
            min_refset_size=self.min_refset_size,
        )

    def pair_allowed(self, adjective: str, shape: str) -> bool:
        if self.allowed_pairs is None:
            return True
        return (adjective, shape) in self.allowed_pairs


SEEN_PAIRS = (
    ("big", "circle"),
    ("big", "rectangle"),
    ("small", "square"),
    ("small", "triangle"),
)
UNSEEN_PAIRS = (
    ("big", "square"),
    ("big", "triangle"),
    ("small", "circle"),
    ("small", "rectangle"),
)

TASKS: dict[str, TaskSpec] = {
    "SUP1": TaskSpec(
        name="SUP1",
        form="superlative",
        single_shape=True,
        unique_by="color",
        head_rule="shape",
        refset="scene",
    ),
    "POS1": TaskSpec(
        name="POS1",
        form="positive",
        single_shape=True,
        unique_by="color",
        head_rule="shape",
        refset="scene",
        middle_query_rate=0.5,
        borderline_query_rate=0.5,
    ),
    "POS": TaskSpec(
        name="POS",
        form="positive",
        single_shape=False,
        unique_by="color+shape",
        head_rule="object",
        refset="scene",
        middle_query_rate=0.475,
        borderline_query_rate=0.475,
    ),
    "SETPOS": TaskSpec(
        name="SETPOS",
        form="positive",
        single_shape=False,
        unique_by="color+shape",
        head_rule="shape",
        refset="shape",
        min_refset_size=3,
        exclude_scene_extremes="strict",
        middle_query_rate=0.17,
        borderline_query_rate=0.65,
    ),
    "POS_HARD": TaskSpec(
        name="POS_HARD",
        form="positive",
        single_shape=False,
        unique_by="color+shape",
        head_rule="object",
        refset="scene",
        exclude_scene_extremes="ties",
        borderline_query_rate=0.7,
    ),
    "SETPOS_HARD": TaskSpec(
        name="SETPOS_HARD",
        form="positive",
        single_shape=False,
        unique_by="color+shape",
        head_rule="shape",
        refset="shape",
        min_refset_size=3,
        exclude_scene_extremes="strict",
        exclude_refset_extremes="ties",
    ),
    "COMP_SEEN": TaskSpec(
        name="COMP_SEEN",
        form="positive",
        single_shape=False,
        unique_by="color+shape",
        head_rule="shape",
        refset="shape",
        min_refset_size=3,
        exclude_scene_extremes="strict",
        middle_query_rate=0.17,
        borderline_query_rate=0.65,
        allowed_pairs=SEEN_PAIRS,
    ),
    "COMP_UNSEEN": TaskSpec(
        name="COMP_UNSEEN",
        form="positive",
        single_shape=False,
        unique_by="color+shape",
        head_rule="shape",
        refset="shape",
        min_refset_size=3,
        exclude_scene_extremes="strict",
        middle_query_rate=0.17,
        borderline_query_rate=0.65,
        allowed_pairs=UNSEEN_PAIRS,
    ),
}

# Stable numeric codes used in per-datapoint RNG stream derivation.
TASK_ORDER = tuple(TASKS)

BASE_TASKS = ("SUP1", "POS1", "POS", "SETPOS")
HARD_BASES = {"POS": "POS_HARD", "SETPOS": "SETPOS_HARD"}


class UnknownTaskError(ValueError):
    pass


def get_task(name: str) -> TaskSpec:
    """Look up a task by name; accepts CLI spellings like 'pos-hard'."""
    canonical = name.strip().upper().replace("-", "_").replace("+", "")
    if canonical == "SET_POS":
        canonical = "SETPOS"
    if canonical not in TASKS:
        raise UnknownTaskError(
            f"unknown task {name!r}; choose from "
            + ", ".join(t.lower().replace("_", "-") for t in TASKS)
        )
    return TASKS[canonical]


def task_code(task: TaskSpec) -> int:
    return TASK_ORDER.index(task.name)


def pair_groups(task: TaskSpec) -> list[tuple[str, str, str]]:
    """Sibling-pair groups (shape, color, true-adjective) for paired tasks.

    Each group supplies two record classes: (adjective, truth=True) and
    (flipped adjective, truth=False).  4 shapes x 5 colors x 2 adjectives
    gives 40 groups covering all 80 classes.
    """
    return [
        (shape, color, adjective)
        for shape, color, adjective in product(
            scenegen.SHAPES, scenegen.COLORS, task.adjectives
        )
    ]


def record_classes(task: TaskSpec) -> list[ClassKey]:
    """All record classes of a task, in canonical order.

    80 for unrestricted tasks; 40 for compositional tasks, where only the
    allowed adjective-shape pairs occur.
    """
    keys = [
        ClassKey(shape=shape, color=color, adjective=adjective, truth=truth)
        for shape, color, adjective, truth in product(
            scenegen.SHAPES, scenegen.COLORS, task.adjectives, (True, False)
        )
    ]
    return [key for key in keys if task.pair_allowed(key.adjective, key.shape)]
