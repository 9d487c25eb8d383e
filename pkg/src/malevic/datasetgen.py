"""Dataset assembly, splitting, and JSONL manifest serialization.

A manifest is one header line plus one datapoint per line.  Each datapoint
embeds the full symbolic scene alongside the sentence and its provenance
(recorded k, threshold), so every label can be re-derived without touching
the rendered images.  True/false siblings share a scene and a pair_id and
differ only in the adjective; the compositional sets instead carry one
record per scene so that disallowed adjective-shape pairs never appear.

Record generation draws an independent RNG stream per datapoint pair from
(master seed, task code, group index, pair index), which makes manifests
reproducible bit-for-bit and safe to generate in parallel.
"""
from __future__ import annotations

import json
import math
import multiprocessing
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, langgen, renderer, scenegen, semantics, tasks, verifier

MANIFEST_FORMAT = "malevic-manifest"
SCHEMA_VERSION = 1
SPLIT_NAMES = ("train", "val", "test")
DEFAULT_FRACTIONS = (16, 2, 2)

_SPLIT_SHUFFLE_SALT = 710
_SPLIT_LEFTOVER_SALT = 711


class DatasetGenError(RuntimeError):
    pass


class BalanceError(DatasetGenError):
    """Requested size cannot be balanced over the task's classes."""


class SplitError(DatasetGenError):
    pass


class SchemaError(ValueError):
    """Manifest file violates the schema; names the line and field path."""

    def __init__(self, line: int, path: str, message: str):
        where = f"line {line}" + (f": {path}" if path else "")
        super().__init__(f"{where}: {message}")
        self.line = line
        self.path = path


@dataclass
class DatasetRecord:
    index: int
    split: str
    pair_id: str
    class_key: str
    scene: scenegen.Scene
    sentence: langgen.SentenceRecord
    image: str


@dataclass
class Manifest:
    task_name: str
    master_seed: int
    generator_version: str
    config: dict
    records: list[DatasetRecord] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    @property
    def total(self) -> int:
        return len(self.records)

    @property
    def task(self) -> tasks.TaskSpec:
        return tasks.get_task(self.task_name)

    def for_split(self, split: str | None) -> list[DatasetRecord]:
        if split is None:
            return list(self.records)
        if split not in SPLIT_NAMES:
            raise ValueError(f"unknown split {split!r}")
        return [r for r in self.records if r.split == split]

    def class_counts(self, split: str | None = None) -> Counter:
        return Counter(r.class_key for r in self.for_split(split))


def _thr_tuple(cfg: semantics.ThresholdConfig) -> tuple[float, float, float, float]:
    return (cfg.mu, cfg.sigma, cfg.k_low, cfg.k_high)


def _pair_worker(args) -> list[DatasetRecord]:
    """Generate the record(s) of one datapoint pair; top-level for pickling."""
    task_name, key_parts, master_seed, group_idx, pair_idx, thr_parts, keep = args
    task = tasks.TASKS[task_name]
    key = tasks.ClassKey(*key_parts)
    thr = semantics.ThresholdConfig(*thr_parts)

    tcode = tasks.task_code(task)
    seq = np.random.SeedSequence(
        entropy=master_seed, spawn_key=(tcode, group_idx, pair_idx)
    )
    rng = np.random.Generator(np.random.PCG64(seq))
    rng_seed = (tcode * 100 + group_idx) * 10_000_000 + pair_idx
    scene_id = f"{task.name.lower()}-{master_seed}-{group_idx:02d}-{pair_idx:06d}"

    draw = scenegen.sample_scene(
        task,
        key,
        rng,
        scene_id=scene_id,
        rng_seed=rng_seed,
        threshold_config=thr,
    )
    if task.form == "positive":
        rec_true, rec_false = langgen.generate_positive(
            draw.scene, draw.target_id, task, draw.k
        )
    else:
        rec_true, rec_false = langgen.generate_superlative(
            draw.scene, draw.target_id, task
        )

    produced = rec_false.adjective if keep == "false" else rec_true.adjective
    if produced != key.adjective:
        raise DatasetGenError(
            f"scene sampling produced adjective {produced!r} for class {key}"
        )

    image = f"images/{task.name}/{scene_id}.png"
    out: list[DatasetRecord] = []
    if keep in ("both", "true"):
        cls = tasks.ClassKey(key.shape, key.color, rec_true.adjective, True)
        out.append(
            DatasetRecord(
                index=-1,
                split="test",
                pair_id=scene_id,
                class_key=str(cls),
                scene=draw.scene,
                sentence=rec_true,
                image=image,
            )
        )
    if keep in ("both", "false"):
        cls = tasks.ClassKey(key.shape, key.color, rec_false.adjective, False)
        out.append(
            DatasetRecord(
                index=-1,
                split="test",
                pair_id=scene_id,
                class_key=str(cls),
                scene=draw.scene,
                sentence=rec_false,
                image=image,
            )
        )
    return out


def _run_pair_jobs(jobspec: list, jobs: int) -> list[list[DatasetRecord]]:
    if jobs <= 1 or len(jobspec) < 2 * jobs:
        return [_pair_worker(args) for args in jobspec]
    chunk = max(1, len(jobspec) // (jobs * 8))
    with multiprocessing.Pool(jobs) as pool:
        return pool.map(_pair_worker, jobspec, chunksize=chunk)


def _config_snapshot(
    task: tasks.TaskSpec, total: int, thr: semantics.ThresholdConfig
) -> dict:
    return {
        "total": total,
        "mu": thr.mu,
        "sigma": thr.sigma,
        "k_low": thr.k_low,
        "k_high": thr.k_high,
        "canvas_size": scenegen.CANVAS_SIZE,
        "min_objects": scenegen.MIN_OBJECTS,
        "max_objects": scenegen.MAX_OBJECTS,
        "target_label_window": [scenegen.TARGET_LABEL_MIN, scenegen.TARGET_LABEL_MAX],
        "exclude_scene_extremes": task.exclude_scene_extremes,
        "exclude_refset_extremes": task.exclude_refset_extremes,
        "middle_query_rate": task.middle_query_rate,
        "borderline_query_rate": task.borderline_query_rate,
    }


def build_dataset(
    task: tasks.TaskSpec | str,
    total: int = 20000,
    master_seed: int = 0,
    *,
    threshold_config: semantics.ThresholdConfig | None = None,
    split_fractions: tuple[int, int, int] | None = DEFAULT_FRACTIONS,
    jobs: int = 1,
) -> Manifest:
    """Build a balanced manifest of `total` records for a task.

    Standard tasks generate true/false sibling pairs: each pair contributes
    one record to class (shape, color, adjective, true) and one to
    (shape, color, flipped adjective, false), so `total` must divide by 80.
    Compositional tasks generate one record per scene over their 40 allowed
    classes.  When `split_fractions` is None every record is tagged "test"
    (the hard diagnostic and unseen sets); otherwise split() is applied.
    """
    if isinstance(task, str):
        task = tasks.get_task(task)
    if master_seed < 0:
        raise ValueError("master_seed must be non-negative")
    thr = threshold_config or semantics.ThresholdConfig()

    jobspec = []
    if task.allowed_pairs is None:
        groups = tasks.pair_groups(task)
        n_classes = 2 * len(groups)
        if total <= 0 or total % n_classes != 0:
            raise BalanceError(
                f"total {total} is not divisible by the {n_classes} classes "
                f"of task {task.name}"
            )
        per_class = total // n_classes
        for g_idx, (shape, color, adjective) in enumerate(groups):
            parts = (shape, color, adjective, True)
            for p_idx in range(per_class):
                jobspec.append(
                    (task.name, parts, master_seed, g_idx, p_idx, _thr_tuple(thr), "both")
                )
    else:
        classes = tasks.record_classes(task)
        if total <= 0 or total % len(classes) != 0:
            raise BalanceError(
                f"total {total} is not divisible by the {len(classes)} allowed "
                f"classes of task {task.name}"
            )
        per_class = total // len(classes)
        for c_idx, key in enumerate(classes):
            parts = (key.shape, key.color, key.adjective, key.truth)
            keep = "true" if key.truth else "false"
            for p_idx in range(per_class):
                jobspec.append(
                    (task.name, parts, master_seed, c_idx, p_idx, _thr_tuple(thr), keep)
                )

    batches = _run_pair_jobs(jobspec, jobs)
    records = [rec for batch in batches for rec in batch]
    for i, rec in enumerate(records):
        rec.index = i

    manifest = Manifest(
        task_name=task.name,
        master_seed=master_seed,
        generator_version=__version__,
        config=_config_snapshot(task, total, thr),
        records=records,
    )
    if split_fractions is not None:
        manifest = split(manifest, split_fractions)
    return manifest


def build_hard(
    base: tasks.TaskSpec | str,
    total: int = 2000,
    master_seed: int = 0,
    *,
    threshold_config: semantics.ThresholdConfig | None = None,
    jobs: int = 1,
) -> Manifest:
    """Build a hard diagnostic set (all records tagged "test").

    POS_HARD additionally never queries the scene's biggest or smallest
    object; SETPOS_HARD never queries its reference set's extremes.  Both
    exclusions are tie-inclusive.
    """
    base_name = base.name if isinstance(base, tasks.TaskSpec) else tasks.get_task(base).name
    if base_name in tasks.HARD_BASES:
        hard_name = tasks.HARD_BASES[base_name]
    elif base_name in tasks.HARD_BASES.values():
        hard_name = base_name
    else:
        raise DatasetGenError(
            f"no hard variant for task {base_name}; choose from "
            + ", ".join(tasks.HARD_BASES)
        )
    return build_dataset(
        tasks.TASKS[hard_name],
        total,
        master_seed,
        threshold_config=threshold_config,
        split_fractions=None,
        jobs=jobs,
    )


def build_compositional(
    master_seed: int = 0,
    *,
    seen_total: int = 10000,
    unseen_total: int = 1000,
    threshold_config: semantics.ThresholdConfig | None = None,
    jobs: int = 1,
) -> tuple[Manifest, Manifest]:
    """Build the compositional pair: seen (split 8/1/1) and unseen (all test).

    Seen sets carry only big+{circle, rectangle} and small+{square,
    triangle} adjective-head pairs; the unseen set carries exactly the
    complementary pairs.
    """
    seen = build_dataset(
        tasks.TASKS["COMP_SEEN"],
        seen_total,
        master_seed,
        threshold_config=threshold_config,
        split_fractions=(8, 1, 1),
        jobs=jobs,
    )
    unseen = build_dataset(
        tasks.TASKS["COMP_UNSEEN"],
        unseen_total,
        master_seed,
        threshold_config=threshold_config,
        split_fractions=None,
        jobs=jobs,
    )
    return seen, unseen


def _unit_group_key(unit: list[DatasetRecord]) -> str:
    """Balancing group of a sibling unit: (shape, color, true adjective)."""
    if len(unit) == 1:
        return unit[0].class_key
    for rec in unit:
        if rec.sentence.truth:
            key = tasks.ClassKey.parse(rec.class_key)
            return f"{key.shape}:{key.color}:{key.adjective}"
    raise SplitError(f"pair {unit[0].pair_id} has no true record")


def split(manifest: Manifest, fractions: tuple[int, int, int] = DEFAULT_FRACTIONS) -> Manifest:
    """Assign train/val/test tags, keeping sibling pairs together.

    Units (sibling pairs, or single records in compositional sets) are
    shuffled within each balancing group and sliced by the fractions, so
    per-class counts stay exactly equal whenever the group size divides
    evenly (200/25/25 per class at full scale).  When it doesn't, leftover
    units are spread across groups to hit the global totals exactly, with
    per-class counts off by at most one.  Global totals that don't divide
    evenly, and odd per-class counts, are errors.
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise SplitError(f"fractions must be three positive integers, got {fractions}")
    denom = sum(fractions)

    units_by_pair: dict[str, list[DatasetRecord]] = {}
    for rec in manifest.records:
        units_by_pair.setdefault(rec.pair_id, []).append(rec)
    for pair_id, unit in units_by_pair.items():
        if len(unit) > 2:
            raise SplitError(f"pair {pair_id} has {len(unit)} records")

    groups: dict[str, list[list[DatasetRecord]]] = {}
    for unit in units_by_pair.values():
        groups.setdefault(_unit_group_key(unit), []).append(unit)

    total_units = sum(len(units) for units in groups.values())
    targets = []
    for f in fractions:
        share = total_units * f
        if share % denom != 0:
            raise SplitError(
                f"cannot split {total_units} units into fractions {fractions}"
            )
        targets.append(share // denom)

    tcode = tasks.task_code(manifest.task)
    assigned: dict[str, str] = {}  # pair_id -> split
    held: list[tuple[str, list[str]]] = []  # (group, leftover pair_ids) per group
    counts = [0, 0, 0]

    for g_idx, group_key in enumerate(sorted(groups)):
        units = groups[group_key]
        m = len(units)
        if m % 2 != 0:
            raise SplitError(
                f"group {group_key} has an odd per-class count ({m}); "
                f"cannot keep splits balanced"
            )
        seq = np.random.SeedSequence(
            entropy=manifest.master_seed,
            spawn_key=(tcode, _SPLIT_SHUFFLE_SALT, g_idx),
        )
        rng = np.random.Generator(np.random.PCG64(seq))
        order = [units[int(i)] for i in rng.permutation(m)]
        quotas = [m * f // denom for f in fractions]
        pos = 0
        for s_idx, quota in enumerate(quotas):
            for unit in order[pos : pos + quota]:
                assigned[unit[0].pair_id] = SPLIT_NAMES[s_idx]
                counts[s_idx] += 1
            pos += quota
        leftover_ids = [unit[0].pair_id for unit in order[pos:]]
        if leftover_ids:
            held.append((group_key, leftover_ids))

    if held:
        seq = np.random.SeedSequence(
            entropy=manifest.master_seed,
            spawn_key=(tcode, _SPLIT_LEFTOVER_SALT),
        )
        rng = np.random.Generator(np.random.PCG64(seq))
        order = [held[int(i)] for i in rng.permutation(len(held))]
        for _, leftover_ids in order:
            for pair_id in leftover_ids:
                needs = [targets[i] - counts[i] for i in range(3)]
                s_idx = max(range(3), key=lambda i: (needs[i], -i))
                if needs[s_idx] <= 0:
                    raise SplitError("leftover unit with no remaining split need")
                assigned[pair_id] = SPLIT_NAMES[s_idx]
                counts[s_idx] += 1

    records = [replace(rec, split=assigned[rec.pair_id]) for rec in manifest.records]
    return Manifest(
        task_name=manifest.task_name,
        master_seed=manifest.master_seed,
        generator_version=manifest.generator_version,
        config=manifest.config,
        records=records,
        schema_version=manifest.schema_version,
    )

# --- serialization ---------------------------------------------------------


def _scene_dict(scene: scenegen.Scene) -> dict:
    return {
        "scene_id": scene.scene_id,
        "canvas_size": scene.canvas_size,
        "task": scene.task,
        "rng_seed": scene.rng_seed,
        "objects": [
            {
                "id": o.id,
                "shape": o.shape,
                "color": o.color,
                "size_label": o.size_label,
                "pixel_area": o.pixel_area,
                "dims": o.dims,
                "center": list(o.center),
                "bbox": list(o.bbox),
            }
            for o in scene.objects
        ],
    }


def _sentence_dict(s: langgen.SentenceRecord) -> dict:
    return {
        "text": s.text,
        "target_id": s.target_id,
        "target_color": s.target_color,
        "target_shape": s.target_shape,
        "head_noun": s.head_noun,
        "adjective": s.adjective,
        "form": s.form,
        "truth": s.truth,
        "k_used": s.k_used,
        "threshold_used": s.threshold_used,
    }


def _record_dict(rec: DatasetRecord) -> dict:
    return {
        "index": rec.index,
        "split": rec.split,
        "pair_id": rec.pair_id,
        "class_key": rec.class_key,
        "scene": _scene_dict(rec.scene),
        "sentence": _sentence_dict(rec.sentence),
        "image": rec.image,
    }


def _header_dict(manifest: Manifest) -> dict:
    return {
        "format": MANIFEST_FORMAT,
        "schema_version": manifest.schema_version,
        "task": manifest.task_name,
        "total": manifest.total,
        "master_seed": manifest.master_seed,
        "generator_version": manifest.generator_version,
        "config": manifest.config,
    }


def dumps(manifest: Manifest) -> str:
    lines = [json.dumps(_header_dict(manifest), separators=(",", ":"))]
    lines.extend(
        json.dumps(_record_dict(rec), separators=(",", ":"))
        for rec in manifest.records
    )
    return "\n".join(lines) + "\n"


def serialize(manifest: Manifest, path) -> None:
    Path(path).write_text(dumps(manifest), encoding="utf-8")


class _Checker:
    """Typed field access over one JSON line, tracking the field path."""

    def __init__(self, line: int):
        self.line = line

    def fail(self, path: str, message: str):
        raise SchemaError(self.line, path, message)

    def get(self, obj: dict, path: str, key: str, kind, *, nullable: bool = False):
        where = f"{path}.{key}" if path else key
        if not isinstance(obj, dict):
            self.fail(path, "expected an object")
        if key not in obj:
            self.fail(where, "missing required field")
        value = obj[key]
        if value is None:
            if nullable:
                return None
            self.fail(where, "field must not be null")
        if kind is bool:
            if type(value) is not bool:
                self.fail(where, f"expected bool, got {type(value).__name__}")
        elif kind is int:
            if type(value) is not int:
                self.fail(where, f"expected int, got {type(value).__name__}")
        elif kind is float:
            if type(value) not in (int, float) or type(value) is bool:
                self.fail(where, f"expected number, got {type(value).__name__}")
            value = float(value)
        elif kind is str:
            if not isinstance(value, str):
                self.fail(where, f"expected string, got {type(value).__name__}")
        elif kind is dict:
            if not isinstance(value, dict):
                self.fail(where, f"expected object, got {type(value).__name__}")
        elif kind is list:
            if not isinstance(value, list):
                self.fail(where, f"expected array, got {type(value).__name__}")
        return value

    def enum(self, obj: dict, path: str, key: str, allowed):
        value = self.get(obj, path, key, str)
        if value not in allowed:
            self.fail(f"{path}.{key}" if path else key,
                      f"{value!r} not one of {sorted(allowed)}")
        return value

    def int_list(self, obj: dict, path: str, key: str, length: int) -> list[int]:
        where = f"{path}.{key}" if path else key
        value = self.get(obj, path, key, list)
        if len(value) != length or any(type(v) is not int for v in value):
            self.fail(where, f"expected array of {length} integers")
        return value


_DIMS_KEYS = {
    "circle": ("radius",),
    "square": ("side",),
    "rectangle": ("width", "height"),
    "triangle": ("base", "height"),
}


def _parse_object(ck: _Checker, data, path: str) -> scenegen.SceneObject:
    if not isinstance(data, dict):
        ck.fail(path, "expected an object")
    shape = ck.enum(data, path, "shape", scenegen.SHAPES)
    dims_raw = ck.get(data, path, "dims", dict)
    expected = _DIMS_KEYS[shape]
    if tuple(sorted(dims_raw)) != tuple(sorted(expected)):
        ck.fail(f"{path}.dims", f"expected keys {sorted(expected)}, got {sorted(dims_raw)}")
    dims = {}
    for key in expected:
        v = dims_raw[key]
        if type(v) not in (int, float) or type(v) is bool:
            ck.fail(f"{path}.dims.{key}", "expected number")
        dims[key] = float(v)
    label = ck.get(data, path, "size_label", int)
    if label not in scenegen.SIZE_LABELS:
        ck.fail(f"{path}.size_label", f"{label} not one of {list(scenegen.SIZE_LABELS)}")
    return scenegen.SceneObject(
        id=ck.get(data, path, "id", int),
        shape=shape,
        color=ck.enum(data, path, "color", scenegen.COLORS),
        size_label=label,
        pixel_area=ck.get(data, path, "pixel_area", int),
        dims=dims,
        center=tuple(ck.int_list(data, path, "center", 2)),
        bbox=tuple(ck.int_list(data, path, "bbox", 4)),
    )


def _parse_scene(ck: _Checker, data, path: str) -> scenegen.Scene:
    if not isinstance(data, dict):
        ck.fail(path, "expected an object")
    objects_raw = ck.get(data, path, "objects", list)
    objects = [
        _parse_object(ck, obj, f"{path}.objects[{i}]")
        for i, obj in enumerate(objects_raw)
    ]
    return scenegen.Scene(
        scene_id=ck.get(data, path, "scene_id", str),
        canvas_size=ck.get(data, path, "canvas_size", int),
        task=ck.get(data, path, "task", str),
        rng_seed=ck.get(data, path, "rng_seed", int),
        objects=objects,
    )


_ADJECTIVES = langgen.POSITIVE_ADJECTIVES + langgen.SUPERLATIVE_ADJECTIVES
_HEAD_NOUNS = scenegen.SHAPES + (langgen.OBJECT_HEAD,)


def _parse_sentence(ck: _Checker, data, path: str) -> langgen.SentenceRecord:
    if not isinstance(data, dict):
        ck.fail(path, "expected an object")
    form = ck.enum(data, path, "form", ("positive", "superlative"))
    k_used = ck.get(data, path, "k_used", float, nullable=True)
    threshold_used = ck.get(data, path, "threshold_used", float, nullable=True)
    if form == "positive":
        if k_used is None:
            ck.fail(f"{path}.k_used", "positive-form record requires k_used")
        if threshold_used is None:
            ck.fail(f"{path}.threshold_used", "positive-form record requires threshold_used")
    else:
        if k_used is not None or threshold_used is not None:
            ck.fail(f"{path}.k_used", "superlative record must not carry k/threshold")
    return langgen.SentenceRecord(
        text=ck.get(data, path, "text", str),
        target_id=ck.get(data, path, "target_id", int),
        target_color=ck.enum(data, path, "target_color", scenegen.COLORS),
        target_shape=ck.enum(data, path, "target_shape", scenegen.SHAPES),
        head_noun=ck.enum(data, path, "head_noun", _HEAD_NOUNS),
        adjective=ck.enum(data, path, "adjective", _ADJECTIVES),
        form=form,
        truth=ck.get(data, path, "truth", bool),
        k_used=k_used,
        threshold_used=threshold_used,
    )


def _parse_class_key(ck: _Checker, value: str, path: str) -> str:
    parts = value.split(":")
    ok = (
        len(parts) == 4
        and parts[0] in scenegen.SHAPES
        and parts[1] in scenegen.COLORS
        and parts[2] in _ADJECTIVES
        and parts[3] in ("true", "false")
    )
    if not ok:
        ck.fail(path, f"malformed class key {value!r}")
    return value


def _parse_record(line_no: int, data) -> DatasetRecord:
    ck = _Checker(line_no)
    if not isinstance(data, dict):
        ck.fail("", "expected an object")
    return DatasetRecord(
        index=ck.get(data, "", "index", int),
        split=ck.enum(data, "", "split", SPLIT_NAMES),
        pair_id=ck.get(data, "", "pair_id", str),
        class_key=_parse_class_key(ck, ck.get(data, "", "class_key", str), "class_key"),
        scene=_parse_scene(ck, ck.get(data, "", "scene", dict), "scene"),
        sentence=_parse_sentence(ck, ck.get(data, "", "sentence", dict), "sentence"),
        image=ck.get(data, "", "image", str),
    )


def loads(text: str) -> Manifest:
    lines = text.splitlines()
    if not lines:
        raise SchemaError(1, "", "empty manifest")
    ck = _Checker(1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as err:
        raise SchemaError(1, "", f"invalid JSON: {err.msg}") from None
    fmt = ck.get(header, "", "format", str)
    if fmt != MANIFEST_FORMAT:
        ck.fail("format", f"expected {MANIFEST_FORMAT!r}, got {fmt!r}")
    version = ck.get(header, "", "schema_version", int)
    if version != SCHEMA_VERSION:
        ck.fail("schema_version", f"unsupported schema version {version}")
    task_name = ck.get(header, "", "task", str)
    if task_name not in tasks.TASKS:
        ck.fail("task", f"unknown task {task_name!r}")
    total = ck.get(header, "", "total", int)

    records = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise SchemaError(i, "", "blank line inside manifest")
        try:
            data = json.loads(line)
        except json.JSONDecodeError as err:
            raise SchemaError(i, "", f"invalid JSON: {err.msg}") from None
        records.append(_parse_record(i, data))

    if total != len(records):
        raise SchemaError(
            1, "total", f"header says {total} records, file has {len(records)}"
        )
    return Manifest(
        task_name=task_name,
        master_seed=ck.get(header, "", "master_seed", int),
        generator_version=ck.get(header, "", "generator_version", str),
        config=ck.get(header, "", "config", dict),
        records=records,
        schema_version=version,
    )


def load(path) -> Manifest:
    return loads(Path(path).read_text(encoding="utf-8"))


def scene_from_dict(data: dict) -> scenegen.Scene:
    """Parse one scene dict (the manifest's "scene" field) with full checks."""
    return _parse_scene(_Checker(0), data, "scene")


# --- validation ------------------------------------------------------------


def _check_scene(task: tasks.TaskSpec, rec: DatasetRecord) -> list[str]:
    pre = f"record {rec.index}"
    problems = []
    scene = rec.scene
    n = len(scene.objects)
    if not scenegen.MIN_OBJECTS <= n <= scenegen.MAX_OBJECTS:
        problems.append(f"{pre}: scene has {n} objects")
    if scene.canvas_size != scenegen.CANVAS_SIZE:
        problems.append(f"{pre}: canvas_size {scene.canvas_size}")
    if scene.task != task.name:
        problems.append(f"{pre}: scene task tag {scene.task!r}")
    if sorted(o.id for o in scene.objects) != list(range(n)):
        problems.append(f"{pre}: object ids are not 0..{n - 1}")
    shapes = {o.shape for o in scene.objects}
    if task.single_shape and len(shapes) > 1:
        problems.append(f"{pre}: expected a single-shape scene, got {sorted(shapes)}")
    if not task.single_shape and len(shapes) < 2:
        problems.append(f"{pre}: mixed-shape task but scene has one shape")
    for o in scene.objects:
        opre = f"{pre}: object {o.id}"
        if o.pixel_area != o.size_label**2:
            problems.append(f"{opre}: pixel_area {o.pixel_area} != label^2")
        geo = scenegen.geometric_area(o.shape, o.dims)
        if abs(geo - o.pixel_area) > 0.005 * o.pixel_area:
            problems.append(f"{opre}: dims solve to {geo:.1f}, off by >0.5%")
        if o.center is None or o.bbox is None:
            problems.append(f"{opre}: unplaced")
            continue
        if scenegen.bbox_for(o.shape, o.dims, o.center) != o.bbox:
            problems.append(f"{opre}: bbox inconsistent with dims and center")
        x0, y0, x1, y1 = o.bbox
        if not (0 <= x0 < x1 <= scene.canvas_size and 0 <= y0 < y1 <= scene.canvas_size):
            problems.append(f"{opre}: bbox {o.bbox} outside canvas")
    for i, a in enumerate(scene.objects):
        for b in scene.objects[i + 1 :]:
            if a.bbox and b.bbox and _boxes_overlap_with_margin(a.bbox, b.bbox):
                problems.append(
                    f"{pre}: objects {a.id} and {b.id} closer than "
                    f"{scenegen.BBOX_MARGIN}px"
                )
    return problems


def _boxes_overlap_with_margin(a, b) -> bool:
    m = scenegen.BBOX_MARGIN
    return a[0] < b[2] + m and b[0] < a[2] + m and a[1] < b[3] + m and b[1] < a[3] + m


def _check_sentence(task: tasks.TaskSpec, rec: DatasetRecord, config: dict) -> list[str]:
    pre = f"record {rec.index}"
    problems = []
    scene, s = rec.scene, rec.sentence
    key = tasks.ClassKey.parse(rec.class_key)

    try:
        target = scene.object_by_id(s.target_id)
    except KeyError:
        return [f"{pre}: target {s.target_id} not in scene"]
    if (target.shape, target.color) != (s.target_shape, s.target_color):
        problems.append(f"{pre}: target attributes disagree with sentence fields")
    if (key.shape, key.color, key.adjective, key.truth) != (
        s.target_shape,
        s.target_color,
        s.adjective,
        s.truth,
    ):
        problems.append(f"{pre}: class_key {rec.class_key} disagrees with sentence")
    if s.form != task.form:
        problems.append(f"{pre}: form {s.form} for task {task.name}")
    if not task.pair_allowed(s.adjective, s.target_shape):
        problems.append(f"{pre}: adjective-shape pair {s.adjective}+{s.target_shape} not allowed")
    if s.head_noun != langgen.head_noun_for(task, s.target_shape):
        problems.append(f"{pre}: head noun {s.head_noun!r}")
    if rec.image != f"images/{task.name}/{scene.scene_id}.png":
        problems.append(f"{pre}: image path {rec.image!r}")
    if not scenegen.TARGET_LABEL_MIN <= target.size_label <= scenegen.TARGET_LABEL_MAX:
        problems.append(f"{pre}: queried label {target.size_label} outside window")

    expected_text = langgen.realize_text(
        s.target_color, s.target_shape, s.adjective, s.head_noun
    )
    if s.text != expected_text:
        problems.append(f"{pre}: text {s.text!r} != {expected_text!r}")
        return problems

    query = verifier.parse_sentence(s.text)
    if (query.color, query.shape_mention, query.head, query.adjective, query.form) != (
        s.target_color,
        s.target_shape,
        s.head_noun,
        s.adjective,
        s.form,
    ):
        problems.append(f"{pre}: parsed query disagrees with stored fields")

    try:
        resolved = verifier.resolve_target(scene, query)
    except verifier.ResolutionError as err:
        problems.append(f"{pre}: {err}")
        return problems
    if resolved != s.target_id:
        problems.append(f"{pre}: query resolves to {resolved}, stored {s.target_id}")

    if s.target_id not in langgen.eligible_targets(scene, task):
        problems.append(f"{pre}: target violates the task's query constraints")

    if s.form == "positive":
        if s.k_used is None or s.threshold_used is None:
            problems.append(f"{pre}: positive record missing k/threshold")
            return problems
        k_low = config.get("k_low", semantics.K_LOW)
        k_high = config.get("k_high", semantics.K_HIGH)
        if not k_low < s.k_used < k_high:
            problems.append(f"{pre}: k_used {s.k_used} outside ({k_low}, {k_high})")
        ref = verifier.reference_set_for_query(scene, query)
        recomputed = semantics.threshold(ref, semantics.VagueK(s.k_used))
        if not math.isclose(recomputed, s.threshold_used, rel_tol=1e-9, abs_tol=1e-6):
            problems.append(
                f"{pre}: stored threshold {s.threshold_used}, recomputed {recomputed}"
            )
    try:
        rederived = verifier.evaluate(scene, query, "recorded", recorded_k=s.k_used)
    except (verifier.ResolutionError, semantics.SemanticsError) as err:
        problems.append(f"{pre}: evaluation failed: {err}")
        return problems
    if rederived != s.truth:
        problems.append(f"{pre}: stored truth {s.truth}, re-derived {rederived}")
    return problems


def _check_pairs(task: tasks.TaskSpec, manifest: Manifest) -> list[str]:
    problems = []
    by_pair: dict[str, list[DatasetRecord]] = {}
    for rec in manifest.records:
        by_pair.setdefault(rec.pair_id, []).append(rec)
    expected = 1 if task.allowed_pairs is not None else 2
    for pair_id, unit in by_pair.items():
        pre = f"pair {pair_id}"
        if len(unit) != expected:
            problems.append(f"{pre}: {len(unit)} records, expected {expected}")
            continue
        if expected == 2:
            a, b = unit
            if a.scene != b.scene:
                problems.append(f"{pre}: siblings embed different scenes")
            if a.split != b.split:
                problems.append(f"{pre}: siblings in different splits")
            if {a.sentence.truth, b.sentence.truth} != {True, False}:
                problems.append(f"{pre}: sibling truths are not one true, one false")
            if langgen.FLIP.get(a.sentence.adjective) != b.sentence.adjective:
                problems.append(f"{pre}: sibling adjectives do not flip")
            if a.sentence.target_id != b.sentence.target_id:
                problems.append(f"{pre}: siblings query different objects")
            if a.sentence.k_used != b.sentence.k_used:
                problems.append(f"{pre}: siblings disagree on k")
    return problems


def _check_balance(task: tasks.TaskSpec, manifest: Manifest) -> list[str]:
    problems = []
    expected_classes = [str(key) for key in tasks.record_classes(task)]

    overall = manifest.class_counts(None)
    extra = set(overall) - set(expected_classes)
    if extra:
        problems.append(f"unexpected classes {sorted(extra)}")
    totals = [overall.get(key, 0) for key in expected_classes]
    if len(set(totals)) != 1:
        problems.append(
            f"class counts range {min(totals)}..{max(totals)}, expected all equal"
        )
        return problems
    class_total = totals[0]

    for split_name in sorted({rec.split for rec in manifest.records}):
        counts = manifest.class_counts(split_name)
        per_class = [counts.get(key, 0) for key in expected_classes]
        n_split = sum(per_class)
        # exact per-class equality whenever the split share divides evenly;
        # otherwise (smoke scales) classes may differ by one
        if class_total * n_split % manifest.total == 0:
            if len(set(per_class)) != 1:
                problems.append(
                    f"split {split_name}: class counts range "
                    f"{min(per_class)}..{max(per_class)}, expected all equal"
                )
        elif max(per_class) - min(per_class) > 1:
            problems.append(
                f"split {split_name}: class counts range "
                f"{min(per_class)}..{max(per_class)}, expected within one"
            )
    return problems


def _check_render_sample(
    manifest: Manifest, sample: int, sample_seed: int
) -> list[str]:
    problems = []
    scenes: dict[str, scenegen.Scene] = {}
    for rec in manifest.records:
        scenes.setdefault(rec.scene.scene_id, rec.scene)
    unique = list(scenes.values())
    rng = np.random.default_rng(sample_seed)
    take = min(sample, len(unique))
    chosen = rng.choice(len(unique), size=take, replace=False)
    for idx in chosen:
        scene = unique[int(idx)]
        image = renderer.render(scene)
        measured = {}
        for obj in scene.objects:
            got = renderer.measure_area(image, obj, scene)
            measured[obj.id] = got
            if abs(got - obj.pixel_area) > 0.05 * obj.pixel_area:
                problems.append(
                    f"scene {scene.scene_id}: object {obj.id} ({obj.shape} "
                    f"{obj.size_label}) measured {got}px vs {obj.pixel_area}px"
                )
        for i, a in enumerate(scene.objects):
            for b in scene.objects[i + 1 :]:
                if abs(a.size_label - b.size_label) >= 10:
                    bigger, smaller = (a, b) if a.size_label > b.size_label else (b, a)
                    if measured[bigger.id] <= measured[smaller.id]:
                        problems.append(
                            f"scene {scene.scene_id}: objects {bigger.id}/{smaller.id} "
                            f"measured areas do not preserve label order"
                        )
    return problems


def validate_manifest(
    manifest: Manifest, *, render_sample: int = 0, sample_seed: int = 0
) -> list[str]:
    """Re-run every dataset invariant; returns a list of problems (empty = pass).

    Covers scene geometry, sentence/text round-trips, licensing constraints,
    truth re-derivation from stored scenes and k, sibling-pair structure,
    per-split class balance, and optionally a render round-trip over a
    deterministic sample of scenes.
    """
    if manifest.task_name not in tasks.TASKS:
        return [f"unknown task {manifest.task_name!r}"]
    task = manifest.task
    if manifest.total == 0:
        return ["manifest has no records"]
    problems = []
    for expected_index, rec in enumerate(manifest.records):
        if rec.index != expected_index:
            problems.append(f"record {expected_index}: stored index {rec.index}")
        problems.extend(_check_scene(task, rec))
        problems.extend(_check_sentence(task, rec, manifest.config))
    problems.extend(_check_pairs(task, manifest))
    problems.extend(_check_balance(task, manifest))
    if render_sample > 0:
        problems.extend(_check_render_sample(manifest, render_sample, sample_seed))
    return problems
