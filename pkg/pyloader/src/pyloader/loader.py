"""Load size-adjective dataset manifests for ML pipelines.

This package is a thin, dependency-free consumer of the generator's
versioned JSONL schema and image layout (see the generator's
docs/schema.md). It exposes ordered, split-filterable, seed-shufflable
iteration over datapoints, and it independently recomputes every recorded
truth value from the symbolic scene — the sentence text is never parsed;
all verification trusts the structured fields.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

SCHEMA_VERSION = 1
MANIFEST_FORMAT = "malevic-manifest"
OBJECT_HEAD = "object"
SPLITS = ("train", "val", "test")


class LoaderError(Exception):
    """Base class for everything this package raises."""


class SchemaMismatchError(LoaderError):
    """The manifest does not match the schema this loader supports."""

    def __init__(self, line: int, path: str, message: str):
        self.line = line
        self.path = path
        self.message = message
        where = f"line {line}"
        if path:
            where += f": {path}"
        super().__init__(f"{where}: {message}")


class MissingImageError(LoaderError):
    """A datapoint references an image file that does not exist."""

    def __init__(self, path):
        self.path = Path(path)
        super().__init__(f"image file missing: {path}")


class DegenerateReferenceError(LoaderError):
    """All reference areas are equal, so no threshold can be formed."""


@dataclass(frozen=True)
class SceneObject:
    id: int
    shape: str
    color: str
    size_label: int
    pixel_area: int


@dataclass(frozen=True)
class Scene:
    scene_id: str
    canvas_size: int
    objects: tuple[SceneObject, ...]


@dataclass(frozen=True)
class LoadedDatapoint:
    """One manifest record, ready for a training or evaluation pipeline."""

    index: int
    split: str
    pair_id: str
    image_path: Path
    text: str
    truth: bool
    form: str
    adjective: str
    head_noun: str
    target_id: int
    k_used: float | None
    scene: Scene


class Dataset:
    """An ordered, immutable view over one manifest's datapoints."""

    def __init__(self, *, task: str, master_seed: int, generator_version: str,
                 datapoints: tuple[LoadedDatapoint, ...]):
        self.task = task
        self.master_seed = master_seed
        self.generator_version = generator_version
        self._datapoints = datapoints

    def __len__(self) -> int:
        return len(self._datapoints)

    def __iter__(self):
        return iter(self._datapoints)

    def __getitem__(self, i: int) -> LoadedDatapoint:
        return self._datapoints[i]

    def filter(self, split: str) -> "Dataset":
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}; choose from {SPLITS}")
        return self._view(tuple(dp for dp in self._datapoints if dp.split == split))

    def shuffled(self, seed: int) -> "Dataset":
        order = list(self._datapoints)
        random.Random(seed).shuffle(order)
        return self._view(tuple(order))

    def _view(self, datapoints: tuple[LoadedDatapoint, ...]) -> "Dataset":
        return Dataset(
            task=self.task,
            master_seed=self.master_seed,
            generator_version=self.generator_version,
            datapoints=datapoints,
        )


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _get(data: dict, key: str, kind, line: int, path: str, nullable: bool = False):
    if not isinstance(data, dict):
        raise SchemaMismatchError(line, path, "expected a JSON object")
    if key not in data:
        raise SchemaMismatchError(line, _join(path, key), "missing field")
    value = data[key]
    if value is None:
        if nullable:
            return None
        raise SchemaMismatchError(line, _join(path, key), "must not be null")
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise SchemaMismatchError(
            line,
            _join(path, key),
            f"expected {kind.__name__}, got {type(value).__name__}",
        )
    return value


def _parse_object(data: dict, line: int, path: str) -> SceneObject:
    return SceneObject(
        id=_get(data, "id", int, line, path),
        shape=_get(data, "shape", str, line, path),
        color=_get(data, "color", str, line, path),
        size_label=_get(data, "size_label", int, line, path),
        pixel_area=_get(data, "pixel_area", int, line, path),
    )


def _parse_datapoint(data: dict, line: int, manifest_dir: Path) -> LoadedDatapoint:
    split = _get(data, "split", str, line, "")
    if split not in SPLITS:
        raise SchemaMismatchError(line, "split", f"unknown split {split!r}")

    scene_data = _get(data, "scene", dict, line, "")
    objects = _get(scene_data, "objects", list, line, "scene")
    scene = Scene(
        scene_id=_get(scene_data, "scene_id", str, line, "scene"),
        canvas_size=_get(scene_data, "canvas_size", int, line, "scene"),
        objects=tuple(
            _parse_object(obj, line, f"scene.objects[{i}]")
            for i, obj in enumerate(objects)
        ),
    )

    sentence = _get(data, "sentence", dict, line, "")
    form = _get(sentence, "form", str, line, "sentence")
    if form not in ("positive", "superlative"):
        raise SchemaMismatchError(line, "sentence.form", f"unknown form {form!r}")
    k_used = _get(sentence, "k_used", float, line, "sentence", nullable=True)
    if form == "positive" and k_used is None:
        raise SchemaMismatchError(
            line, "sentence.k_used", "positive-form record without a recorded k"
        )

    return LoadedDatapoint(
        index=_get(data, "index", int, line, ""),
        split=split,
        pair_id=_get(data, "pair_id", str, line, ""),
        image_path=manifest_dir / _get(data, "image", str, line, ""),
        text=_get(sentence, "text", str, line, "sentence"),
        truth=_get(sentence, "truth", bool, line, "sentence"),
        form=form,
        adjective=_get(sentence, "adjective", str, line, "sentence"),
        head_noun=_get(sentence, "head_noun", str, line, "sentence"),
        target_id=_get(sentence, "target_id", int, line, "sentence"),
        k_used=k_used,
        scene=scene,
    )


def open_dataset(
    manifest_path,
    *,
    split: str | None = None,
    shuffle_seed: int | None = None,
    require_images: bool = False,
) -> Dataset:
    """Load a manifest into an ordered Dataset.

    `split` restricts to one split, `shuffle_seed` permutes deterministically
    (filtering happens first), and `require_images` additionally checks that
    every referenced image file exists next to the manifest.
    """
    manifest_path = Path(manifest_path)
    lines = manifest_path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise SchemaMismatchError(1, "", "empty manifest")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as err:
        raise SchemaMismatchError(1, "", f"invalid JSON: {err.msg}") from None
    fmt = _get(header, "format", str, 1, "")
    if fmt != MANIFEST_FORMAT:
        raise SchemaMismatchError(1, "format", f"not a manifest: format {fmt!r}")
    version = _get(header, "schema_version", int, 1, "")
    if version != SCHEMA_VERSION:
        raise SchemaMismatchError(
            1,
            "schema_version",
            f"file has schema version {version}, this loader supports {SCHEMA_VERSION}",
        )

    manifest_dir = manifest_path.resolve().parent
    datapoints = []
    for line_no, line in enumerate(lines[1:], start=2):
        try:
            data = json.loads(line)
        except json.JSONDecodeError as err:
            raise SchemaMismatchError(line_no, "", f"invalid JSON: {err.msg}") from None
        datapoints.append(_parse_datapoint(data, line_no, manifest_dir))

    total = _get(header, "total", int, 1, "")
    if total != len(datapoints):
        raise SchemaMismatchError(
            1, "total", f"header says {total} records, file has {len(datapoints)}"
        )

    if require_images:
        for dp in datapoints:
            if not dp.image_path.is_file():
                raise MissingImageError(dp.image_path)

    dataset = Dataset(
        task=_get(header, "task", str, 1, ""),
        master_seed=_get(header, "master_seed", int, 1, ""),
        generator_version=_get(header, "generator_version", str, 1, ""),
        datapoints=tuple(datapoints),
    )
    if split is not None:
        dataset = dataset.filter(split)
    if shuffle_seed is not None:
        dataset = dataset.shuffled(shuffle_seed)
    return dataset


def recheck_truth(datapoint: LoadedDatapoint, *, k: float | None = None) -> bool:
    """Recompute the truth value from the symbolic scene; True iff it agrees.

    Uses the record's own k by default; pass `k` to re-judge under a
    different threshold (e.g. the sharp 0.29). Only positive-form records
    carry a threshold judgment.
    """
    if datapoint.form != "positive":
        raise ValueError("recheck_truth requires a positive-form datapoint")
    k_value = datapoint.k_used if k is None else float(k)
    if k_value is None:
        raise ValueError("no k to judge with")

    members = [
        obj
        for obj in datapoint.scene.objects
        if datapoint.head_noun == OBJECT_HEAD or obj.shape == datapoint.head_noun
    ]
    target = next((obj for obj in members if obj.id == datapoint.target_id), None)
    if target is None:
        raise LoaderError(
            f"target object {datapoint.target_id} is not in the reference set "
            f"of scene {datapoint.scene.scene_id}"
        )

    areas = [obj.size_label**2 for obj in members]
    smallest, largest = min(areas), max(areas)
    if smallest == largest:
        raise DegenerateReferenceError(
            f"all reference areas equal {largest} in scene {datapoint.scene.scene_id}"
        )

    threshold = largest - k_value * (largest - smallest)
    is_big = target.size_label**2 >= threshold
    judged = is_big if datapoint.adjective == "big" else not is_big
    return judged == datapoint.truth
