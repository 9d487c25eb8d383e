"""Symbolic interpretation strategies and evaluation reports.

Each strategy answers template queries from the scene alone: the two
oracle-style strategies reuse the verifier (with the recorded or the sharp
k), the shortcut strategies implement the cheats a model might learn
(whole-scene threshold, min/max lookups, answer biases), and the trivial
baselines calibrate chance.  Reports break accuracy down by sentence type,
shape, and distance from the threshold, and count how often the recorded
ground truth flips under the sharp standard k.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from . import semantics, verifier
from .datasetgen import DatasetRecord, Manifest

STRATEGY_KINDS = (
    "OracleRecordedK",
    "SharpK",
    "WholeSceneThreshold",
    "RefSetMinMax",
    "SceneMinMax",
    "AlwaysTrue",
    "AlwaysFalse",
    "Random",
    "SmallBias",
)


def _kebab(name: str) -> str:
    out = []
    for i, ch in enumerate(name):
        if ch.isupper() and i > 0:
            out.append("-")
        out.append(ch.lower())
    return "".join(out)


STRATEGY_ALIASES = {_kebab(kind): kind for kind in STRATEGY_KINDS}
STRATEGY_ALIASES.update(
    {
        "oracle": "OracleRecordedK",
        "sharp": "SharpK",
        "whole-scene": "WholeSceneThreshold",
        "refset-min-max": "RefSetMinMax",
        "scene-min-max": "SceneMinMax",
    }
)


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class Strategy:
    kind: str
    seed: int | None = None  # Random only
    k: float = semantics.SHARP_K  # SharpK / WholeSceneThreshold probe value

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise StrategyError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "Random" and self.seed is None:
            raise StrategyError("Random strategy requires a seed")

    @property
    def label(self) -> str:
        if self.kind == "Random":
            return f"Random(seed={self.seed})"
        if self.kind in ("SharpK", "WholeSceneThreshold") and self.k != semantics.SHARP_K:
            return f"{self.kind}(k={self.k})"
        return self.kind


def get_strategy(name: str, *, seed: int | None = None, k: float | None = None) -> Strategy:
    """Look up a strategy by canonical or kebab-case CLI name."""
    kind = STRATEGY_ALIASES.get(name.strip().lower(), name)
    if kind not in STRATEGY_KINDS:
        raise StrategyError(
            f"unknown strategy {name!r}; choose from "
            + ", ".join(sorted(STRATEGY_ALIASES))
        )
    if kind == "Random" and seed is None:
        seed = 0
    return Strategy(kind=kind, seed=seed, k=semantics.SHARP_K if k is None else k)


def _is_max_query(adjective: str) -> bool:
    return adjective in ("big", "biggest")


def predict(
    strategy: Strategy,
    scene,
    query: verifier.ParsedQuery,
    recorded_k: float | None = None,
) -> bool:
    """Answer one query under a strategy.  Deterministic given the seed."""
    kind = strategy.kind
    if kind == "AlwaysTrue":
        return True
    if kind == "AlwaysFalse":
        return False
    if kind == "SmallBias":
        return not _is_max_query(query.adjective)
    if kind == "Random":
        token = f"{scene.scene_id}|{query.color}|{query.shape_mention}|{query.adjective}|{query.head}"
        rng = np.random.default_rng([strategy.seed, zlib.crc32(token.encode())])
        return bool(rng.random() < 0.5)

    if kind == "OracleRecordedK":
        return verifier.evaluate(scene, query, "recorded", recorded_k=recorded_k)
    if kind == "SharpK":
        if query.form == "superlative":
            return verifier.evaluate(scene, query, "sharp")
        return verifier.evaluate(scene, query, "recorded", recorded_k=strategy.k)

    target = verifier.resolve_target(scene, query)
    if kind == "WholeSceneThreshold":
        if query.form == "superlative":
            return verifier.evaluate(scene, query, "sharp")
        ref = semantics.whole_scene(scene)
        judgment = semantics.judge(target, ref, semantics.fixed_k(strategy.k))
        return judgment.is_big if query.adjective == "big" else not judgment.is_big

    if kind in ("RefSetMinMax", "SceneMinMax"):
        if kind == "SceneMinMax":
            ref = semantics.whole_scene(scene)
        else:
            ref = verifier.reference_set_for_query(scene, query)
        area = ref.area_of(target)
        return area == (ref.max_area if _is_max_query(query.adjective) else ref.min_area)

    raise StrategyError(f"unknown strategy kind {kind!r}")


# --- reports ---------------------------------------------------------------


@dataclass
class Cell:
    n: int = 0
    correct: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.n if self.n else float("nan")


@dataclass
class FlipCounts:
    same: int = 0
    different: int = 0


@dataclass
class DistanceBin:
    lo: float
    hi: float
    correct: int = 0
    wrong: int = 0


@dataclass
class EvalReport:
    strategy: str
    task: str
    split: str
    n: int
    overall: float
    per_type: dict[str, Cell]
    per_shape: dict[str, Cell]
    distance_bins: list[DistanceBin]  # signed norm distance, 20 bins over [-1, 1]
    flips: dict[str, FlipCounts]  # per sentence type, recorded vs sharp truth

    @property
    def flip_fraction(self) -> float:
        same = sum(c.same for c in self.flips.values())
        diff = sum(c.different for c in self.flips.values())
        total = same + diff
        return diff / total if total else 0.0

    def summary_text(self) -> str:
        lines = [
            f"strategy   {self.strategy}",
            f"task       {self.task}",
            f"split      {self.split}",
            f"records    {self.n}",
            f"accuracy   {self.overall:.4f}",
            "",
            "per sentence type:",
        ]
        for name in sorted(self.per_type):
            cell = self.per_type[name]
            lines.append(f"  {name:<16} {cell.accuracy:.4f}  (n={cell.n})")
        lines.append("per shape:")
        for name in sorted(self.per_shape):
            cell = self.per_shape[name]
            lines.append(f"  {name:<16} {cell.accuracy:.4f}  (n={cell.n})")
        if self.flips:
            lines.append(
                f"truth flips under sharp k: {self.flip_fraction:.4f} of records"
            )
        return "\n".join(lines)

    def to_rows(self) -> list[tuple]:
        """Long-format rows (section, key, metric, value) for CSV emission."""
        rows = [
            ("overall", "", "n", self.n),
            ("overall", "", "accuracy", self.overall),
        ]
        for name in sorted(self.per_type):
            cell = self.per_type[name]
            rows.append(("sentence_type", name, "n", cell.n))
            rows.append(("sentence_type", name, "accuracy", cell.accuracy))
        for name in sorted(self.per_shape):
            cell = self.per_shape[name]
            rows.append(("shape", name, "n", cell.n))
            rows.append(("shape", name, "accuracy", cell.accuracy))
        for b in self.distance_bins:
            key = f"[{b.lo:.1f},{b.hi:.1f})"
            rows.append(("distance_bin", key, "correct", b.correct))
            rows.append(("distance_bin", key, "wrong", b.wrong))
        for name in sorted(self.flips):
            counts = self.flips[name]
            rows.append(("flip", name, "same", counts.same))
            rows.append(("flip", name, "different", counts.different))
        return rows


def sentence_type(record: DatasetRecord) -> str:
    s = record.sentence
    return f"{s.adjective}-{str(s.truth).lower()}"


def _signed_bin_index(distance: float) -> int:
    clipped = min(max(distance, -1.0), 1.0)
    idx = int((clipped + 1.0) // 0.1)
    return min(idx, 19)


def predict_records(strategy: Strategy, records: list[DatasetRecord]) -> list[bool]:
    out = []
    for rec in records:
        query = verifier.parse_sentence(rec.sentence.text)
        out.append(predict(strategy, rec.scene, query, recorded_k=rec.sentence.k_used))
    return out


def score(
    records: list[DatasetRecord],
    predictions: list[bool],
    *,
    strategy_label: str,
    task: str = "",
    split: str = "",
) -> EvalReport:
    if len(records) != len(predictions):
        raise ValueError("records and predictions must align")
    if not records:
        raise ValueError("cannot score an empty record list")

    per_type: dict[str, Cell] = {}
    per_shape: dict[str, Cell] = {}
    bins = [DistanceBin(lo=-1.0 + i * 0.1, hi=-1.0 + (i + 1) * 0.1) for i in range(20)]
    flips: dict[str, FlipCounts] = {}
    n_correct = 0

    for rec, pred in zip(records, predictions):
        truth = rec.sentence.truth
        correct = pred == truth
        n_correct += correct

        t = sentence_type(rec)
        cell = per_type.setdefault(t, Cell())
        cell.n += 1
        cell.correct += correct

        cell = per_shape.setdefault(rec.sentence.target_shape, Cell())
        cell.n += 1
        cell.correct += correct

        if rec.sentence.form == "positive":
            query = verifier.parse_sentence(rec.sentence.text)
            _, judgment = verifier.evaluate_with_judgment(
                rec.scene, query, "recorded", recorded_k=rec.sentence.k_used
            )
            b = bins[_signed_bin_index(judgment.norm_distance)]
            if correct:
                b.correct += 1
            else:
                b.wrong += 1
            sharp_truth = verifier.evaluate(rec.scene, query, "sharp")
            counts = flips.setdefault(t, FlipCounts())
            if sharp_truth == truth:
                counts.same += 1
            else:
                counts.different += 1

    return EvalReport(
        strategy=strategy_label,
        task=task,
        split=split,
        n=len(records),
        overall=n_correct / len(records),
        per_type=per_type,
        per_shape=per_shape,
        distance_bins=bins,
        flips=flips,
    )


def run_strategy(
    strategy: Strategy, manifest: Manifest, split: str | None = None
) -> EvalReport:
    """Evaluate a strategy over one split (or the whole manifest)."""
    records = manifest.for_split(split)
    if not records:
        raise ValueError(f"no records in split {split!r} of task {manifest.task_name}")
    predictions = predict_records(strategy, records)
    return score(
        records,
        predictions,
        strategy_label=strategy.label,
        task=manifest.task_name,
        split=split or "all",
    )


def distance_profile(
    manifest: Manifest,
    predictions: list[bool],
    split: str | None = None,
) -> list[DistanceBin]:
    """Correct/wrong counts per |norm_distance| bin of width 0.1.

    Requires a positive-form manifest: distance to a threshold is undefined
    for superlatives.
    """
    return distance_profile_records(manifest.for_split(split), predictions)


def distance_profile_records(
    records: list[DatasetRecord], predictions: list[bool]
) -> list[DistanceBin]:
    if len(records) != len(predictions):
        raise ValueError("records and predictions must align")
    bins = [DistanceBin(lo=i * 0.1, hi=(i + 1) * 0.1) for i in range(10)]
    for rec, pred in zip(records, predictions):
        if rec.sentence.form != "positive":
            raise ValueError("distance_profile requires a positive-form manifest")
        query = verifier.parse_sentence(rec.sentence.text)
        _, judgment = verifier.evaluate_with_judgment(
            rec.scene, query, "recorded", recorded_k=rec.sentence.k_used
        )
        idx = min(int(abs(judgment.norm_distance) // 0.1), 9)
        if pred == rec.sentence.truth:
            bins[idx].correct += 1
        else:
            bins[idx].wrong += 1
    return bins


def flip_analysis(
    manifest: Manifest, split: str | None = None
) -> dict[str, FlipCounts]:
    """Per sentence type, how many records keep/change truth under sharp k."""
    records = manifest.for_split(split)
    flips: dict[str, FlipCounts] = {}
    for rec in records:
        if rec.sentence.form != "positive":
            raise ValueError("flip_analysis requires a positive-form manifest")
        query = verifier.parse_sentence(rec.sentence.text)
        sharp_truth = verifier.evaluate(rec.scene, query, "sharp")
        counts = flips.setdefault(sentence_type(rec), FlipCounts())
        if sharp_truth == rec.sentence.truth:
            counts.same += 1
        else:
            counts.different += 1
    return flips


def flip_fraction(flips: dict[str, FlipCounts]) -> float:
    same = sum(c.same for c in flips.values())
    diff = sum(c.different for c in flips.values())
    total = same + diff
    return diff / total if total else 0.0


# --- figure-ready tables ---------------------------------------------------


def label_histogram_rows(manifest: Manifest) -> list[tuple[int, str, int]]:
    """(size_label, sentence_type, count) over queried objects."""
    counts: dict[tuple[int, str], int] = {}
    for rec in manifest.records:
        label = rec.scene.object_by_id(rec.sentence.target_id).size_label
        key = (label, sentence_type(rec))
        counts[key] = counts.get(key, 0) + 1
    return [(label, t, n) for (label, t), n in sorted(counts.items())]


def k_distribution_rows(manifest: Manifest) -> list[tuple[int, str, float, str]]:
    """(record index, sentence_type, k, same|different) for positive records."""
    rows = []
    for rec in manifest.records:
        if rec.sentence.form != "positive":
            raise ValueError("k distribution requires a positive-form manifest")
        query = verifier.parse_sentence(rec.sentence.text)
        sharp_truth = verifier.evaluate(rec.scene, query, "sharp")
        tag = "same" if sharp_truth == rec.sentence.truth else "different"
        rows.append((rec.index, sentence_type(rec), rec.sentence.k_used, tag))
    return rows
