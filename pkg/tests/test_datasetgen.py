"""Dataset assembly: balance, pairing, splits, serialization, validation."""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import json

import pytest

from malevic import datasetgen, scenegen, tasks
from malevic.datasetgen import (
    DatasetGenError,
    Manifest,
    SchemaError,
    SplitError,
    build_compositional,
    build_dataset,
    build_hard,
    dumps,
    load,
    loads,
    scene_from_dict,
    serialize,
    split,
    validate_manifest,
)

SMOKE = 160


# --- balance and structure ---------------------------------------------------------


def test_every_class_gets_an_equal_share(pos_smoke):
    counts = pos_smoke.class_counts()
    assert len(counts) == 80
    assert set(counts.values()) == {SMOKE // 80}
    assert pos_smoke.total == SMOKE
    assert [rec.index for rec in pos_smoke.records] == list(range(SMOKE))


def test_records_come_in_sibling_pairs(pos_smoke):
    by_pair: dict[str, list] = {}
    for rec in pos_smoke.records:
        by_pair.setdefault(rec.pair_id, []).append(rec)
    assert all(len(pair) == 2 for pair in by_pair.values())
    for a, b in by_pair.values():
        assert a.scene == b.scene
        assert a.split == b.split
        assert {a.sentence.truth, b.sentence.truth} == {True, False}
        assert a.sentence.k_used == b.sentence.k_used
        assert a.sentence.target_id == b.sentence.target_id
        diff = [
            (x, y)
            for x, y in zip(a.sentence.text.split(), b.sentence.text.split())
            if x != y
        ]
        assert len(diff) == 1  # the flipped adjective, nothing else


def test_split_totals_and_cohesion(pos_smoke):
    sizes = {s: len(pos_smoke.for_split(s)) for s in ("train", "val", "test")}
    assert sizes == {"train": 128, "val": 16, "test": 16}
    # per-class counts per split stay within one of each other
    for split_name in ("train", "val", "test"):
        counts = pos_smoke.class_counts(split_name)
        assert max(counts.values()) - min(counts.values()) <= 1


def test_scene_ids_and_image_paths_are_systematic(pos_smoke):
    for rec in pos_smoke.records:
        assert rec.scene.scene_id.startswith("pos-0-")
        assert rec.image == f"images/POS/{rec.scene.scene_id}.png"
        assert rec.scene.task == "POS"
    scene_ids = {rec.scene.scene_id for rec in pos_smoke.records}
    assert len(scene_ids) == SMOKE // 2  # one scene per sibling pair


def test_odd_per_class_counts_cannot_be_split():
    with pytest.raises(SplitError):
        build_dataset("pos1", 80, master_seed=0)


def test_unbalanced_totals_are_rejected():
    with pytest.raises(datasetgen.BalanceError):
        build_dataset("pos", 150, master_seed=0)  # not divisible by 80


def test_resplitting_with_other_fractions(pos_smoke):
    resplit = split(pos_smoke, (3, 1, 1))
    sizes = {s: len(resplit.for_split(s)) for s in ("train", "val", "test")}
    assert sizes == {"train": 96, "val": 32, "test": 32}
    assert resplit.total == SMOKE
    # sibling pairs still travel together
    by_pair: dict[str, set] = {}
    for rec in resplit.records:
        by_pair.setdefault(rec.pair_id, set()).add(rec.split)
    assert all(len(splits) == 1 for splits in by_pair.values())


def test_fractions_must_divide_the_total(pos_smoke):
    with pytest.raises(SplitError):
        split(pos_smoke, (7, 2, 2))
    with pytest.raises(SplitError):
        split(pos_smoke, (0, 1, 1))


# --- determinism ----------------------------------------------------------------


def test_same_seed_reproduces_the_manifest(pos_smoke):
    again = build_dataset("pos", SMOKE, master_seed=0)
    assert again == pos_smoke
    assert hashlib.sha256(dumps(again).encode()).hexdigest() == hashlib.sha256(
        dumps(pos_smoke).encode()
    ).hexdigest()


def test_different_seeds_differ(pos_smoke):
    other = build_dataset("pos", SMOKE, master_seed=1)
    assert other != pos_smoke


def test_parallel_build_equals_serial(pos_smoke):
    parallel = build_dataset("pos", SMOKE, master_seed=0, jobs=2)
    assert parallel == pos_smoke


# --- hard variants -----------------------------------------------------------------


def test_hard_sets_are_test_only_and_balanced(pos_hard_smoke):
    assert pos_hard_smoke.task_name == "POS_HARD"
    assert all(rec.split == "test" for rec in pos_hard_smoke.records)
    counts = pos_hard_smoke.class_counts()
    assert len(counts) == 80 and set(counts.values()) == {SMOKE // 80}
    for rec in pos_hard_smoke.records:
        labels = [o.size_label for o in rec.scene.objects]
        target = rec.scene.object_by_id(rec.sentence.target_id)
        assert min(labels) < target.size_label < max(labels)


def test_setpos_hard_keeps_queries_inside_the_subset_range():
    manifest = build_hard("setpos", SMOKE, master_seed=0)
    assert manifest.task_name == "SETPOS_HARD"
    for rec in manifest.records:
        target = rec.scene.object_by_id(rec.sentence.target_id)
        ref_labels = [
            o.size_label for o in rec.scene.objects if o.shape == target.shape
        ]
        assert min(ref_labels) < target.size_label < max(ref_labels)


def test_build_hard_only_accepts_tasks_with_hard_variants():
    with pytest.raises(DatasetGenError, match="no hard variant"):
        build_hard("sup1", SMOKE, master_seed=0)


# --- compositional pair ------------------------------------------------------------


def test_compositional_smoke_construction():
    seen, unseen = build_compositional(master_seed=0, seen_total=400, unseen_total=80)
    assert seen.task_name == "COMP_SEEN" and unseen.task_name == "COMP_UNSEEN"
    assert seen.total == 400 and unseen.total == 80

    seen_sizes = {s: len(seen.for_split(s)) for s in ("train", "val", "test")}
    assert seen_sizes == {"train": 320, "val": 40, "test": 40}
    assert all(rec.split == "test" for rec in unseen.records)

    assert {
        (rec.sentence.adjective, rec.sentence.target_shape) for rec in seen.records
    } == set(tasks.SEEN_PAIRS)
    assert {
        (rec.sentence.adjective, rec.sentence.target_shape) for rec in unseen.records
    } == set(tasks.UNSEEN_PAIRS)

    # unpaired on purpose: a sibling with the flipped adjective would leak
    # the complementary pairing across the seen/unseen boundary
    for manifest in (seen, unseen):
        pair_ids = [rec.pair_id for rec in manifest.records]
        assert len(set(pair_ids)) == len(pair_ids)
        counts = manifest.class_counts()
        assert len(counts) == 40 and len(set(counts.values())) == 1


# --- serialization -----------------------------------------------------------------


def test_dumps_loads_round_trip(pos_smoke, sup1_smoke):
    for manifest in (pos_smoke, sup1_smoke):
        clone = loads(dumps(manifest))
        assert clone == manifest
        assert dumps(clone) == dumps(manifest)


def test_serialize_and_load_files(tmp_path, setpos_smoke):
    path = tmp_path / "setpos.jsonl"
    serialize(setpos_smoke, path)
    assert load(path) == setpos_smoke


def test_header_carries_identity_and_config(pos_smoke):
    header = json.loads(dumps(pos_smoke).splitlines()[0])
    assert header["format"] == datasetgen.MANIFEST_FORMAT
    assert header["schema_version"] == datasetgen.SCHEMA_VERSION
    assert header["task"] == "POS"
    assert header["total"] == SMOKE
    assert header["master_seed"] == 0
    for key in ("mu", "sigma", "k_low", "k_high", "canvas_size",
                "middle_query_rate", "borderline_query_rate",
                "exclude_scene_extremes", "exclude_refset_extremes"):
        assert key in header["config"]


def test_scene_dict_round_trip(pos_smoke):
    scene = pos_smoke.records[0].scene
    clone = scene_from_dict(datasetgen._scene_dict(scene))
    assert clone == scene


def _mutate_record_line(manifest, line_index: int, mutate) -> str:
    """Apply `mutate` to one record's dict in the serialized text."""
    lines = dumps(manifest).splitlines()
    data = json.loads(lines[line_index])
    mutate(data)
    lines[line_index] = json.dumps(data, separators=(",", ":"))
    return "\n".join(lines) + "\n"


def test_schema_errors_carry_line_and_field():
    manifest = build_dataset("pos", SMOKE, master_seed=0)

    text = dumps(manifest)
    truncated = text[: text.rfind("}")]  # cut the last record's JSON short
    with pytest.raises(SchemaError) as err:
        loads(truncated)
    assert err.value.line == SMOKE + 1
    assert "invalid JSON" in str(err.value)

    def drop_k(data):
        del data["sentence"]["k_used"]

    with pytest.raises(SchemaError) as err:
        loads(_mutate_record_line(manifest, 1, drop_k))
    assert err.value.line == 2
    assert "k_used" in str(err.value)

    def int_truth(data):
        data["sentence"]["truth"] = 1

    with pytest.raises(SchemaError) as err:
        loads(_mutate_record_line(manifest, 1, int_truth))
    assert "truth" in str(err.value)

    def bad_split(data):
        data["split"] = "dev"

    with pytest.raises(SchemaError) as err:
        loads(_mutate_record_line(manifest, 1, bad_split))
    assert "split" in str(err.value)


def test_schema_errors_on_structural_damage(pos_smoke):
    text = dumps(pos_smoke)
    lines = text.splitlines()

    with pytest.raises(SchemaError):
        loads("")

    blank_inside = "\n".join(lines[:3] + [""] + lines[3:]) + "\n"
    with pytest.raises(SchemaError) as err:
        loads(blank_inside)
    assert "blank" in str(err.value)

    header = json.loads(lines[0])
    header["total"] = SMOKE + 1
    wrong_total = "\n".join([json.dumps(header)] + lines[1:]) + "\n"
    with pytest.raises(SchemaError):
        loads(wrong_total)

    header = json.loads(lines[0])
    header["format"] = "something-else"
    wrong_format = "\n".join([json.dumps(header)] + lines[1:]) + "\n"
    with pytest.raises(SchemaError):
        loads(wrong_format)


# --- validation --------------------------------------------------------------------


def test_clean_manifests_validate(pos_smoke, sup1_smoke, pos_hard_smoke):
    for manifest in (pos_smoke, sup1_smoke, pos_hard_smoke):
        assert validate_manifest(manifest, render_sample=3) == []


def test_validator_catches_label_tampering(pos_smoke):
    corrupt = copy.deepcopy(pos_smoke)
    rec = corrupt.records[0]
    rec.sentence = dataclasses.replace(rec.sentence, truth=not rec.sentence.truth)
    problems = validate_manifest(corrupt)
    assert problems
    assert any("truth" in p or rec.scene.scene_id in p for p in problems)


def test_validator_catches_geometry_tampering(pos_smoke):
    corrupt = copy.deepcopy(pos_smoke)
    corrupt.records[0].scene.objects[0].pixel_area += 500
    assert validate_manifest(corrupt)


def test_validator_catches_split_tampering(pos_smoke):
    corrupt = copy.deepcopy(pos_smoke)
    moved = next(rec for rec in corrupt.records if rec.split == "train")
    moved.split = "val"
    assert validate_manifest(corrupt)
