"""Interpretation strategies and the evaluation report they produce."""
from __future__ import annotations

import pytest

from helpers import make_scene
from malevic import semantics, strategies, verifier
from malevic.strategies import (
    FlipCounts,
    StrategyError,
    Strategy,
    flip_analysis,
    flip_fraction,
    get_strategy,
    predict,
    run_strategy,
)


def test_strategy_lookup_accepts_aliases():
    assert get_strategy("oracle").kind == "OracleRecordedK"
    assert get_strategy("oracle-recorded-k").kind == "OracleRecordedK"
    assert get_strategy("sharp-k").kind == "SharpK"
    assert get_strategy("whole-scene").kind == "WholeSceneThreshold"
    assert get_strategy("REF-SET-MIN-MAX").kind == "RefSetMinMax"
    with pytest.raises(StrategyError):
        get_strategy("guesswork")


def test_random_strategy_requires_a_seed():
    with pytest.raises(StrategyError):
        Strategy(kind="Random")
    assert get_strategy("random").seed == 0  # CLI default
    assert get_strategy("random", seed=7).seed == 7


# --- exact baselines on balanced data ---------------------------------------------


def test_oracle_is_perfect_on_generated_data(pos_smoke, sup1_smoke, setpos_smoke):
    for manifest in (pos_smoke, sup1_smoke, setpos_smoke):
        assert run_strategy(get_strategy("oracle"), manifest).overall == 1.0


def test_constant_answers_score_exactly_half(pos_smoke, sup1_smoke):
    for manifest in (pos_smoke, sup1_smoke):
        assert run_strategy(get_strategy("always-true"), manifest).overall == 0.5
        assert run_strategy(get_strategy("always-false"), manifest).overall == 0.5


def test_small_bias_is_right_on_exactly_the_small_leaning_types(pos_smoke):
    report = run_strategy(get_strategy("small-bias"), pos_smoke)
    assert report.overall == 0.5
    assert report.per_type["small-true"].accuracy == 1.0
    assert report.per_type["big-false"].accuracy == 1.0
    assert report.per_type["big-true"].accuracy == 0.0
    assert report.per_type["small-false"].accuracy == 0.0


def test_random_strategy_is_seed_stable(pos_smoke):
    a = run_strategy(get_strategy("random", seed=3), pos_smoke).overall
    b = run_strategy(get_strategy("random", seed=3), pos_smoke).overall
    assert a == b
    assert 0.3 < a < 0.7


# --- report structure ---------------------------------------------------------------


def test_report_cells_tally_up(pos_smoke):
    report = run_strategy(get_strategy("sharp-k"), pos_smoke)
    assert report.n == pos_smoke.total
    assert sum(cell.n for cell in report.per_type.values()) == report.n
    assert sum(cell.n for cell in report.per_shape.values()) == report.n
    correct = sum(cell.correct for cell in report.per_type.values())
    assert report.overall == correct / report.n
    assert len(report.distance_bins) == 20
    assert report.distance_bins[0].lo == -1.0
    assert report.distance_bins[-1].hi == 1.0
    binned = sum(b.correct + b.wrong for b in report.distance_bins)
    assert binned == report.n  # positive-form records all carry a distance


def test_split_filtering(pos_smoke):
    report = run_strategy(get_strategy("oracle"), pos_smoke, "test")
    assert report.n == len(pos_smoke.for_split("test")) == 16
    assert report.split == "test"


def test_sharp_k_errors_are_exactly_the_flips(pos_smoke, setpos_smoke):
    for manifest in (pos_smoke, setpos_smoke):
        report = run_strategy(get_strategy("sharp-k"), manifest)
        wrong = report.n - round(report.overall * report.n)
        flips = flip_analysis(manifest)
        assert wrong == sum(c.different for c in flips.values())


def test_flip_counts_cover_every_record(pos_smoke):
    flips = flip_analysis(pos_smoke)
    assert set(flips) <= {"big-true", "big-false", "small-true", "small-false"}
    assert sum(c.same + c.different for c in flips.values()) == pos_smoke.total


def test_flip_fraction_arithmetic():
    assert flip_fraction({"big-true": FlipCounts(same=3, different=1)}) == 0.25
    assert flip_fraction({}) == 0.0


def test_oracle_distance_profile_has_no_errors(pos_smoke):
    records = pos_smoke.records
    preds = strategies.predict_records(get_strategy("oracle"), records)
    bins = strategies.distance_profile(pos_smoke, preds)
    assert all(b.wrong == 0 for b in bins)
    assert sum(b.correct for b in bins) == len(records)


def test_stats_rows_describe_the_manifest(pos_smoke):
    label_rows = strategies.label_histogram_rows(pos_smoke)
    assert sum(count for _, _, count in label_rows) == pos_smoke.total
    assert all(40 <= label <= 110 for label, _, _ in label_rows)
    k_rows = strategies.k_distribution_rows(pos_smoke)
    assert len(k_rows) == pos_smoke.total
    assert all(0.01 < k < 0.49 for _, _, k, _ in k_rows)
    assert all(agreement in ("same", "different") for _, _, _, agreement in k_rows)


# --- single-query behavior ------------------------------------------------------------


def _q(color, shape, adjective, head):
    form = "positive" if adjective in ("big", "small") else "superlative"
    return verifier.ParsedQuery(
        color=color, shape_mention=shape, head=head, adjective=adjective, form=form
    )


def test_minmax_strategies_differ_on_subset_queries():
    # both square extremes sit strictly inside the scene-wide range
    scene = make_scene(
        [
            ("square", "red", 100),
            ("square", "blue", 60),
            ("circle", "green", 120),
            ("circle", "yellow", 40),
        ]
    )
    q = _q("red", "square", "big", "square")
    assert predict(get_strategy("ref-set-min-max"), scene, q) is True
    assert predict(get_strategy("scene-min-max"), scene, q) is False
    q_small = _q("blue", "square", "small", "square")
    assert predict(get_strategy("ref-set-min-max"), scene, q_small) is True
    assert predict(get_strategy("scene-min-max"), scene, q_small) is False


def test_whole_scene_threshold_ignores_the_subset_reading():
    # among squares the 100 judges big (cutoff 8144), against the whole
    # scene it judges small (cutoff 11268)
    scene = make_scene(
        [("square", "red", 100), ("square", "blue", 60), ("circle", "green", 120)]
    )
    q = _q("red", "square", "big", "square")
    assert predict(get_strategy("whole-scene-threshold"), scene, q) is False
    assert predict(get_strategy("sharp-k"), scene, q) is True


def test_oracle_requires_the_recorded_k():
    scene = make_scene([("square", "red", 100), ("circle", "green", 60)])
    with pytest.raises(ValueError):
        predict(get_strategy("oracle"), scene, _q("red", "square", "big", "object"))
