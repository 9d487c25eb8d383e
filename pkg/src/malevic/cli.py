"""Command-line entry point.

Subcommands: generate | render | verify | eval | stats | validate.
Options resolve as: command-line flag, then MALEVIC_SEED (for the seed),
then the --config TOML file, then built-in defaults.

Exit codes group error families:
  0 success          4 generation retries exhausted   7 validation failed
  2 usage            5 placement/render failure       8 parse/evaluation error
  3 configuration    6 manifest schema/build error
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import multiprocessing
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import (
    __version__,
    datasetgen,
    langgen,
    renderer,
    scenegen,
    semantics,
    strategies,
    tasks,
    verifier,
)

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_EXHAUSTED = 4
EXIT_RENDER = 5
EXIT_SCHEMA = 6
EXIT_VALIDATION = 7
EXIT_EVAL = 8

SEED_ENV_VAR = "MALEVIC_SEED"

DEFAULT_SIZES = {
    "SUP1": 20000,
    "POS1": 20000,
    "POS": 20000,
    "SETPOS": 20000,
    "POS_HARD": 2000,
    "SETPOS_HARD": 2000,
    "COMP_SEEN": 10000,
    "COMP_UNSEEN": 1000,
}

_UNSPLIT_TASKS = ("POS_HARD", "SETPOS_HARD", "COMP_UNSEEN")


class ConfigError(ValueError):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"bad config file {path}: {err}") from None


def _resolve_seed(flag_value: int | None, config: dict) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR}={env!r} is not an integer") from None
    seed = config.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"config seed must be a non-negative integer, got {seed!r}")
    return seed


def _threshold_config(config: dict) -> semantics.ThresholdConfig:
    kwargs = {}
    for name in ("mu", "sigma", "k_low", "k_high"):
        if name in config:
            value = config[name]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"config {name} must be a number, got {value!r}")
            kwargs[name] = float(value)
    try:
        return semantics.ThresholdConfig(**kwargs)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _resolve_jobs(flag_value: int | None, config: dict) -> int:
    jobs = flag_value if flag_value is not None else config.get("jobs")
    if jobs is None:
        jobs = os.cpu_count() or 1
    if not isinstance(jobs, int) or isinstance(jobs, bool) or jobs < 1:
        raise ConfigError(f"jobs must be a positive integer, got {jobs!r}")
    return jobs


def _manifest_path(out_dir: Path, task_name: str) -> Path:
    return out_dir / f"{task_name.lower()}.jsonl"


def _print_summary(manifest: datasetgen.Manifest, path: Path) -> None:
    counts = manifest.class_counts()
    split_counts = {s: len(manifest.for_split(s)) for s in datasetgen.SPLIT_NAMES}
    labels = sorted(
        {
            rec.scene.object_by_id(rec.sentence.target_id).size_label
            for rec in manifest.records
        }
    )
    digest = hashlib.sha256(datasetgen.dumps(manifest).encode()).hexdigest()
    print(f"wrote {path}")
    print(f"  task            {manifest.task_name}")
    print(f"  records         {manifest.total}")
    print(f"  classes         {len(counts)} x {min(counts.values())}"
          f"..{max(counts.values())} records")
    print(f"  splits          " + " ".join(f"{s}={n}" for s, n in split_counts.items()))
    print(f"  queried labels  {labels[0]}..{labels[-1]}")
    if manifest.task.form == "positive":
        flips = strategies.flip_analysis(manifest)
        print(f"  sharp-k flips   {strategies.flip_fraction(flips):.4f}")
    print(f"  sha256          {digest}")


def _cmd_generate(args) -> int:
    config = _load_config(args.config)
    seed = _resolve_seed(args.seed, config)
    jobs = _resolve_jobs(args.jobs, config)
    thr = _threshold_config(config)
    out_dir = Path(args.out or config.get("out", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)

    task_arg = args.task or config.get("task")
    if task_arg is None:
        raise ConfigError("generate requires --task (or a config file with task=...)")

    if task_arg.strip().lower() == "comp":
        seen_total = args.size or config.get("size", DEFAULT_SIZES["COMP_SEEN"])
        seen, unseen = datasetgen.build_compositional(
            seed,
            seen_total=seen_total,
            unseen_total=max(seen_total // 10, len(tasks.record_classes(tasks.TASKS["COMP_UNSEEN"]))),
            threshold_config=thr,
            jobs=jobs,
        )
        for manifest in (seen, unseen):
            path = _manifest_path(out_dir, manifest.task_name)
            datasetgen.serialize(manifest, path)
            _print_summary(manifest, path)
        return EXIT_OK

    task = tasks.get_task(task_arg)
    total = args.size or config.get("size", DEFAULT_SIZES[task.name])
    if task.name in _UNSPLIT_TASKS:
        fractions = None
    elif task.name == "COMP_SEEN":
        fractions = (8, 1, 1)
    else:
        fractions = datasetgen.DEFAULT_FRACTIONS
    manifest = datasetgen.build_dataset(
        task,
        total,
        seed,
        threshold_config=thr,
        split_fractions=fractions,
        jobs=jobs,
    )
    path = _manifest_path(out_dir, task.name)
    datasetgen.serialize(manifest, path)
    _print_summary(manifest, path)
    return EXIT_OK


def _render_worker(payload) -> str:
    scene_dict, png_path, downscale_path = payload
    scene = datasetgen.scene_from_dict(scene_dict)
    image = renderer.render(scene)
    Path(png_path).parent.mkdir(parents=True, exist_ok=True)
    renderer.save_png(image, png_path)
    if downscale_path is not None:
        Path(downscale_path).parent.mkdir(parents=True, exist_ok=True)
        renderer.save_png(renderer.downscale(image), downscale_path)
    return png_path


def _cmd_render(args) -> int:
    config = _load_config(args.config)
    jobs = _resolve_jobs(args.jobs, config)
    manifest = datasetgen.load(args.manifest)
    out_dir = Path(args.out or config.get("out") or Path(args.manifest).parent)

    seen: dict[str, tuple] = {}
    for rec in manifest.records:
        if rec.scene.scene_id in seen:
            continue
        png_path = out_dir / rec.image
        small_path = (
            str(out_dir / "images224" / Path(rec.image).relative_to("images"))
            if args.downscale
            else None
        )
        seen[rec.scene.scene_id] = (
            datasetgen._scene_dict(rec.scene),
            str(png_path),
            small_path,
        )

    payloads = list(seen.values())
    if jobs > 1 and len(payloads) > jobs:
        with multiprocessing.Pool(jobs) as pool:
            for _ in pool.imap_unordered(_render_worker, payloads, chunksize=8):
                pass
    else:
        for payload in payloads:
            _render_worker(payload)
    print(f"rendered {len(payloads)} scenes to {out_dir / 'images' / manifest.task_name}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    with open(args.scene, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    recorded_k = None
    if isinstance(data, dict) and "scene" in data:
        scene = datasetgen.scene_from_dict(data["scene"])
        sentence = data.get("sentence")
        if isinstance(sentence, dict):
            recorded_k = sentence.get("k_used")
    else:
        scene = datasetgen.scene_from_dict(data)

    query = verifier.parse_sentence(args.sentence)
    k_mode = args.k or ("recorded" if recorded_k is not None else "sharp")
    truth, judgment = verifier.evaluate_with_judgment(
        scene, query, k_mode, recorded_k=recorded_k, seed=args.seed
    )
    print("true" if truth else "false")
    target = verifier.resolve_target(scene, query)
    print(f"  target object   {target}")
    if judgment is not None:
        ref = verifier.reference_set_for_query(scene, query)
        print(f"  reference areas {sorted(ref.areas)}")
        print(f"  k               {judgment.k:.6f} ({k_mode})")
        print(f"  threshold       {judgment.threshold:.2f}")
        print(f"  norm distance   {judgment.norm_distance:+.4f}")
    else:
        ref = semantics.whole_scene(scene)
        biggest, smallest = semantics.superlative(ref)
        print(f"  scene extremes  biggest={biggest} smallest={smallest}")
    return EXIT_OK


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _cmd_eval(args) -> int:
    config = _load_config(args.config)
    manifest = datasetgen.load(args.manifest)
    strategy = strategies.get_strategy(args.strategy, seed=args.seed, k=args.k)
    split = None if args.split == "all" else args.split
    records = manifest.for_split(split)
    if not records:
        raise ConfigError(f"split {args.split!r} of {args.manifest} is empty")

    predictions = strategies.predict_records(strategy, records)
    report = strategies.score(
        records,
        predictions,
        strategy_label=strategy.label,
        task=manifest.task_name,
        split=args.split,
    )

    out_dir = Path(
        args.out
        or config.get("out")
        or Path(args.manifest).parent
        / f"eval-{manifest.task_name.lower()}-{args.strategy}-{args.split}"
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.txt").write_text(report.summary_text() + "\n", encoding="utf-8")
    _write_csv(
        out_dir / "report.csv",
        ["section", "key", "metric", "value"],
        report.to_rows(),
    )
    _write_csv(
        out_dir / "predictions.csv",
        ["index", "prediction", "correct"],
        [
            (rec.index, int(pred), int(pred == rec.sentence.truth))
            for rec, pred in zip(records, predictions)
        ],
    )
    print(report.summary_text())
    print(f"\nreports written to {out_dir}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    manifest = datasetgen.load(args.manifest)
    out_dir = Path(args.out or Path(args.manifest).parent / f"stats-{manifest.task_name.lower()}")
    out_dir.mkdir(parents=True, exist_ok=True)

    _write_csv(
        out_dir / "label_histogram.csv",
        ["size_label", "sentence_type", "count"],
        strategies.label_histogram_rows(manifest),
    )
    written = ["label_histogram.csv"]

    if manifest.task.form == "positive":
        _write_csv(
            out_dir / "k_distribution.csv",
            ["index", "sentence_type", "k", "sharp_agreement"],
            strategies.k_distribution_rows(manifest),
        )
        written.append("k_distribution.csv")

    if args.predictions:
        by_index = {}
        with open(args.predictions, "r", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                by_index[int(row["index"])] = bool(int(row["prediction"]))
        records = [rec for rec in manifest.records if rec.index in by_index]
        preds = [by_index[rec.index] for rec in records]
        bins = strategies.distance_profile_records(records, preds)
        _write_csv(
            out_dir / "distance_profile.csv",
            ["bin_lo", "bin_hi", "correct", "wrong"],
            [(b.lo, b.hi, b.correct, b.wrong) for b in bins],
        )
        written.append("distance_profile.csv")

    print(f"wrote {', '.join(written)} to {out_dir}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    manifest = datasetgen.load(args.manifest)
    problems = datasetgen.validate_manifest(
        manifest, render_sample=args.render_sample, sample_seed=args.sample_seed
    )
    if not problems:
        print(f"PASS: {manifest.total} records, all invariants hold")
        return EXIT_OK
    print(f"FAIL: {len(problems)} problem(s)")
    for problem in problems[:50]:
        print(f"  {problem}")
    if len(problems) > 50:
        print(f"  ... and {len(problems) - 50} more")
    return EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="malevic",
        description="Generate, render, verify, and evaluate size-adjective datasets.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    task_names = [t.lower().replace("_", "-") for t in tasks.TASKS] + ["comp"]

    p = sub.add_parser("generate", help="build a dataset manifest")
    p.add_argument("--task", choices=task_names, help="dataset task")
    p.add_argument("--size", type=int, help="total records (task default otherwise)")
    p.add_argument("--seed", type=int, help="master seed (beats MALEVIC_SEED)")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--jobs", type=int, help="parallel workers")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("render", help="rasterize a manifest's scenes to PNG")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="output root (default: manifest directory)")
    p.add_argument("--downscale", action="store_true", help="also write 224x224 copies")
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("verify", help="evaluate one sentence against one scene")
    p.add_argument("--scene", required=True, help="JSON file: a scene or a manifest record")
    p.add_argument("--sentence", required=True)
    p.add_argument("--k", choices=["recorded", "sharp", "resample"])
    p.add_argument("--seed", type=int, help="seed for --k resample")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("eval", help="run an interpretation strategy over a manifest")
    p.add_argument("--strategy", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test", "all"])
    p.add_argument("--k", type=float, help="k for sharp-k/whole-scene strategies")
    p.add_argument("--seed", type=int, help="seed for the random strategy")
    p.add_argument("--out", help="report directory")
    p.add_argument("--config", help="TOML config file")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("stats", help="emit plot-ready CSV tables")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out")
    p.add_argument("--predictions", help="predictions.csv from eval, for distance bins")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("validate", help="re-run all invariants over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--render-sample", type=int, default=25,
                   help="scenes to render for the round-trip check (0 disables)")
    p.add_argument("--sample-seed", type=int, default=0)
    p.set_defaults(func=_cmd_validate)

    return parser


_ERROR_EXITS = (
    (scenegen.GenerationExhaustedError, EXIT_EXHAUSTED),
    (scenegen.PlacementError, EXIT_RENDER),
    (renderer.RenderError, EXIT_RENDER),
    (datasetgen.SchemaError, EXIT_SCHEMA),
    (datasetgen.DatasetGenError, EXIT_SCHEMA),
    (verifier.ParseError, EXIT_EVAL),
    (verifier.ResolutionError, EXIT_EVAL),
    (semantics.SemanticsError, EXIT_EVAL),
    (semantics.KSamplingError, EXIT_EVAL),
    (strategies.StrategyError, EXIT_CONFIG),
    (tasks.UnknownTaskError, EXIT_CONFIG),
    (langgen.LangGenError, EXIT_EVAL),
    (ConfigError, EXIT_CONFIG),
    (FileNotFoundError, EXIT_CONFIG),
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as err:  # noqa: BLE001 - map error families to exit codes
        for err_type, code in _ERROR_EXITS:
            if isinstance(err, err_type):
                print(f"error: {err}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
