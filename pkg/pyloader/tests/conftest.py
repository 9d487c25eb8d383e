"""Fixtures that obtain manifests the way any external consumer would:
by driving the generator's command-line interface."""
from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest


def run_generator_cli(*args):
    env = dict(os.environ)
    env.pop("MALEVIC_SEED", None)
    proc = subprocess.run(
        [sys.executable, "-m", "malevic.cli", *map(str, args)],
        capture_output=True,
        text=True,
        env=env,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def smoke_manifest(tmp_path_factory):
    out = tmp_path_factory.mktemp("loader-smoke")
    run_generator_cli(
        "generate", "--task", "pos1", "--size", "160", "--seed", "0", "--out", out
    )
    return out / "pos1.jsonl"


@pytest.fixture(scope="session")
def setpos_manifest(tmp_path_factory):
    out = tmp_path_factory.mktemp("loader-setpos")
    run_generator_cli(
        "generate", "--task", "setpos", "--size", "160", "--seed", "0", "--out", out
    )
    return out / "setpos.jsonl"


@pytest.fixture(scope="session")
def rendered_manifest(tmp_path_factory, smoke_manifest):
    """A two-record manifest with its images actually rasterized."""
    out = tmp_path_factory.mktemp("loader-rendered")
    lines = smoke_manifest.read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    header["total"] = 2
    path = out / "tiny.jsonl"
    path.write_text(
        "\n".join([json.dumps(header, separators=(",", ":"))] + lines[1:3]) + "\n",
        encoding="utf-8",
    )
    run_generator_cli("render", "--manifest", path)
    return path


@pytest.fixture(scope="session")
def pos_manifest(tmp_path_factory):
    """The full POS dataset at its default 20 000-record size."""
    out = tmp_path_factory.mktemp("loader-pos")
    run_generator_cli("generate", "--task", "pos", "--seed", "0", "--out", out)
    return out / "pos.jsonl"
