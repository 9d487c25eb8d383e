"""Shared fixtures: small smoke-scale manifests and hand-built scenes.

Smoke manifests are 160 records (2 per class) — the smallest size whose
pair-level splits stay balanced — so the whole unit suite builds datasets
in well under a second.  Tests that mutate records must deepcopy first:
fixtures are session-scoped and shared.
"""
from __future__ import annotations

import pytest

from malevic import datasetgen

SMOKE_SIZE = 160


@pytest.fixture(scope="session")
def sup1_smoke() -> datasetgen.Manifest:
    return datasetgen.build_dataset("sup1", SMOKE_SIZE, master_seed=0)


@pytest.fixture(scope="session")
def pos1_smoke() -> datasetgen.Manifest:
    return datasetgen.build_dataset("pos1", SMOKE_SIZE, master_seed=0)


@pytest.fixture(scope="session")
def pos_smoke() -> datasetgen.Manifest:
    return datasetgen.build_dataset("pos", SMOKE_SIZE, master_seed=0)


@pytest.fixture(scope="session")
def setpos_smoke() -> datasetgen.Manifest:
    return datasetgen.build_dataset("setpos", SMOKE_SIZE, master_seed=0)


@pytest.fixture(scope="session")
def pos_hard_smoke() -> datasetgen.Manifest:
    return datasetgen.build_hard("pos", SMOKE_SIZE, master_seed=0)
