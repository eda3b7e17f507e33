"""Shared fixtures: fixture databases, mock scripts, and config builders."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import pytest

import scenario_data as sd
from tcsr.config import load_config

DB_BUILDERS = {
    "econ": sd.build_econ_db,
    "concerts": sd.build_concerts_db,
    "cars": sd.build_cars_db,
}


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@pytest.fixture(scope="session")
def db_root(tmp_path_factory) -> Path:
    """Benchmark-layout root: <root>/<db_id>/<db_id>.sqlite for all three dbs."""
    root = tmp_path_factory.mktemp("dbs")
    for name, builder in DB_BUILDERS.items():
        db_dir = root / name
        db_dir.mkdir()
        builder(db_dir / f"{name}.sqlite")
    return root


@pytest.fixture(scope="session")
def econ_db(db_root) -> Path:
    return db_root / "econ" / "econ.sqlite"


@pytest.fixture(scope="session")
def concerts_db(db_root) -> Path:
    return db_root / "concerts" / "concerts.sqlite"


@pytest.fixture(scope="session")
def cars_db(db_root) -> Path:
    return db_root / "cars" / "cars.sqlite"


@pytest.fixture(scope="session")
def script_path(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("scripts") / "script.json"
    path.write_text(json.dumps(sd.full_script(), indent=2), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def dataset_path(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("datasets") / "dataset.json"
    path.write_text(json.dumps(sd.BENCH_DATASET, indent=2), encoding="utf-8")
    return path


@pytest.fixture
def make_config(script_path):
    """RunConfig factory defaulting to the session mock script."""

    def _make(**overrides):
        overrides.setdefault("llm.mock_script", str(script_path))
        return load_config(None, overrides)

    return _make
