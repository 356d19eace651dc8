import json
import os
import pathlib

import pytest

SOURCE = pathlib.Path(os.environ.get("METAMORPH_SOURCE", pathlib.Path(__file__).resolve().parents[2]))


@pytest.fixture(scope="session")
def source_dir():
    return SOURCE


@pytest.fixture(scope="session")
def schema():
    def load(name):
        return json.loads((SOURCE / "schemas" / f"{name}.schema.json").read_text())

    return load


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("METAMORPH_CLI")
    if not path:
        pytest.skip("METAMORPH_CLI not set")
    return path
