import json
import pathlib

import pytest

DATA_DIR = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def goldens() -> dict:
    return json.loads((DATA_DIR / "goldens.json").read_text())
