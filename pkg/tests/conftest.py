import json
from pathlib import Path

import pytest

from aeroqa.engine import EngineConfig, QaEngine, build_artifacts
from aeroqa.embeddings import HashedNgramProvider

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def built(tmp_path_factory):
    out = tmp_path_factory.mktemp("artifacts")
    result = build_artifacts(DATA_DIR / "reports", DATA_DIR / "patterns.json",
                             DATA_DIR / "taxonomy.txt", out)
    assert not result.errors
    return out, result


@pytest.fixture(scope="session")
def engine(built) -> QaEngine:
    out, _ = built
    return QaEngine.from_data_dir(out, EngineConfig())


@pytest.fixture(scope="session")
def provider() -> HashedNgramProvider:
    return HashedNgramProvider()


@pytest.fixture(scope="session")
def testset_rows():
    return json.loads((DATA_DIR / "testset.json").read_text(encoding="utf-8"))
