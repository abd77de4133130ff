import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # tests/oracles.py

from factgraph.gateway import Gateway, MockBackend
from factgraph.llm import LlmClient
from factgraph.mocking import ScriptedResponder
from factgraph.promptgen import TemplateLibrary

FIXTURES = Path(__file__).parent / "fixtures"


def make_scripted_client(fixtures=None, cache_dir=None) -> LlmClient:
    backend = MockBackend(fixtures=fixtures or {}, fallback=ScriptedResponder())
    return LlmClient(
        gateway=Gateway(backend, cache_dir=cache_dir),
        templates=TemplateLibrary(),
    )


@pytest.fixture
def scripted_client() -> LlmClient:
    return make_scripted_client()


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def load_jsonl(path):
    return [
        json.loads(line)
        for line in Path(path).read_text("utf-8").splitlines()
        if line.strip()
    ]
