"""Secondary acceptance: the live service driven through the eval pipeline.

Starts a real uvicorn server on a loopback port (stub backend; the sandbox
has no model-hub access) and runs the toolkit's ``eval`` command against
it over the bundled 50-pair fixture.  A real-checkpoint variant runs only
when SCORER_TEST_CHECKPOINT points at a local 3-way NLI model.
"""

import json
import os
import socket
import threading
import time
from pathlib import Path

import pytest
import requests
import uvicorn

from scorer_service import StubModel, create_app

REPO_ROOT = Path(__file__).resolve().parents[2]
FIXTURE = REPO_ROOT / "tests" / "fixtures" / "eval50.jsonl"


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class LiveServer:
    def __init__(self, app):
        self.port = free_port()
        config = uvicorn.Config(
            app, host="127.0.0.1", port=self.port, log_level="error"
        )
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    @property
    def endpoint(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def __enter__(self):
        self.thread.start()
        deadline = time.time() + 15
        while time.time() < deadline:
            try:
                response = requests.get(f"{self.endpoint}/healthz", timeout=1)
                if response.status_code == 200:
                    return self
            except requests.RequestException:
                pass
            time.sleep(0.05)
        raise RuntimeError("service did not become healthy in time")

    def __exit__(self, *exc):
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture(scope="module")
def live_stub_server():
    with LiveServer(create_app(StubModel())) as server:
        yield server


def test_healthz_live(live_stub_server):
    body = requests.get(f"{live_stub_server.endpoint}/healthz", timeout=5).json()
    assert body == {"status": "ready", "model_name": "stub"}


def test_eval_pipeline_against_live_service(live_stub_server, tmp_path):
    from factgraph.cli import main as factgraph_main

    config = tmp_path / "factgraph.toml"
    config.write_text(
        "seed = 3\n"
        '[backend]\nkind = "mock"\nscripted = true\n'
        '[scorer]\nkind = "http"\nendpoint = "'
        + live_stub_server.endpoint
        + '"\n',
        encoding="utf-8",
    )
    report_path = tmp_path / "report.json"
    code = factgraph_main(
        [
            "--config", str(config),
            "eval",
            "--in", str(FIXTURE),
            "--out", str(report_path),
            "--budget", "60",
        ]
    )
    assert code == 0
    report = json.loads(report_path.read_text("utf-8"))
    assert report["dataset"] == "fixture"
    assert 0.0 <= report["theta"] <= 1.0
    assert 0.0 <= report["bacc"] <= 1.0
    confusion = report["confusion"]
    assert confusion["tp"] + confusion["fn"] == 25
    assert confusion["tn"] + confusion["fp"] == 25
    scores_path = Path(report["per_pair_scores"])
    rows = [json.loads(l) for l in scores_path.read_text("utf-8").splitlines()]
    assert len(rows) == 50
    assert all(0.0 < row["score"] < 1.0 for row in rows)
    assert report["scorer"].startswith("http:")


def test_eval_report_deterministic_against_live_service(live_stub_server, tmp_path):
    from factgraph.cli import main as factgraph_main

    config = tmp_path / "factgraph.toml"
    config.write_text(
        "seed = 3\n"
        '[backend]\nkind = "mock"\nscripted = true\n'
        '[scorer]\nkind = "http"\nendpoint = "'
        + live_stub_server.endpoint
        + '"\n',
        encoding="utf-8",
    )
    reports = []
    for name in ("r1.json", "r2.json"):
        out = tmp_path / name
        code = factgraph_main(
            [
                "--config", str(config),
                "eval",
                "--in", str(FIXTURE),
                "--out", str(out),
                "--scores-out", str(tmp_path / (name + ".scores")),
                "--budget", "60",
            ]
        )
        assert code == 0
        payload = json.loads(out.read_text("utf-8"))
        payload.pop("per_pair_scores")
        reports.append(payload)
    assert reports[0] == reports[1]


@pytest.mark.skipif(
    not os.environ.get("SCORER_TEST_CHECKPOINT"),
    reason="set SCORER_TEST_CHECKPOINT to a local 3-way NLI checkpoint "
    "(no model-hub access in this environment)",
)
def test_eval_against_real_nli_checkpoint(tmp_path):
    from factgraph.cli import main as factgraph_main
    from scorer_service.models import load_backend

    backend = load_backend(model=os.environ["SCORER_TEST_CHECKPOINT"])
    with LiveServer(create_app(backend)) as server:
        config = tmp_path / "factgraph.toml"
        config.write_text(
            "seed = 3\n"
            '[backend]\nkind = "mock"\nscripted = true\n'
            '[scorer]\nkind = "http"\nendpoint = "'
            + server.endpoint
            + '"\n',
            encoding="utf-8",
        )
        report_path = tmp_path / "report.json"
        code = factgraph_main(
            [
                "--config", str(config),
                "eval",
                "--in", str(FIXTURE),
                "--out", str(report_path),
            ]
        )
        assert code == 0
        report = json.loads(report_path.read_text("utf-8"))
        assert 0.0 <= report["bacc"] <= 1.0
