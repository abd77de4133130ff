import json

import pytest
import requests

from factgraph.errors import BackendError, BackendUnavailable
from factgraph.gateway import (
    CompletionRequest,
    Gateway,
    HttpBackend,
    MockBackend,
    RetryPolicy,
    cache_key,
    prompt_digest,
)


def request(prompt="hello", **kwargs):
    defaults = dict(model="m", temperature=0.0, max_tokens=16, request_tag="t")
    defaults.update(kwargs)
    return CompletionRequest(prompt=prompt, **defaults)


class CountingBackend:
    name = "counting"

    def __init__(self, text="out", failures=0, exc=None):
        self.calls = 0
        self.text = text
        self.failures = failures
        self.exc = exc or requests.ConnectionError("boom")

    def complete(self, req):
        self.calls += 1
        if self.calls <= self.failures:
            raise self.exc
        return self.text


class TestCacheKey:
    def test_equal_requests_equal_digests(self):
        assert cache_key(request()) == cache_key(request())

    def test_one_byte_difference_changes_digest(self):
        assert cache_key(request("hello")) != cache_key(request("hello!"))

    def test_format_is_fixed_length_hex(self):
        digest = cache_key(request())
        assert len(digest) == 64
        assert all(c in "0123456789abcdef" for c in digest)

    def test_temperature_in_key(self):
        assert cache_key(request(temperature=0.0)) != cache_key(request(temperature=0.7))

    def test_tag_not_in_key(self):
        assert cache_key(request(request_tag="a")) == cache_key(request(request_tag="b"))


class TestRequestValidation:
    def test_empty_prompt_rejected(self):
        with pytest.raises(ValueError):
            request("")

    def test_max_tokens_positive(self):
        with pytest.raises(ValueError):
            request(max_tokens=0)


class TestGatewayCache:
    def test_second_call_hits_cache_one_backend_call(self, tmp_path):
        backend = CountingBackend()
        gateway = Gateway(backend, cache_dir=tmp_path)
        first = gateway.complete(request())
        second = gateway.complete(request())
        assert backend.calls == 1
        assert first.cache_hit is False
        assert second.cache_hit is True
        assert second.text == first.text

    def test_distinct_temperature_distinct_entries(self, tmp_path):
        backend = CountingBackend()
        gateway = Gateway(backend, cache_dir=tmp_path)
        gateway.complete(request(temperature=0.0))
        gateway.complete(request(temperature=0.5))
        assert backend.calls == 2

    def test_cache_survives_gateway_restart(self, tmp_path):
        backend = CountingBackend()
        Gateway(backend, cache_dir=tmp_path).complete(request())
        fresh = Gateway(backend, cache_dir=tmp_path)
        result = fresh.complete(request())
        assert result.cache_hit is True
        assert backend.calls == 1

    def test_cache_file_contents(self, tmp_path):
        backend = CountingBackend(text="stored")
        gateway = Gateway(backend, cache_dir=tmp_path)
        gateway.complete(request())
        files = list(tmp_path.glob("*.json"))
        assert len(files) == 1
        record = json.loads(files[0].read_text("utf-8"))
        assert record["text"] == "stored"
        assert record["digest"] == cache_key(request())
        assert "created_at" in record

    def test_force_refresh_bypasses_read(self, tmp_path):
        backend = CountingBackend()
        gateway = Gateway(backend, cache_dir=tmp_path)
        gateway.complete(request())
        refreshed = gateway.complete(request(), force_refresh=True)
        assert backend.calls == 2
        assert refreshed.cache_hit is False

    def test_memory_cache_without_directory(self):
        backend = CountingBackend()
        gateway = Gateway(backend)
        gateway.complete(request())
        hit = gateway.complete(request())
        assert backend.calls == 1
        assert hit.cache_hit is True


class TestRetries:
    def test_retries_then_succeeds(self):
        backend = CountingBackend(failures=2)
        sleeps = []
        gateway = Gateway(backend, retry=RetryPolicy(), sleep=sleeps.append)
        result = gateway.complete(request())
        assert result.text == "out"
        assert backend.calls == 3
        assert len(sleeps) == 2
        assert sleeps[0] < sleeps[1]  # exponential backoff

    def test_exhausted_retries(self):
        backend = CountingBackend(failures=99)
        gateway = Gateway(backend, sleep=lambda s: None)
        with pytest.raises(BackendUnavailable):
            gateway.complete(request())
        assert backend.calls == 3

    def test_client_error_not_retried(self):
        backend = CountingBackend(failures=99, exc=BackendError("bad", status=400))
        gateway = Gateway(backend, sleep=lambda s: None)
        with pytest.raises(BackendError):
            gateway.complete(request())
        assert backend.calls == 1

    def test_server_error_retried(self):
        backend = CountingBackend(failures=99, exc=BackendError("down", status=503))
        gateway = Gateway(backend, sleep=lambda s: None)
        with pytest.raises(BackendError):
            gateway.complete(request())
        assert backend.calls == 3


class TestMockBackend:
    def test_fixture_passthrough(self):
        fixtures = {prompt_digest("the prompt"): "X"}
        backend = MockBackend(fixtures=fixtures)
        assert backend.complete(request("the prompt")) == "X"

    def test_missing_fixture_without_fallback(self):
        backend = MockBackend()
        with pytest.raises(BackendError):
            backend.complete(request("unseen"))

    def test_fallback_used_when_no_fixture(self):
        backend = MockBackend(fallback=lambda req: f"echo:{req.request_tag}")
        assert backend.complete(request("x", request_tag="qa_to_claim")) == "echo:qa_to_claim"

    def test_fixture_wins_over_fallback(self):
        fixtures = {prompt_digest("p"): "fixed"}
        backend = MockBackend(fixtures=fixtures, fallback=lambda req: "fallback")
        assert backend.complete(request("p")) == "fixed"


class _FakeResponse:
    def __init__(self, status_code=200, payload=None):
        self.status_code = status_code
        self._payload = payload or {}

    def json(self):
        return self._payload


class TestHttpBackend:
    def test_posts_chat_payload_and_reads_choice(self, monkeypatch):
        seen = {}

        class FakeSession:
            def post(self, url, json=None, headers=None, timeout=None):
                seen.update({"url": url, "json": json, "headers": headers})
                return _FakeResponse(
                    payload={"choices": [{"message": {"content": "done"}}]}
                )

        monkeypatch.setenv("FACTCG_API_KEY", "secret")
        backend = HttpBackend("https://api.example/v1/chat", session=FakeSession())
        text = backend.complete(request("ask me"))
        assert text == "done"
        assert seen["url"] == "https://api.example/v1/chat"
        assert seen["json"]["messages"] == [{"role": "user", "content": "ask me"}]
        assert seen["headers"]["Authorization"] == "Bearer secret"

    def test_non_2xx_raises_with_status(self):
        class FakeSession:
            def post(self, *args, **kwargs):
                return _FakeResponse(status_code=429)

        backend = HttpBackend("https://api.example/v1/chat", session=FakeSession())
        with pytest.raises(BackendError) as exc_info:
            backend.complete(request())
        assert exc_info.value.status == 429
