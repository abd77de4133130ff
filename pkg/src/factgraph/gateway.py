"""Completion-backend abstraction with deterministic caching and retries.

Two backends: an HTTP backend speaking a minimal chat-completions JSON
POST, and a mock backend for fully offline runs.  The gateway caches every
successful completion on disk, one JSON file per request digest, so reruns
are free and pipelines are resumable.  Cache writes are atomic per key;
callers may share one gateway across worker threads.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from threading import Lock
from typing import Callable, Optional, Protocol

import requests

from .errors import BackendError, BackendUnavailable

DEFAULT_API_KEY_ENV = "FACTCG_API_KEY"


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 1024
    request_tag: str = ""  # template_id, for audit only

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    backend_name: str
    cache_hit: bool
    latency_ms: float


def cache_key(request: CompletionRequest) -> str:
    """Stable collision-resistant digest of the fields that matter.

    The tag is excluded on purpose: it is audit metadata, not request
    identity.
    """
    payload = json.dumps(
        {
            "model": request.model,
            "prompt": request.prompt,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def prompt_digest(prompt: str) -> str:
    """Digest of the prompt text alone; the mock fixture map is keyed on it."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class Backend(Protocol):
    name: str

    def complete(self, request: CompletionRequest) -> str: ...


class MockBackend:
    """Offline backend: exact fixture map first, scripted fallback second.

    ``fixtures`` maps ``prompt_digest(prompt)`` to the completion text.
    ``fallback`` is an optional ``(request) -> text`` callable for prompts
    not present in the map (see :mod:`factgraph.mocking` for the scripted
    rules used by the bundled fixtures).
    """

    name = "mock"

    def __init__(
        self,
        fixtures: Optional[dict[str, str]] = None,
        fallback: Optional[Callable[[CompletionRequest], str]] = None,
    ):
        self.fixtures = dict(fixtures or {})
        self.fallback = fallback

    def complete(self, request: CompletionRequest) -> str:
        digest = prompt_digest(request.prompt)
        if digest in self.fixtures:
            return self.fixtures[digest]
        if self.fallback is not None:
            return self.fallback(request)
        raise BackendError(
            f"mock backend has no fixture for digest {digest[:12]}... "
            f"(tag={request.request_tag!r})"
        )


class HttpBackend:
    """Minimal chat-completions style JSON POST client."""

    name = "http"

    def __init__(
        self,
        endpoint: str,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        auth_header: str = "Authorization",
        auth_scheme: str = "Bearer",
        timeout_s: float = 60.0,
        session: Optional[requests.Session] = None,
    ):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.auth_header = auth_header
        self.auth_scheme = auth_scheme
        self.timeout_s = timeout_s
        self.session = session or requests.Session()

    def complete(self, request: CompletionRequest) -> str:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "")
        if key:
            value = f"{self.auth_scheme} {key}".strip()
            headers[self.auth_header] = value
        body = {
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        resp = self.session.post(
            self.endpoint, json=body, headers=headers, timeout=self.timeout_s
        )
        if resp.status_code // 100 != 2:
            raise BackendError(
                f"backend returned HTTP {resp.status_code}", status=resp.status_code
            )
        data = resp.json()
        return data["choices"][0]["message"]["content"]


@dataclass
class RetryPolicy:
    attempts: int = 3
    base_delay_s: float = 1.0
    jitter: float = 0.1


class Gateway:
    """Caching front of a completion backend with bounded retries."""

    def __init__(
        self,
        backend: Backend,
        cache_dir: Optional[str | Path] = None,
        retry: RetryPolicy = RetryPolicy(),
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.backend = backend
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.retry = retry
        self._sleep = sleep
        self._memory: dict[str, str] = {}
        self._lock = Lock()
        self._rng = random.Random(0xC0FFEE)

    def _cache_path(self, digest: str) -> Optional[Path]:
        if self.cache_dir is None:
            return None
        return self.cache_dir / f"{digest}.json"

    def _cache_get(self, digest: str) -> Optional[str]:
        with self._lock:
            if digest in self._memory:
                return self._memory[digest]
        path = self._cache_path(digest)
        if path is not None and path.is_file():
            record = json.loads(path.read_text(encoding="utf-8"))
            text = record["text"]
            with self._lock:
                self._memory[digest] = text
            return text
        return None

    def _cache_put(self, digest: str, text: str) -> None:
        with self._lock:
            self._memory[digest] = text
        path = self._cache_path(digest)
        if path is None:
            return
        record = {"digest": digest, "text": text, "created_at": time.time()}
        fd, tmp = tempfile.mkstemp(dir=str(self.cache_dir), suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(record, fh, ensure_ascii=False)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def complete(
        self, request: CompletionRequest, force_refresh: bool = False
    ) -> CompletionResult:
        """Complete a request, consulting the cache unless asked not to.

        ``force_refresh`` skips the cache read (the result still lands in
        the cache); it backs the one-retry policy for ill-formatted
        completions.
        """
        digest = cache_key(request)
        started = time.perf_counter()
        cached = None if force_refresh else self._cache_get(digest)
        if cached is not None:
            return CompletionResult(
                text=cached,
                backend_name=self.backend.name,
                cache_hit=True,
                latency_ms=(time.perf_counter() - started) * 1000.0,
            )
        last_error: Optional[Exception] = None
        for attempt in range(self.retry.attempts):
            try:
                text = self.backend.complete(request)
                self._cache_put(digest, text)
                return CompletionResult(
                    text=text,
                    backend_name=self.backend.name,
                    cache_hit=False,
                    latency_ms=(time.perf_counter() - started) * 1000.0,
                )
            except BackendError as exc:
                # Retry server-side (5xx) failures; give up on the rest.
                if exc.status is not None and 500 <= exc.status < 600:
                    last_error = exc
                else:
                    raise
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = exc
            if attempt < self.retry.attempts - 1:
                delay = self.retry.base_delay_s * (2**attempt)
                delay *= 1.0 + self._rng.uniform(0, self.retry.jitter)
                self._sleep(delay)
        if isinstance(last_error, BackendError):
            raise last_error
        raise BackendUnavailable(
            f"backend failed after {self.retry.attempts} attempts: {last_error}"
        )
