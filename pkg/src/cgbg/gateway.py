"""Chat-completion access: live HTTP client, deterministic mock, record/replay.

All gateways share one contract: generate(prompt, config) returns exactly
config.n_samples completions in sample order. The live client retries
transient provider failures with exponential backoff and is throttled by a
token bucket; the mock and replay gateways are pure and need no network.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .prompting import Message

BASE_URL_ENV_VAR = "CGBG_LLM_BASE_URL"
API_KEY_ENV_VAR = "CGBG_LLM_API_KEY"

DEFAULT_MAX_TOKENS = 512
DEFAULT_REFUSAL_TEXT = "I cannot write code for that."


class GatewayError(RuntimeError):
    pass


class AuthenticationError(GatewayError):
    pass


class RateLimitExhaustedError(GatewayError):
    pass


class ProviderTimeoutError(GatewayError):
    pass


class MalformedReplyError(GatewayError):
    pass


class MissingFixtureError(GatewayError):
    """Strict mock/replay had no entry for the prompt's fingerprint."""


@dataclass
class SamplingConfig:
    model_id: str
    temperature: float = 0.0
    n_samples: int = 1
    max_tokens: int = DEFAULT_MAX_TOKENS
    seed: int | None = None

    def __post_init__(self):
        self.temperature = float(self.temperature)
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0.0, 2.0]")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass
class CompletionResult:
    text: str
    finish_reason: str = "stop"  # stop | length | error
    provider_latency_ms: int = 0
    sample_index: int = 0


def fingerprint(prompt: Sequence[Message], config: SamplingConfig) -> str:
    """Stable content hash of the request; identical inputs hash identically
    across runs and platforms. Message order matters; the seed does not."""
    canonical = {
        "messages": [[m.role, m.content] for m in prompt],
        "model_id": config.model_id,
        "temperature": config.temperature,
        "n_samples": config.n_samples,
        "max_tokens": config.max_tokens,
    }
    encoded = json.dumps(canonical, sort_keys=True, ensure_ascii=True, separators=(",", ":"))
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def _cycle(texts: Sequence[str], n: int) -> list[str]:
    return [texts[i % len(texts)] for i in range(n)]


def mock_generate(
    prompt: Sequence[Message],
    config: SamplingConfig,
    script: Mapping[str, Sequence[str]],
    strict: bool = True,
    default_texts: Sequence[str] | None = None,
) -> list[CompletionResult]:
    """Scripted completions, keyed by fingerprint(prompt, config).

    Shorter scripts cycle deterministically up to n_samples. In strict mode
    an unknown fingerprint is an error; otherwise ``default_texts`` (or a
    canned refusal) stands in.
    """
    key = fingerprint(prompt, config)
    texts = script.get(key)
    if texts is None or len(texts) == 0:
        if strict:
            raise MissingFixtureError(f"no scripted completion for fingerprint {key}")
        texts = list(default_texts) if default_texts else [DEFAULT_REFUSAL_TEXT]
    return [
        CompletionResult(text=t, sample_index=i)
        for i, t in enumerate(_cycle(texts, config.n_samples))
    ]


class MockGateway:
    """Pure, lock-free gateway serving a fingerprint-keyed script."""

    def __init__(
        self,
        script: Mapping[str, Sequence[str]] | None = None,
        strict: bool = True,
        default_texts: Sequence[str] | None = None,
    ):
        self.script = dict(script or {})
        self.strict = strict
        self.default_texts = default_texts

    @classmethod
    def from_file(cls, path, strict: bool = True) -> "MockGateway":
        with open(path, encoding="utf-8") as fh:
            return cls(script=json.load(fh), strict=strict)

    def generate(self, prompt: Sequence[Message], config: SamplingConfig) -> list[CompletionResult]:
        return mock_generate(
            prompt, config, self.script, strict=self.strict, default_texts=self.default_texts
        )


class ReplayGateway:
    """Serve recorded completions from a cache directory, no network."""

    def __init__(self, cache_dir, strict: bool = True):
        self.cache_dir = Path(cache_dir)
        self.strict = strict
        if not self.cache_dir.is_dir():
            raise MissingFixtureError(f"replay cache directory {self.cache_dir} does not exist")

    def generate(self, prompt: Sequence[Message], config: SamplingConfig) -> list[CompletionResult]:
        key = fingerprint(prompt, config)
        path = self.cache_dir / key
        if not path.is_file():
            if self.strict:
                raise MissingFixtureError(f"no recorded completions for fingerprint {key}")
            texts = [DEFAULT_REFUSAL_TEXT]
        else:
            texts = json.loads(path.read_text(encoding="utf-8"))
        return [
            CompletionResult(text=t, sample_index=i)
            for i, t in enumerate(_cycle(texts, config.n_samples))
        ]


class RecordingGateway:
    """Wrap another gateway and persist each fingerprint's completions once."""

    def __init__(self, inner, cache_dir):
        self.inner = inner
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def generate(self, prompt: Sequence[Message], config: SamplingConfig) -> list[CompletionResult]:
        key = fingerprint(prompt, config)
        path = self.cache_dir / key
        if path.is_file():
            texts = json.loads(path.read_text(encoding="utf-8"))
            return [
                CompletionResult(text=t, sample_index=i)
                for i, t in enumerate(_cycle(texts, config.n_samples))
            ]
        results = self.inner.generate(prompt, config)
        with self._lock:
            if not path.is_file():
                payload = json.dumps([r.text for r in results], ensure_ascii=True, indent=2)
                path.write_text(payload, encoding="utf-8")
        return results


class TokenBucket:
    """Thread-safe token bucket; bounds calls per unit time."""

    def __init__(self, capacity: float, refill_per_second: float, clock=time.monotonic):
        if capacity <= 0 or refill_per_second <= 0:
            raise ValueError("capacity and refill_per_second must be positive")
        self.capacity = float(capacity)
        self.refill_per_second = float(refill_per_second)
        self._clock = clock
        self._tokens = float(capacity)
        self._last = clock()
        self._lock = threading.Lock()

    def _refill(self):
        now = self._clock()
        self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.refill_per_second)
        self._last = now

    def try_acquire(self, tokens: float = 1.0) -> bool:
        with self._lock:
            self._refill()
            if self._tokens >= tokens:
                self._tokens -= tokens
                return True
            return False

    def acquire(self, tokens: float = 1.0, timeout: float | None = None, sleep=time.sleep) -> bool:
        deadline = None if timeout is None else self._clock() + timeout
        while True:
            if self.try_acquire(tokens):
                return True
            if deadline is not None and self._clock() >= deadline:
                return False
            sleep(0.05)


_TRANSIENT_STATUS = {429, 500, 502, 503, 504}


class HttpGateway:
    """Live chat-completions client (messages[], temperature, n, max_tokens).

    Endpoint and key come from CGBG_LLM_BASE_URL / CGBG_LLM_API_KEY unless
    given explicitly. Transient failures (429, 5xx, timeouts, connection
    resets) are retried with exponential backoff up to max_attempts.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        session=None,
        max_attempts: int = 4,
        backoff_base_s: float = 0.5,
        request_timeout_s: float = 60.0,
        rate_limiter: TokenBucket | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV_VAR, "")).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV_VAR, "")
        self.max_attempts = max_attempts
        self.backoff_base_s = backoff_base_s
        self.request_timeout_s = request_timeout_s
        self.rate_limiter = rate_limiter
        self._sleep = sleep
        if session is None:
            import requests

            session = requests.Session()
        self.session = session

    def generate(self, prompt: Sequence[Message], config: SamplingConfig) -> list[CompletionResult]:
        if not self.api_key:
            raise AuthenticationError(
                f"no API key configured; set {API_KEY_ENV_VAR} or pass api_key"
            )
        if not self.base_url:
            raise GatewayError(f"no provider base URL configured; set {BASE_URL_ENV_VAR}")
        if not prompt:
            raise ValueError("prompt must be non-empty")
        payload = {
            "model": config.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in prompt],
            "temperature": config.temperature,
            "n": config.n_samples,
            "max_tokens": config.max_tokens,
        }
        if config.seed is not None:
            payload["seed"] = config.seed

        import requests

        last_error: Exception | None = None
        last_status: int | None = None
        for attempt in range(self.max_attempts):
            if attempt > 0:
                self._sleep(self.backoff_base_s * (2 ** (attempt - 1)))
            if self.rate_limiter is not None:
                self.rate_limiter.acquire(timeout=self.request_timeout_s)
            started = time.monotonic()
            try:
                response = self.session.post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    timeout=self.request_timeout_s,
                )
            except requests.Timeout as exc:
                last_error, last_status = exc, None
                continue
            except requests.RequestException as exc:
                last_error, last_status = exc, None
                continue
            latency_ms = int((time.monotonic() - started) * 1000)
            if response.status_code in (401, 403):
                raise AuthenticationError(f"provider rejected credentials ({response.status_code})")
            if response.status_code in _TRANSIENT_STATUS:
                last_error = GatewayError(f"provider returned {response.status_code}")
                last_status = response.status_code
                continue
            if response.status_code != 200:
                raise GatewayError(
                    f"provider returned {response.status_code}: {response.text[:200]}"
                )
            return self._parse_reply(response, config, latency_ms)

        if last_status == 429:
            raise RateLimitExhaustedError(
                f"rate limited after {self.max_attempts} attempts"
            ) from last_error
        if isinstance(last_error, requests.Timeout):
            raise ProviderTimeoutError(
                f"provider timed out after {self.max_attempts} attempts"
            ) from last_error
        raise GatewayError(
            f"provider unavailable after {self.max_attempts} attempts: {last_error}"
        ) from last_error

    def _parse_reply(self, response, config: SamplingConfig, latency_ms: int) -> list[CompletionResult]:
        try:
            data = response.json()
            choices = data["choices"]
            results = [
                CompletionResult(
                    text=choice["message"]["content"],
                    finish_reason=choice.get("finish_reason") or "stop",
                    provider_latency_ms=latency_ms,
                    sample_index=i,
                )
                for i, choice in enumerate(choices)
            ]
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedReplyError(f"cannot parse provider reply: {exc}") from exc
        if len(results) != config.n_samples:
            raise MalformedReplyError(
                f"provider returned {len(results)} choices, expected {config.n_samples}"
            )
        return results
