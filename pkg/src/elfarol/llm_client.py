"""Chat-completion client with retries and a bounded concurrent batch.

Each prompt goes out as a single user turn; all agent history travels inside
the prompt text, so the client is stateless.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Sequence

import httpx

from .errors import AuthError, ConfigError, LlmError, ProtocolError, RequestRejected, TransportError

log = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
DEFAULT_MODEL = "gpt-4o-2024-08-06"
ENDPOINT_ENV = "ELFAROL_LLM_ENDPOINT"
API_KEY_ENV = "OPENAI_API_KEY"


@dataclass(frozen=True)
class LlmConfig:
    endpoint_url: str = ""
    model_name: str = DEFAULT_MODEL
    temperature: float = 0.7
    max_tokens: int = 5000
    request_timeout: float = 120.0
    max_retries: int = 5
    max_concurrency: int = 8
    backoff_base: float = 1.0
    backoff_cap: float = 60.0
    api_key_env: str = API_KEY_ENV

    def __post_init__(self) -> None:
        if not self.endpoint_url:
            object.__setattr__(self, "endpoint_url", os.environ.get(ENDPOINT_ENV, DEFAULT_ENDPOINT))
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ConfigError("max_tokens must be >= 1")
        if self.max_retries < 0 or self.max_concurrency < 1:
            raise ConfigError("max_retries must be >= 0 and max_concurrency >= 1")

    @classmethod
    def from_params(cls, params: dict[str, Any]) -> LlmConfig:
        """Build from brain parameters; ``model`` is accepted for ``model_name``."""
        params = dict(params)
        if "model" in params:
            params["model_name"] = params.pop("model")
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in params.items() if k in known})

    def backoff(self, attempt: int) -> float:
        """Delay before retry number ``attempt`` (1-based)."""
        return min(self.backoff_base * 2 ** (attempt - 1), self.backoff_cap)


@dataclass(frozen=True)
class CompletionResult:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency: float = 0.0
    attempts: int = 1


@dataclass
class UsageStats:
    requests: int = 0
    attempts: int = 0
    failures: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def as_dict(self) -> dict[str, int]:
        with self._lock:
            return {f.name: getattr(self, f.name) for f in fields(self) if not f.name.startswith("_")}


class _Retryable(Exception):
    pass


class LlmClient:
    """Thread-safe completion client.

    ``sleep`` and ``transport`` are injectable so tests can run against a
    stub server and a virtual clock.
    """

    def __init__(
        self,
        config: LlmConfig | None = None,
        *,
        api_key: str | None = None,
        transcript_path: str | Path | None = None,
        sleep: Callable[[float], None] = time.sleep,
        transport: httpx.BaseTransport | None = None,
    ):
        self.config = config or LlmConfig()
        key = api_key if api_key is not None else os.environ.get(self.config.api_key_env)
        if not key:
            raise AuthError(f"no API credential: set ${self.config.api_key_env}")
        self._headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
        self._sleep = sleep
        self._http = httpx.Client(timeout=self.config.request_timeout, transport=transport)
        self._transcript = Path(transcript_path) if transcript_path else None
        self._transcript_lock = threading.Lock()
        self.stats = UsageStats()

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> LlmClient:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def _payload(self, prompt: str) -> dict[str, Any]:
        cfg = self.config
        return {
            "model": cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_tokens,
        }

    def _attempt(self, payload: dict[str, Any]) -> tuple[dict[str, Any], str]:
        try:
            resp = self._http.post(self.config.endpoint_url, json=payload, headers=self._headers)
        except (httpx.TimeoutException, httpx.TransportError) as exc:
            raise _Retryable(f"{type(exc).__name__}: {exc}") from exc
        status = resp.status_code
        if status in (401, 403):
            raise AuthError(f"HTTP {status} from {self.config.endpoint_url}")
        if status == 429 or status >= 500:
            raise _Retryable(f"HTTP {status}")
        if status >= 400:
            raise RequestRejected(f"HTTP {status}: {resp.text[:200]}")
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed completion body: {resp.text[:200]!r}") from exc
        if not isinstance(text, str):
            raise ProtocolError("completion content is not text")
        return body, text

    def complete(self, prompt: str) -> CompletionResult:
        payload = self._payload(prompt)
        started = time.monotonic()
        attempts = 0
        try:
            while True:
                attempts += 1
                try:
                    body, text = self._attempt(payload)
                    break
                except _Retryable as exc:
                    if attempts > self.config.max_retries:
                        raise TransportError(
                            f"giving up after {attempts} attempts: {exc}"
                        ) from exc
                    delay = self.config.backoff(attempts)
                    log.warning("transient failure (%s); retry %d in %.1fs", exc, attempts, delay)
                    self._sleep(delay)
        except LlmError as exc:
            self._record(prompt, None, attempts, error=f"{type(exc).__name__}: {exc}")
            with self.stats._lock:
                self.stats.requests += 1
                self.stats.attempts += attempts
                self.stats.failures += 1
            raise
        usage = body.get("usage") or {}
        result = CompletionResult(
            text=text,
            prompt_tokens=max(int(usage.get("prompt_tokens", 0) or 0), 0),
            completion_tokens=max(int(usage.get("completion_tokens", 0) or 0), 0),
            latency=time.monotonic() - started,
            attempts=attempts,
        )
        with self.stats._lock:
            self.stats.requests += 1
            self.stats.attempts += attempts
            self.stats.prompt_tokens += result.prompt_tokens
            self.stats.completion_tokens += result.completion_tokens
        self._record(prompt, body, attempts)
        return result

    def complete_batch(self, prompts: Sequence[str]) -> list[CompletionResult | LlmError]:
        """Complete every prompt; returns only once all have resolved.

        Failed slots hold the exception instead of a result, so ``out[i]``
        always corresponds to ``prompts[i]``.
        """

        def one(prompt: str) -> CompletionResult | LlmError:
            try:
                return self.complete(prompt)
            except LlmError as exc:
                return exc

        if not prompts:
            return []
        workers = min(self.config.max_concurrency, len(prompts))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, prompts))

    def _record(self, prompt: str, body: Any, attempts: int, error: str | None = None) -> None:
        if self._transcript is None:
            return
        entry = {
            "request": self._payload(prompt),
            "response": body,
            "attempts": attempts,
            "error": error,
        }
        line = json.dumps(entry, ensure_ascii=False)
        with self._transcript_lock:
            self._transcript.parent.mkdir(parents=True, exist_ok=True)
            with self._transcript.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def complete(cfg: LlmConfig, prompt: str, **client_kwargs: Any) -> CompletionResult:
    with LlmClient(cfg, **client_kwargs) as client:
        return client.complete(prompt)


def complete_batch(
    cfg: LlmConfig, prompts: Sequence[str], **client_kwargs: Any
) -> list[CompletionResult | LlmError]:
    with LlmClient(cfg, **client_kwargs) as client:
        return client.complete_batch(prompts)
