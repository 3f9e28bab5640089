"""Provider-agnostic chat/vision completion client with deterministic caching.

The wire protocol is OpenAI-style chat completions. Responses are cached on
disk keyed by a content hash of (model, prompt, images, temperature), so a
repeated call never touches the network and whole runs replay offline.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import requests

logger = logging.getLogger(__name__)


class TransportError(Exception):
    """Provider unreachable or retries exhausted."""


class ProtocolError(Exception):
    """Provider returned a payload we cannot interpret."""


@dataclass
class ModelConfig:
    endpoint: str = ""
    model: str = "stub"
    api_key: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 2048
    timeout_s: float = 120.0
    max_retries: int = 3
    max_in_flight: int = 4

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

    @classmethod
    def from_env(cls, prefix: str = "LECTUREQG") -> "ModelConfig":
        return cls(
            endpoint=os.environ.get(f"{prefix}_ENDPOINT", ""),
            model=os.environ.get(f"{prefix}_MODEL", "stub"),
            api_key=os.environ.get(f"{prefix}_API_KEY", ""),
        )


@dataclass
class ChatExchange:
    prompt: str
    response: str
    model: str
    cache_key: str
    images: list[str] = field(default_factory=list)
    latency_s: float = 0.0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    from_cache: bool = False


def cache_key(model: str, prompt: str, images: list[str], temperature: float) -> str:
    payload = json.dumps(
        {"model": model, "prompt": prompt, "images": images,
         "temperature": temperature},
        sort_keys=True, ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ChatClient:
    """Completion client with disk cache, retries, and bounded concurrency.

    `provider` may be a callable `(prompt, images) -> str` for stubbed or
    recorded runs; otherwise HTTP requests go to `config.endpoint`.
    """

    def __init__(
        self,
        config: ModelConfig,
        cache_dir: Optional[str | Path] = None,
        provider: Optional[Callable[[str, list[str]], str]] = None,
    ):
        self.config = config
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.provider = provider
        self._semaphore = threading.Semaphore(config.max_in_flight)
        self._sleep = time.sleep  # test seam

    def _cache_path(self, key: str) -> Optional[Path]:
        if self.cache_dir is None:
            return None
        return self.cache_dir / self.config.model / f"{key}.json"

    def complete(self, prompt: str, images: Optional[list[str]] = None) -> ChatExchange:
        images = images or []
        key = cache_key(self.config.model, prompt, images, self.config.temperature)
        path = self._cache_path(key)
        if path is not None and path.exists():
            cached = json.loads(path.read_text(encoding="utf-8"))
            return ChatExchange(
                prompt=prompt, response=cached["response"],
                model=self.config.model, cache_key=key, images=images,
                from_cache=True,
            )
        start = time.monotonic()
        with self._semaphore:
            if self.provider is not None:
                response = self.provider(prompt, images)
                usage = {}
            else:
                response, usage = self._http_complete(prompt, images)
        latency = time.monotonic() - start
        if path is not None:
            _atomic_write(path, json.dumps(
                {"prompt": prompt, "images": images, "response": response,
                 "model": self.config.model, "temperature": self.config.temperature},
                ensure_ascii=False,
            ))
        return ChatExchange(
            prompt=prompt, response=response, model=self.config.model,
            cache_key=key, images=images, latency_s=latency,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )

    def _http_complete(self, prompt: str, images: list[str]) -> tuple[str, dict]:
        if not self.config.endpoint:
            raise TransportError("no endpoint configured and no provider stub")
        content: object = prompt
        if images:
            parts = [{"type": "text", "text": prompt}]
            for ref in images:
                parts.append({"type": "image_url",
                              "image_url": {"url": _image_url(ref)}})
            content = parts
        body = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": content}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                resp = requests.post(self.config.endpoint, json=body,
                                     headers=headers,
                                     timeout=self.config.timeout_s)
            except requests.RequestException as exc:
                last_error = exc
                self._backoff(attempt)
                continue
            if resp.status_code in (429, 500, 502, 503, 504):
                last_error = TransportError(f"HTTP {resp.status_code}")
                self._backoff(attempt)
                continue
            if resp.status_code != 200:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:500]}")
            try:
                payload = resp.json()
                usage = payload.get("usage", {})
                return payload["choices"][0]["message"]["content"], usage
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ProtocolError(f"malformed provider payload: {exc}") from exc
        raise TransportError(
            f"retries exhausted ({self.config.max_retries}): {last_error}"
        )

    def _backoff(self, attempt: int):
        self._sleep(min(2 ** attempt, 30))


def _image_url(ref: str) -> str:
    if ref.startswith(("http://", "https://", "data:")):
        return ref
    data = Path(ref).read_bytes()
    suffix = Path(ref).suffix.lstrip(".").lower() or "png"
    return f"data:image/{suffix};base64,{base64.b64encode(data).decode('ascii')}"
