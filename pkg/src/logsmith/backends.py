"""Model backends: remote HTTP, scripted playback, and failure stubs."""

from __future__ import annotations

import json
import os
import time
from typing import Protocol

import requests

from .errors import BackendError


class ModelBackend(Protocol):
    def complete(self, prompt: str, *, temperature: float = 0.0,
                 timeout: float | None = None) -> str:
        ...


class ScriptedBackend:
    """Deterministic playback of canned responses, consumed in order."""

    def __init__(self, responses: list[str], delay: float = 0.0):
        self._responses = list(responses)
        self._cursor = 0
        self.delay = delay
        self.prompts: list[str] = []

    @property
    def calls(self) -> int:
        return self._cursor

    def complete(self, prompt: str, *, temperature: float = 0.0,
                 timeout: float | None = None) -> str:
        self.prompts.append(prompt)
        if self.delay:
            time.sleep(self.delay)
        if self._cursor >= len(self._responses):
            raise BackendError("scripted backend exhausted")
        response = self._responses[self._cursor]
        self._cursor += 1
        return response


class FlakyBackend:
    """Fails the first `failures` calls, then delegates; `failures=None`
    fails forever (permanent outage stub)."""

    def __init__(self, inner: ModelBackend | None = None,
                 failures: int | None = 1, message: str = "transient transport failure"):
        self.inner = inner
        self.failures = failures
        self.message = message
        self.calls = 0

    def complete(self, prompt: str, *, temperature: float = 0.0,
                 timeout: float | None = None) -> str:
        self.calls += 1
        if self.failures is None or self.calls <= self.failures:
            raise BackendError(self.message)
        if self.inner is None:
            raise BackendError("flaky backend has no delegate")
        return self.inner.complete(prompt, temperature=temperature, timeout=timeout)


class HttpBackend:
    """Chat-completions endpoint client; the API key comes from an env var."""

    def __init__(self, endpoint: str, model: str, api_key_env: str = "",
                 temperature: float = 0.0, timeout: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.temperature = temperature
        self.timeout = timeout

    def complete(self, prompt: str, *, temperature: float | None = None,
                 timeout: float | None = None) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env, "")
            if not key:
                raise BackendError(f"environment variable {self.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature if temperature is None else temperature,
        }
        try:
            response = requests.post(self.endpoint, headers=headers,
                                     data=json.dumps(body),
                                     timeout=timeout or self.timeout)
            response.raise_for_status()
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise BackendError(f"http backend failure: {exc}") from exc


def backend_from_config(config: dict) -> ModelBackend:
    """Build a backend from a config mapping (see README for the key set)."""
    kind = config.get("kind", "http")
    if kind == "scripted":
        return ScriptedBackend(config.get("responses", []),
                               delay=float(config.get("delay", 0.0)))
    if kind == "flaky":
        inner = None
        if "inner" in config:
            inner = backend_from_config(config["inner"])
        failures = config.get("failures", 1)
        return FlakyBackend(inner=inner,
                            failures=None if failures is None else int(failures))
    if kind == "http":
        return HttpBackend(
            endpoint=config["endpoint"],
            model=config.get("model", ""),
            api_key_env=config.get("api_key_env", ""),
            temperature=float(config.get("temperature", 0.0)),
            timeout=float(config.get("timeout", 60.0)),
        )
    raise ValueError(f"unknown backend kind {kind!r}")


def is_offline_backend(config: dict) -> bool:
    """True when a backend config never touches the network."""
    kind = config.get("kind", "http")
    if kind == "scripted":
        return True
    if kind == "flaky":
        inner = config.get("inner")
        return inner is None or is_offline_backend(inner)
    return False
