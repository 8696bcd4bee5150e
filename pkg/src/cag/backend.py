"""Generation backends and their session lifecycle.

A :class:`Backend` hands out :class:`BackendSession` objects. Each session
owns a token budget; ``generate`` refuses prompts that do not fit what is
left and charges prompt plus response against it. The pipelines open one
session per chunk and always close it.

Mocks are deterministic and need no model. :class:`HttpBackend` talks to a
JSON completion endpoint.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
import os
import re
import socket
import threading
import urllib.error
import urllib.parse
import urllib.request
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING

from cag.cwq import estimate_tokens
from cag.errors import (
    BackendUnavailable,
    ContextOverflow,
    GenerationFailed,
    InvalidConfig,
    SessionClosed,
)

if TYPE_CHECKING:
    from cag.pipeline import PromptTemplate

DEFAULT_MAX_TOKENS = 6144
DEFAULT_HTTP_TIMEOUT = 60.0
HTTP_TIMEOUT_ENV = "CAG_HTTP_TIMEOUT_SECS"


@dataclass
class SessionLimits:
    max_tokens: int = DEFAULT_MAX_TOKENS
    tokens_so_far: int = 0
    top_k: int = 3
    temperature: Fraction = Fraction(1)

    @property
    def tokens_left(self) -> int:
        return self.max_tokens - self.tokens_so_far

    def validate(self) -> "SessionLimits":
        if self.max_tokens <= 0:
            raise InvalidConfig("max_tokens", "must be positive")
        if not 0 <= self.tokens_so_far <= self.max_tokens:
            raise InvalidConfig("tokens_so_far", "must lie in [0, max_tokens]")
        if self.top_k <= 0:
            raise InvalidConfig("top_k", "must be positive")
        if self.temperature < 0:
            raise InvalidConfig("temperature", "must be non-negative")
        return self

    def fresh(self) -> "SessionLimits":
        return SessionLimits(self.max_tokens, 0, self.top_k, self.temperature)


class SessionState(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


_session_ids = itertools.count(1)


class BackendSession:
    """One model conversation with its own token budget."""

    def __init__(self, backend: "Backend", limits: SessionLimits):
        self.id = next(_session_ids)
        self.backend = backend
        self.limits = limits
        self.state = SessionState.OPEN

    @property
    def is_open(self) -> bool:
        return self.state is SessionState.OPEN

    def generate(self, prompt: str) -> str:
        if not self.is_open:
            raise SessionClosed(f"session {self.id} is closed")
        prompt_tokens = estimate_tokens(len(prompt))
        if prompt_tokens > self.limits.tokens_left:
            raise ContextOverflow(prompt_tokens, self.limits.tokens_left)
        completion = self.backend.complete(self, prompt, self.limits.tokens_left - prompt_tokens)
        used = completion.prompt_tokens if completion.prompt_tokens is not None else prompt_tokens
        if completion.completion_tokens is not None:
            used += completion.completion_tokens
        else:
            used += estimate_tokens(len(completion.text))
        # a response longer than the budget exhausts it rather than going negative
        self.limits.tokens_so_far = min(self.limits.max_tokens, self.limits.tokens_so_far + used)
        return completion.text

    def close(self) -> None:
        if self.state is SessionState.CLOSED:
            return
        self.state = SessionState.CLOSED
        self.backend.on_close(self)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class Completion:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None


class Backend(ABC):
    """Factory for sessions. Shareable across threads; sessions are not."""

    def open_session(self, limits: SessionLimits | None = None) -> BackendSession:
        limits = (limits or SessionLimits()).fresh().validate()
        self.on_open(limits)
        return BackendSession(self, limits)

    def on_open(self, limits: SessionLimits) -> None:
        """Hook run before a session is handed out; raise BackendUnavailable to refuse."""

    def on_close(self, session: BackendSession) -> None:
        pass

    @abstractmethod
    def complete(self, session: BackendSession, prompt: str, max_response_tokens: int) -> Completion:
        ...


def open_session(backend: Backend, limits: SessionLimits | None = None) -> BackendSession:
    return backend.open_session(limits)


def generate(session: BackendSession, prompt: str) -> str:
    return session.generate(prompt)


def close_session(session: BackendSession) -> None:
    session.close()


# --- mocks ---------------------------------------------------------------


class MockKind(enum.Enum):
    ECHO = "echo"
    MARKER = "marker"
    RATIO = "ratio"
    FAILING = "failing"


@dataclass(frozen=True)
class MockSpec:
    kind: MockKind = MockKind.ECHO
    ratio: Fraction | None = None
    fail_indices: frozenset[int] = field(default_factory=frozenset)
    seed: int = 0

    def __post_init__(self):
        if self.kind is MockKind.RATIO:
            if self.ratio is None:
                raise InvalidConfig("ratio", "RatioCompressor needs a ratio")
            r = Fraction(self.ratio)
            if not 0 < r < 1:
                raise InvalidConfig("ratio", f"must lie strictly between 0 and 1, got {self.ratio}")
            object.__setattr__(self, "ratio", r)
        object.__setattr__(self, "fail_indices", frozenset(self.fail_indices))


def compress_ratio(text: str, ratio: Fraction) -> str:
    """Deterministic stand-in for "shorten to about ``ratio`` of the length".

    Keeps every ``ceil(1/ratio)``-th whitespace-delimited word, joined by
    single spaces. Text without whitespace is truncated instead. The result
    never exceeds ``ceil(ratio * len(text))`` characters and is strictly
    shorter than any input of two or more characters.
    """
    ratio = Fraction(ratio)
    n = len(text)
    cap = math.ceil(ratio * n)
    if n >= 2:
        cap = min(cap, n - 1)
    words = text.split()
    if len(words) == 1 and words[0] == text:
        return text[:cap]
    step = math.ceil(1 / ratio)
    kept = " ".join(words[step - 1::step])
    return kept[:cap]


class MockBackend(Backend):
    """Deterministic backend for tests and offline runs.

    ``strip_template`` lets the mock operate on the chunk payload only,
    discarding the instruction text a template wraps around it.
    """

    def __init__(self, spec: MockSpec | None = None, strip_template: "PromptTemplate | None" = None):
        self.spec = spec or MockSpec()
        self.strip_template = strip_template
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return self._calls

    def _payload(self, prompt: str) -> str:
        if self.strip_template is None:
            return prompt
        head, tail = self.strip_template.prefix, self.strip_template.suffix
        if prompt.startswith(head) and prompt.endswith(tail) and len(prompt) >= len(head) + len(tail):
            return prompt[len(head):len(prompt) - len(tail)]
        return prompt

    def transform(self, payload: str, call_index: int) -> str:
        kind = self.spec.kind
        if kind is MockKind.ECHO:
            return payload
        if kind is MockKind.MARKER:
            return f"<<{payload}>>"
        if kind is MockKind.RATIO:
            return compress_ratio(payload, self.spec.ratio)
        if call_index in self.spec.fail_indices:
            raise GenerationFailed(f"injected failure on call {call_index}")
        return payload

    def complete(self, session, prompt, max_response_tokens):
        with self._lock:
            call_index = self._calls
            self._calls += 1
        return Completion(self.transform(self._payload(prompt), call_index))


def echo_backend() -> MockBackend:
    return MockBackend(MockSpec(MockKind.ECHO))


def ratio_backend(ratio: float | Fraction | str, strip_template=None) -> MockBackend:
    return MockBackend(MockSpec(MockKind.RATIO, ratio=Fraction(ratio)), strip_template)


def failing_backend(fail_indices) -> MockBackend:
    return MockBackend(MockSpec(MockKind.FAILING, fail_indices=frozenset(fail_indices)))


class CountingBackend(Backend):
    """Wraps another backend and counts session opens, closes and generate calls."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.opens = 0
        self.closes = 0
        self.generates = 0
        self._lock = threading.Lock()

    def on_open(self, limits):
        self.inner.on_open(limits)
        with self._lock:
            self.opens += 1

    def on_close(self, session):
        with self._lock:
            self.closes += 1

    def complete(self, session, prompt, max_response_tokens):
        with self._lock:
            self.generates += 1
        return self.inner.complete(session, prompt, max_response_tokens)


# --- remote --------------------------------------------------------------


def _default_timeout() -> float:
    raw = os.environ.get(HTTP_TIMEOUT_ENV)
    if raw is None:
        return DEFAULT_HTTP_TIMEOUT
    try:
        value = float(raw)
    except ValueError:
        raise InvalidConfig(HTTP_TIMEOUT_ENV, f"not a number: {raw!r}") from None
    if value <= 0:
        raise InvalidConfig(HTTP_TIMEOUT_ENV, "must be positive")
    return value


class HttpBackend(Backend):
    """Completion over HTTP.

    Request: ``POST url`` with ``{"prompt": str, "max_tokens": int}``.
    Response: ``{"text": str}``, optionally with ``"usage": {"prompt_tokens",
    "completion_tokens"}`` which then replaces the character estimate.
    """

    def __init__(self, url: str, timeout: float | None = None):
        parsed = urllib.parse.urlparse(url)
        if parsed.scheme not in ("http", "https") or not parsed.hostname:
            raise InvalidConfig("url", f"not an http(s) URL: {url!r}")
        self.url = url
        self.timeout = _default_timeout() if timeout is None else timeout
        self._host = parsed.hostname
        self._port = parsed.port or (443 if parsed.scheme == "https" else 80)

    def on_open(self, limits):
        try:
            with socket.create_connection((self._host, self._port), timeout=self.timeout):
                pass
        except OSError as exc:
            raise BackendUnavailable(f"cannot reach {self.url}: {exc}") from exc

    def complete(self, session, prompt, max_response_tokens):
        body = json.dumps({"prompt": prompt, "max_tokens": max_response_tokens}).encode("utf-8")
        req = urllib.request.Request(
            self.url, data=body, method="POST", headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = resp.read().decode("utf-8")
        except urllib.error.HTTPError as exc:
            text = exc.read().decode("utf-8", errors="replace")
            raise GenerationFailed(f"HTTP {exc.code} from {self.url}", status=exc.code, body=text) from exc
        except (urllib.error.URLError, OSError) as exc:
            raise GenerationFailed(f"request to {self.url} failed: {exc}") from exc
        try:
            data = json.loads(payload)
            text = data["text"]
        except (ValueError, KeyError, TypeError) as exc:
            raise GenerationFailed("malformed response, expected {\"text\": ...}", body=payload) from exc
        if not isinstance(text, str):
            raise GenerationFailed("response field 'text' is not a string", body=payload)
        usage = data.get("usage") or {}
        return Completion(text, usage.get("prompt_tokens"), usage.get("completion_tokens"))


_FAIL_RE = re.compile(r"^\d+(,\d+)*$")


def parse_backend(spec: str, strip_template=None) -> Backend:
    """Build a backend from ``echo``, ``marker``, ``ratio:R``, ``fail:I,J`` or ``http:URL``."""
    name, _, arg = spec.partition(":")
    if name == "echo" and not arg:
        return MockBackend(MockSpec(MockKind.ECHO), strip_template)
    if name == "marker" and not arg:
        return MockBackend(MockSpec(MockKind.MARKER), strip_template)
    if name == "ratio":
        try:
            ratio = Fraction(arg)
        except (ValueError, ZeroDivisionError):
            raise InvalidConfig("backend", f"bad ratio in {spec!r}") from None
        return ratio_backend(ratio, strip_template)
    if name == "fail" and _FAIL_RE.match(arg):
        return MockBackend(
            MockSpec(MockKind.FAILING, fail_indices=frozenset(int(i) for i in arg.split(","))),
            strip_template,
        )
    if name == "http" and arg:
        return HttpBackend(arg)
    raise InvalidConfig("backend", f"unrecognised backend {spec!r}")
