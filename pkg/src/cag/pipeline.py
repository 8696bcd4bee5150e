"""Sequential and recursive chunked generation.

Both strategies split the input, run every chunk through its own backend
session (open, prompt, generate, close) and join the responses. The
recursive strategy repeats that pass on its own output until the estimated
token count fits ``output_token_limit`` or ``max_iterations`` passes have
run.

A chunk whose generation fails is logged, left out of the output, and its
session is still closed. ``strict=True`` re-raises the first failure
instead.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

from cag.backend import Backend, SessionLimits
from cag.cwq import estimate_tokens
from cag.errors import BackendUnavailable, InvalidConfig, InvalidTemplate
from cag.splitter import Chunk, SplitConfig, split_text, validate_split_config

logger = logging.getLogger(__name__)

PLACEHOLDER = "{{chunk}}"
DEFAULT_TEMPLATE_TEXT = (
    "Summarize the following text in approximately half its length, "
    "preserving key facts:\n\n" + PLACEHOLDER
)


@dataclass(frozen=True)
class PromptTemplate:
    template: str = DEFAULT_TEMPLATE_TEXT

    def validate(self) -> "PromptTemplate":
        count = self.template.count(PLACEHOLDER)
        if count != 1:
            raise InvalidTemplate(f"template must contain {PLACEHOLDER} exactly once (found {count})")
        return self

    @property
    def prefix(self) -> str:
        return self.template.partition(PLACEHOLDER)[0]

    @property
    def suffix(self) -> str:
        return self.template.partition(PLACEHOLDER)[2]

    @property
    def overhead_tokens(self) -> int:
        return estimate_tokens(len(self.template) - len(PLACEHOLDER))


@dataclass(frozen=True)
class GenerationConfig:
    split: SplitConfig = field(default_factory=SplitConfig)
    max_iterations: int = 10
    output_token_limit: int = 1024
    joiner: str = "\n"
    prompt_template: PromptTemplate = field(default_factory=PromptTemplate)
    response_reserve_tokens: int = 1024
    precheck: bool = False
    strict: bool = False


@dataclass(frozen=True)
class ChunkError:
    iteration: int
    chunk_index: int
    error: str


@dataclass
class GenerationResult:
    text: str
    iterations: int
    chunk_counts: list[int]
    errors: list[ChunkError]
    duration_ms: int
    termination: str = "single_pass"


def validate_generation_config(config: GenerationConfig, limits: SessionLimits | None = None) -> GenerationConfig:
    limits = limits or SessionLimits()
    validate_split_config(config.split)
    try:
        config.prompt_template.validate()
    except InvalidTemplate as exc:
        raise InvalidConfig("prompt_template", str(exc)) from None
    if not isinstance(config.max_iterations, int) or config.max_iterations < 0:
        raise InvalidConfig("max_iterations", f"must be a non-negative integer, got {config.max_iterations!r}")
    if not isinstance(config.output_token_limit, int) or config.output_token_limit <= 0:
        raise InvalidConfig("output_token_limit", f"must be a positive integer, got {config.output_token_limit!r}")
    if not isinstance(config.response_reserve_tokens, int) or config.response_reserve_tokens <= 0:
        raise InvalidConfig("response_reserve_tokens", "must be a positive integer")
    chunk_tokens = estimate_tokens(config.split.chunk_size)
    overhead = config.prompt_template.overhead_tokens
    needed = chunk_tokens + overhead + config.response_reserve_tokens
    if needed > limits.max_tokens:
        raise InvalidConfig(
            "budget",
            f"chunk ({chunk_tokens}) + template ({overhead}) + reserve "
            f"({config.response_reserve_tokens}) = {needed} tokens exceeds the "
            f"{limits.max_tokens}-token window",
        )
    return config


def prepare_prompt(template: PromptTemplate, chunk: Chunk | str) -> str:
    template.validate()
    body = chunk.text if isinstance(chunk, Chunk) else chunk
    head, _, tail = template.template.partition(PLACEHOLDER)
    return head + body + tail


def combine_outputs(parts: list[str], joiner: str = "\n") -> str:
    return joiner.join(parts)


EventSink = Callable[[dict], None]


class _Run:
    """State for one pipeline invocation; never shared between runs."""

    def __init__(self, config: GenerationConfig, backend: Backend, limits: SessionLimits | None,
                 on_event: EventSink | None):
        self.config = config
        self.backend = backend
        self.limits = limits or SessionLimits()
        self.on_event = on_event
        self.errors: list[ChunkError] = []
        self.chunk_counts: list[int] = []
        self.opened_any = False

    def emit(self, event: str, **fields) -> None:
        record = {"event": event, **fields}
        logger.info(json.dumps(record, sort_keys=True))
        if self.on_event is not None:
            self.on_event(record)

    def process_chunk(self, iteration: int, chunk: Chunk) -> str | None:
        self.emit("chunk_start", iteration=iteration, chunk=chunk.index, chars=chunk.length)
        try:
            session = self.backend.open_session(self.limits)
        except BackendUnavailable as exc:
            if not self.opened_any or self.config.strict:
                raise
            return self._fail(iteration, chunk, exc)
        self.opened_any = True
        try:
            response = session.generate(prepare_prompt(self.config.prompt_template, chunk))
        except Exception as exc:  # any chunk failure is recorded, as with a model error
            if self.config.strict:
                raise
            return self._fail(iteration, chunk, exc)
        finally:
            session.close()
        self.emit("chunk_end", iteration=iteration, chunk=chunk.index, chars=len(response))
        return response

    def _fail(self, iteration: int, chunk: Chunk, exc: Exception) -> None:
        message = f"{type(exc).__name__}: {exc}"
        self.errors.append(ChunkError(iteration, chunk.index, message))
        self.emit("chunk_error", iteration=iteration, chunk=chunk.index, error=message)
        return None

    def run_pass(self, text: str, iteration: int) -> str:
        chunks = split_text(text, self.config.split)
        self.chunk_counts.append(len(chunks))
        self.emit("pass_start", iteration=iteration, chunks=len(chunks), chars=len(text))
        outputs = []
        for chunk in chunks:
            response = self.process_chunk(iteration, chunk)
            if response is not None:
                outputs.append(response)
        combined = combine_outputs(outputs, self.config.joiner)
        self.emit("pass_end", iteration=iteration, chars=len(combined))
        return combined


def _elapsed_ms(started: float) -> int:
    return int(round((time.perf_counter() - started) * 1000))


def generate_sequential(text: str, config: GenerationConfig, backend: Backend,
                        limits: SessionLimits | None = None,
                        on_event: EventSink | None = None) -> GenerationResult:
    """Split once, process each chunk in order, join the responses."""
    validate_generation_config(config, limits)
    started = time.perf_counter()
    run = _Run(config, backend, limits, on_event)
    output = run.run_pass(text, 0)
    run.emit("done", reason="single_pass", iterations=1)
    return GenerationResult(output, 1, run.chunk_counts, run.errors, _elapsed_ms(started), "single_pass")


def generate_recursive(text: str, config: GenerationConfig, backend: Backend,
                       limits: SessionLimits | None = None,
                       on_event: EventSink | None = None) -> GenerationResult:
    """Repeat split/process/join passes until the output fits or the pass cap is hit.

    The iteration cap is checked before every pass, so ``max_iterations=0``
    returns the input untouched. At least one pass runs otherwise, even when
    the input is already under the limit, unless ``config.precheck`` is set.
    """
    validate_generation_config(config, limits)
    started = time.perf_counter()
    run = _Run(config, backend, limits, on_event)
    current = text
    iteration = 0
    if config.precheck and estimate_tokens(len(current)) <= config.output_token_limit:
        reason = "token_limit"
    else:
        while True:
            if iteration >= config.max_iterations:
                reason = "iteration_cap"
                break
            current = run.run_pass(current, iteration)
            iteration += 1
            if estimate_tokens(len(current)) <= config.output_token_limit:
                reason = "token_limit"
                break
    run.emit("done", reason=reason, iterations=iteration)
    return GenerationResult(current, iteration, run.chunk_counts, run.errors, _elapsed_ms(started), reason)


def generate(text: str, config: GenerationConfig, backend: Backend, mode: str = "recursive",
             limits: SessionLimits | None = None, on_event: EventSink | None = None) -> GenerationResult:
    if mode == "sequential":
        return generate_sequential(text, config, backend, limits, on_event)
    if mode == "recursive":
        return generate_recursive(text, config, backend, limits, on_event)
    raise InvalidConfig("mode", f"expected 'sequential' or 'recursive', got {mode!r}")


_TOP_KEYS = {
    "split", "max_iterations", "output_token_limit", "joiner", "prompt_template",
    "response_reserve_tokens", "precheck", "strict",
}
_SPLIT_KEYS = {"chunk_size", "chunk_overlap", "separators"}


def config_from_dict(data: dict) -> GenerationConfig:
    """Build a config from its JSON form; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise InvalidConfig("config", "must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise InvalidConfig("config", f"unknown keys {sorted(unknown)}")
    split = data.get("split", {})
    if not isinstance(split, dict) or set(split) - _SPLIT_KEYS:
        raise InvalidConfig("split", f"must be an object with keys {sorted(_SPLIT_KEYS)}")
    defaults = GenerationConfig()
    kwargs = {k: v for k, v in data.items() if k not in ("split", "prompt_template")}
    if "prompt_template" in data:
        kwargs["prompt_template"] = PromptTemplate(data["prompt_template"])
    kwargs["split"] = SplitConfig(
        chunk_size=split.get("chunk_size", defaults.split.chunk_size),
        chunk_overlap=split.get("chunk_overlap", defaults.split.chunk_overlap),
        separators=tuple(split.get("separators", defaults.split.separators)),
    )
    return GenerationConfig(**kwargs)


def config_to_dict(config: GenerationConfig) -> dict:
    return {
        "split": {
            "chunk_size": config.split.chunk_size,
            "chunk_overlap": config.split.chunk_overlap,
            "separators": list(config.split.separators),
        },
        "max_iterations": config.max_iterations,
        "output_token_limit": config.output_token_limit,
        "joiner": config.joiner,
        "prompt_template": config.prompt_template.template,
        "response_reserve_tokens": config.response_reserve_tokens,
        "precheck": config.precheck,
        "strict": config.strict,
    }
