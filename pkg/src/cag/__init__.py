"""Chunked augmented generation: process texts larger than a model's context window.

The input is split into overlapping, size-bounded chunks. Each chunk goes
through its own model session, and the responses are joined. This can run
once (sequential) or repeat on its own output until a token limit is met
(recursive).
"""

from cag.backend import (
    Backend,
    BackendSession,
    CountingBackend,
    HttpBackend,
    MockBackend,
    MockKind,
    MockSpec,
    SessionLimits,
    close_session,
    echo_backend,
    failing_backend,
    open_session,
    parse_backend,
    ratio_backend,
)
from cag.bench import aggregate_by_category, emit_report, run_benchmark
from cag.corpus import ArticleRecord, corpus_stats, load_corpus
from cag.cwq import CwqCategory, CwqParams, CwqValue, categorize, compute_cwq, estimate_tokens
from cag.errors import (
    BackendUnavailable,
    CagError,
    ContextOverflow,
    FormatError,
    GenerationFailed,
    InvalidArg,
    InvalidConfig,
    InvalidTemplate,
    IoError,
)
from cag.metrics import RougeScore, RougeScores, compression_ratio, rouge_l, rouge_n, rouge_s, tokenize_for_rouge
from cag.pipeline import (
    GenerationConfig,
    GenerationResult,
    PromptTemplate,
    combine_outputs,
    generate_recursive,
    generate_sequential,
    prepare_prompt,
    validate_generation_config,
)
from cag.splitter import Chunk, SplitConfig, split_text, validate_split_config

__version__ = "0.1.0"
