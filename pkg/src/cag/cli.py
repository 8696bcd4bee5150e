"""Command-line entry point: ``cag split|cwq|run|rouge|bench|corpus``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error
(I/O, corpus format, backend). Errors are reported on stderr as a single
line starting with ``cag: error[<kind>]:``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from cag import bench as bench_mod
from cag.backend import SessionLimits, parse_backend
from cag.corpus import corpus_stats, load_corpus
from cag.cwq import categorize, compute_cwq, histogram
from cag.errors import (
    BackendError,
    CagError,
    FormatError,
    InvalidArg,
    InvalidConfig,
    InvalidTemplate,
    IoError,
)
from cag.metrics import rouge_all
from cag.pipeline import (
    GenerationConfig,
    PromptTemplate,
    config_from_dict,
    generate,
)
from cag.splitter import DEFAULT_SEPARATORS, SplitConfig, split_text

_DEFAULTS = GenerationConfig()


class UsageError(Exception):
    def __init__(self, message: str, usage: str = ""):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self.format_usage())


def _fmt():
    return argparse.ArgumentDefaultsHelpFormatter


def _unescape(s: str) -> str:
    return s.encode("latin-1", "backslashreplace").decode("unicode_escape")


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path} is not valid UTF-8: {exc}") from exc
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _write_out(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {out}: {exc}") from exc


def _load_config_file(path: str) -> GenerationConfig:
    try:
        data = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InvalidConfig("config", f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def _add_generation_flags(p: argparse.ArgumentParser, base: GenerationConfig) -> None:
    p.add_argument("--mode", choices=("sequential", "recursive"), default="recursive")
    p.add_argument("--size", type=int, default=base.split.chunk_size, help="chunk size in characters")
    p.add_argument("--overlap", type=int, default=base.split.chunk_overlap, help="chunk overlap in characters")
    p.add_argument("--max-iterations", type=int, default=base.max_iterations)
    p.add_argument("--token-limit", type=int, default=base.output_token_limit, help="output token limit")
    p.add_argument("--reserve", type=int, default=base.response_reserve_tokens, help="response reserve tokens")
    p.add_argument("--max-tokens", type=int, default=SessionLimits().max_tokens, help="session context window")
    p.add_argument("--template", metavar="FILE", default=None,
                   help="prompt template file containing {{chunk}}; omitted means the built-in summarize prompt")
    p.add_argument("--backend", default="echo", help="echo | marker | ratio:R | fail:I,J | http:URL")
    p.add_argument("--joiner", default=base.joiner.encode("unicode_escape").decode(),
                   help="text placed between chunk outputs; backslash escapes allowed")
    p.add_argument("--precheck", action="store_true", default=base.precheck,
                   help="skip the first recursive pass when the input already fits the token limit")
    p.add_argument("--strict", action="store_true", default=base.strict, help="abort on the first chunk error")
    p.add_argument("--config", metavar="FILE", default=None,
                   help="JSON generation config; explicit flags override its values")


def _generation_config(args, base: GenerationConfig) -> GenerationConfig:
    template = base.prompt_template
    if args.template is not None:
        template = PromptTemplate(_read_text(args.template))
    return GenerationConfig(
        split=SplitConfig(args.size, args.overlap, base.split.separators),
        max_iterations=args.max_iterations,
        output_token_limit=args.token_limit,
        joiner=_unescape(args.joiner),
        prompt_template=template,
        response_reserve_tokens=args.reserve,
        precheck=args.precheck,
        strict=args.strict,
    )


def build_parser(base: GenerationConfig = _DEFAULTS) -> argparse.ArgumentParser:
    parser = _Parser(prog="cag", description="Chunked generation over long texts.", formatter_class=_fmt())
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("split", help="split a text file into chunks", formatter_class=_fmt())
    p.add_argument("--size", type=int, default=base.split.chunk_size)
    p.add_argument("--overlap", type=int, default=base.split.chunk_overlap)
    p.add_argument("--json", action="store_true", help="emit a JSON array of chunk objects")
    p.add_argument("file")

    p = sub.add_parser("cwq", help="CWQ of a file, or 'cwq hist PATH' over a corpus", formatter_class=_fmt())
    p.add_argument("--json", action="store_true", help="emit JSON")
    p.add_argument("--bin-width", type=float, default=0.25, help="histogram bin width (hist only)")
    p.add_argument("target", nargs="+", metavar="[hist] FILE|PATH")

    p = sub.add_parser("run", help="run a pipeline over one text file", formatter_class=_fmt())
    _add_generation_flags(p, base)
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--quiet", action="store_true", help="suppress structured event lines on stderr")
    p.add_argument("file")

    p = sub.add_parser("rouge", help="ROUGE scores of a candidate against a reference", formatter_class=_fmt())
    p.add_argument("--candidate", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--n", type=int, default=2, help="ROUGE-N order")

    p = sub.add_parser("bench", help="benchmark a pipeline over a corpus", formatter_class=_fmt())
    _add_generation_flags(p, base)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="zero all durations for reproducible reports")
    p.add_argument("corpus")

    p = sub.add_parser("corpus", help="corpus utilities", formatter_class=_fmt())
    csub = p.add_subparsers(dest="corpus_command", required=True, parser_class=_Parser)
    s = csub.add_parser("stats", help="CWQ statistics of a corpus as JSON", formatter_class=_fmt())
    s.add_argument("path")
    return parser


# --- subcommands ---------------------------------------------------------


def _cmd_split(args) -> None:
    chunks = split_text(_read_text(args.file), SplitConfig(args.size, args.overlap, DEFAULT_SEPARATORS))
    if args.json:
        rows = [{"index": c.index, "start_offset": c.start_offset, "length": c.length, "text": c.text}
                for c in chunks]
        sys.stdout.write(json.dumps(rows, ensure_ascii=False) + "\n")
    else:
        for c in chunks:
            sys.stdout.write(f"{c.index}\t{c.start_offset}\t{c.length}\n")


def _cmd_cwq(args) -> None:
    target = args.target
    if target[0] == "hist" and len(target) == 2:
        values = [compute_cwq(len(r.content)).value for r in load_corpus(target[1])]
        rows = histogram(values, args.bin_width)
        if args.json:
            sys.stdout.write(json.dumps([{"lo": lo, "hi": hi, "count": n} for lo, hi, n in rows]) + "\n")
        else:
            for lo, hi, n in rows:
                sys.stdout.write(f"{lo:.2f}\t{hi:.2f}\t{n}\t{'#' * n}\n")
        return
    if len(target) != 1:
        raise UsageError("expected 'cwq FILE' or 'cwq hist PATH'")
    text = _read_text(target[0])
    value = compute_cwq(len(text))
    cat = categorize(value)
    if args.json:
        sys.stdout.write(json.dumps({"length": len(text), "cwq": round(float(value.value), 6),
                                     "category": cat.label}) + "\n")
    else:
        sys.stdout.write(f"{float(value.value):.6f}\t{cat.label}\n")


def _cmd_run(args, base) -> None:
    config = _generation_config(args, base)
    backend = parse_backend(args.backend, strip_template=config.prompt_template)
    text = _read_text(args.file)
    sink = None if args.quiet else (lambda ev: print(json.dumps(ev, sort_keys=True), file=sys.stderr))
    result = generate(text, config, backend, args.mode, SessionLimits(max_tokens=args.max_tokens), sink)
    _write_out(result.text, args.out)


def _cmd_rouge(args) -> None:
    scores = rouge_all(_read_text(args.candidate), _read_text(args.reference), args.n)
    sys.stdout.write(json.dumps(scores.as_dict(), indent=2, sort_keys=True) + "\n")


def _cmd_bench(args, base) -> None:
    config = _generation_config(args, base)
    backend = parse_backend(args.backend, strip_template=config.prompt_template)
    records = load_corpus(args.corpus)
    rows = bench_mod.run_benchmark(records, config, backend, args.mode, args.parallelism,
                                   SessionLimits(max_tokens=args.max_tokens))
    aggs = bench_mod.aggregate_by_category(rows)
    for path in bench_mod.emit_report(rows, aggs, args.format, args.out, timing=not args.no_timing):
        print(path, file=sys.stderr)


def _cmd_corpus(args) -> None:
    stats = corpus_stats(load_corpus(args.path))
    sys.stdout.write(json.dumps(stats.as_dict(), indent=2) + "\n")


def _config_path(argv: list[str]) -> str | None:
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return None


def _error(kind: str, message: str) -> None:
    print(f"cag: error[{kind}]: {' '.join(str(message).split())}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        path = _config_path(argv)
        base = _load_config_file(path) if path else _DEFAULTS
        parser = build_parser(base)
        args, extra = parser.parse_known_args(argv)
        if extra:
            # 'cwq hist --json PATH' leaves PATH behind; anything else is an unknown flag
            if args.command != "cwq" or any(e.startswith("-") for e in extra):
                parser.error(f"unrecognized arguments: {' '.join(extra)}")
            args.target.extend(extra)
        handler = {
            "split": _cmd_split,
            "cwq": _cmd_cwq,
            "rouge": _cmd_rouge,
            "corpus": _cmd_corpus,
        }.get(args.command)
        if handler is not None:
            handler(args)
        elif args.command == "run":
            _cmd_run(args, base)
        else:
            _cmd_bench(args, base)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        _error("usage", str(exc))
        if exc.usage:
            sys.stderr.write(exc.usage)
        return 1
    except (InvalidConfig, InvalidTemplate, InvalidArg) as exc:
        _error("config", str(exc))
        return 1
    except (IoError, FormatError) as exc:
        _error("io", str(exc))
        return 2
    except BackendError as exc:
        _error("backend", str(exc))
        return 2
    except CagError as exc:
        _error("runtime", str(exc))
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
