"""Benchmark harness: run a pipeline over a corpus and report per-article rows.

Articles may run concurrently (``parallelism``), but chunks within one
article never do. Results always come back in corpus order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from cag.backend import Backend, SessionLimits
from cag.corpus import ArticleRecord
from cag.cwq import DEFAULT_PARAMS, CwqCategory, CwqParams, categorize, compute_cwq
from cag.errors import CagError, InvalidConfig, IoError
from cag.metrics import ZERO, RougeScores, compression_ratio, rouge_all
from cag.pipeline import GenerationConfig, generate, validate_generation_config

CSV_COLUMNS = (
    "title", "input_chars", "cwq", "category", "mode", "iterations", "output_chars",
    "compression_ratio", "rouge_n_f1", "rouge_l_f1", "rouge_s_f1", "duration_ms", "success", "error",
)

AGGREGATE_COLUMNS = (
    "category", "count", "mean_compression", "median_compression", "mean_rouge_n_f1",
    "mean_rouge_l_f1", "mean_rouge_s_f1", "success_rate", "mean_duration_ms",
)

MODES = ("sequential", "recursive")


@dataclass
class BenchmarkRecord:
    title: str
    input_chars: int
    cwq: float
    category: CwqCategory
    mode: str
    chunk_counts: list[int]
    iterations: int
    output_chars: int
    compression_ratio: float
    rouge: RougeScores
    duration_ms: int
    success: bool
    error: str | None = None


@dataclass
class CategoryAggregate:
    category: CwqCategory
    count: int
    mean_compression: float | None
    median_compression: float | None
    mean_rouge_n_f1: float | None
    mean_rouge_l_f1: float | None
    mean_rouge_s_f1: float | None
    success_rate: float
    mean_duration_ms: float | None


_EMPTY_ROUGE = RougeScores(ZERO, ZERO, ZERO, 2, ZERO)


def _bench_one(article: ArticleRecord, config: GenerationConfig, backend: Backend, mode: str,
               limits: SessionLimits | None, params: CwqParams) -> BenchmarkRecord:
    n = len(article.content)
    cwq = compute_cwq(n, params)
    base = dict(title=article.title, input_chars=n, cwq=float(cwq.value), category=categorize(cwq), mode=mode)
    if n == 0:
        return BenchmarkRecord(**base, chunk_counts=[], iterations=0, output_chars=0, compression_ratio=0.0,
                               rouge=_EMPTY_ROUGE, duration_ms=0, success=False, error="empty content")
    try:
        result = generate(article.content, config, backend, mode, limits)
    except CagError as exc:
        return BenchmarkRecord(**base, chunk_counts=[], iterations=0, output_chars=0,
                               compression_ratio=compression_ratio(n, 0), rouge=_EMPTY_ROUGE,
                               duration_ms=0, success=False, error=f"{type(exc).__name__}: {exc}")
    error = None
    if result.errors:
        first = result.errors[0]
        error = (f"{len(result.errors)} chunk error(s); first at pass {first.iteration} "
                 f"chunk {first.chunk_index}: {first.error}")
    return BenchmarkRecord(
        **base,
        chunk_counts=list(result.chunk_counts),
        iterations=result.iterations,
        output_chars=len(result.text),
        compression_ratio=compression_ratio(n, len(result.text)),
        rouge=rouge_all(result.text, article.content),
        duration_ms=result.duration_ms,
        success=error is None,
        error=error,
    )


def run_benchmark(records: list[ArticleRecord], config: GenerationConfig, backend: Backend,
                  mode: str = "recursive", parallelism: int = 1, limits: SessionLimits | None = None,
                  params: CwqParams = DEFAULT_PARAMS) -> list[BenchmarkRecord]:
    """One :class:`BenchmarkRecord` per article, in corpus order.

    A failing article becomes a ``success=False`` row; only configuration
    errors abort the whole run.
    """
    if mode not in MODES:
        raise InvalidConfig("mode", f"expected one of {MODES}, got {mode!r}")
    if not isinstance(parallelism, int) or parallelism < 1:
        raise InvalidConfig("parallelism", "must be a positive integer")
    validate_generation_config(config, limits)
    if parallelism == 1 or len(records) <= 1:
        return [_bench_one(a, config, backend, mode, limits, params) for a in records]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(lambda a: _bench_one(a, config, backend, mode, limits, params), records))


def _mean(values: list[float]) -> float | None:
    return statistics.fmean(values) if values else None


def aggregate_by_category(records: list[BenchmarkRecord]) -> list[CategoryAggregate]:
    """Per-category summary, Small to Humongous; means use successful rows only."""
    out = []
    for cat in CwqCategory:
        rows = [r for r in records if r.category == cat]
        if not rows:
            continue
        ok = [r for r in rows if r.success]
        comp = [r.compression_ratio for r in ok]
        out.append(CategoryAggregate(
            category=cat,
            count=len(rows),
            mean_compression=_mean(comp),
            median_compression=statistics.median(comp) if comp else None,
            mean_rouge_n_f1=_mean([r.rouge.rouge_n.f1 for r in ok]),
            mean_rouge_l_f1=_mean([r.rouge.rouge_l.f1 for r in ok]),
            mean_rouge_s_f1=_mean([r.rouge.rouge_s.f1 for r in ok]),
            success_rate=len(ok) / len(rows),
            mean_duration_ms=_mean([float(r.duration_ms) for r in ok]),
        ))
    return out


# --- reports -------------------------------------------------------------


def _num(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.6f}"


def _round(x: float | None) -> float | None:
    return None if x is None else round(x, 6)


def _record_row(r: BenchmarkRecord, timing: bool) -> list[str]:
    return [
        r.title, str(r.input_chars), _num(r.cwq), r.category.label, r.mode, str(r.iterations),
        str(r.output_chars), _num(r.compression_ratio), _num(r.rouge.rouge_n.f1),
        _num(r.rouge.rouge_l.f1), _num(r.rouge.rouge_s.f1), str(r.duration_ms if timing else 0),
        "true" if r.success else "false", r.error or "",
    ]


def _aggregate_row(a: CategoryAggregate, timing: bool) -> list[str]:
    return [
        a.category.label, str(a.count), _num(a.mean_compression), _num(a.median_compression),
        _num(a.mean_rouge_n_f1), _num(a.mean_rouge_l_f1), _num(a.mean_rouge_s_f1),
        _num(a.success_rate), _num(a.mean_duration_ms if timing or a.mean_duration_ms is None else 0.0),
    ]


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def record_to_json(r: BenchmarkRecord, timing: bool = True) -> dict:
    rouge = {k: ({kk: _round(vv) if kk != "n" else vv for kk, vv in v.items()})
             for k, v in r.rouge.as_dict().items()}
    return {
        "title": r.title,
        "input_chars": r.input_chars,
        "cwq": _round(r.cwq),
        "category": r.category.label,
        "mode": r.mode,
        "chunk_counts": list(r.chunk_counts),
        "iterations": r.iterations,
        "output_chars": r.output_chars,
        "compression_ratio": _round(r.compression_ratio),
        "rouge_n_f1": _round(r.rouge.rouge_n.f1),
        "rouge_l_f1": _round(r.rouge.rouge_l.f1),
        "rouge_s_f1": _round(r.rouge.rouge_s.f1),
        "rouge": rouge,
        "duration_ms": r.duration_ms if timing else 0,
        "success": r.success,
        "error": r.error,
    }


def aggregate_to_json(a: CategoryAggregate, timing: bool = True) -> dict:
    duration = a.mean_duration_ms if timing or a.mean_duration_ms is None else 0.0
    return {
        "category": a.category.label,
        "count": a.count,
        "mean_compression": _round(a.mean_compression),
        "median_compression": _round(a.median_compression),
        "mean_rouge_n_f1": _round(a.mean_rouge_n_f1),
        "mean_rouge_l_f1": _round(a.mean_rouge_l_f1),
        "mean_rouge_s_f1": _round(a.mean_rouge_s_f1),
        "success_rate": _round(a.success_rate),
        "mean_duration_ms": _round(duration),
    }


def aggregates_path(path: str | Path) -> Path:
    """Where the CSV report puts its per-category table: ``<stem>.categories.csv`` beside ``path``."""
    path = Path(path)
    return path.with_name(path.stem + ".categories.csv")


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def emit_report(records: list[BenchmarkRecord], aggregates: list[CategoryAggregate], format: str,
                path: str | Path, timing: bool = True) -> list[Path]:
    """Write the report and return the paths written.

    ``csv`` writes the per-article table to ``path`` and the per-category
    table to :func:`aggregates_path`. ``json`` writes one object with
    ``records`` and ``aggregates``. ``timing=False`` zeroes every duration so
    repeated runs are byte-identical.
    """
    path = Path(path)
    if format == "csv":
        side = aggregates_path(path)
        _write(path, _csv_text(CSV_COLUMNS, [_record_row(r, timing) for r in records]))
        _write(side, _csv_text(AGGREGATE_COLUMNS, [_aggregate_row(a, timing) for a in aggregates]))
        return [path, side]
    if format == "json":
        doc = {
            "columns": list(CSV_COLUMNS),
            "records": [record_to_json(r, timing) for r in records],
            "aggregates": [aggregate_to_json(a, timing) for a in aggregates],
        }
        _write(path, json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
        return [path]
    raise InvalidConfig("format", f"expected 'csv' or 'json', got {format!r}")


def aggregates_from_csv(path: str | Path) -> list[dict]:
    """Recompute per-category aggregates from a per-article CSV report."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    out = []
    for cat in CwqCategory:
        group = [r for r in rows if r["category"] == cat.label]
        if not group:
            continue
        ok = [r for r in group if r["success"] == "true"]

        def col(name):
            return [float(r[name]) for r in ok]

        comp = col("compression_ratio")
        out.append({
            "category": cat.label,
            "count": len(group),
            "mean_compression": _mean(comp),
            "median_compression": statistics.median(comp) if comp else None,
            "mean_rouge_n_f1": _mean(col("rouge_n_f1")),
            "mean_rouge_l_f1": _mean(col("rouge_l_f1")),
            "mean_rouge_s_f1": _mean(col("rouge_s_f1")),
            "success_rate": len(ok) / len(group),
            "mean_duration_ms": _mean(col("duration_ms")),
        })
    return out
