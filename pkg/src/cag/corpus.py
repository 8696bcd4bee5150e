"""Article corpora: loading, synthesis and CWQ statistics.

Two on-disk layouts are read:

* a JSON array of ``{"title": ..., "originalContent": ...}`` objects, kept
  in array order;
* a directory of UTF-8 text files, one article per file, titled by the file
  stem and ordered by file name.
"""

from __future__ import annotations

import json
import random
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from cag.cwq import DEFAULT_PARAMS, CwqCategory, CwqParams, categorize, compute_cwq
from cag.errors import FormatError, IoError


@dataclass(frozen=True)
class ArticleRecord:
    title: str
    content: str

    def to_json(self) -> dict:
        return {"title": self.title, "originalContent": self.content}


@dataclass
class CorpusStats:
    total: int
    per_category_counts: dict[CwqCategory, int]
    mean_length: Fraction
    median_cwq: Fraction
    stddev_cwq: float
    empty_titles: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "per_category_counts": {c.label: n for c, n in self.per_category_counts.items()},
            "mean_length": float(self.mean_length),
            "median_cwq": float(self.median_cwq),
            "stddev_cwq": self.stddev_cwq,
            "empty_content": list(self.empty_titles),
        }


def _record_from_json(item, index: int) -> ArticleRecord:
    if not isinstance(item, dict):
        raise FormatError("expected an object", index)
    title = item.get("title")
    content = item.get("originalContent")
    if not isinstance(title, str) or not title:
        raise FormatError("missing or empty 'title'", index)
    if not isinstance(content, str):
        raise FormatError("missing or non-string 'originalContent'", index)
    return ArticleRecord(title, content)


def _load_json(path: Path) -> list[ArticleRecord]:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path} is not valid UTF-8: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise FormatError(f"{path}: top level must be a JSON array")
    return [_record_from_json(item, i) for i, item in enumerate(data)]


def _load_dir(path: Path) -> list[ArticleRecord]:
    try:
        files = sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith("."))
    except OSError as exc:
        raise IoError(f"cannot list {path}: {exc}") from exc
    records = []
    for i, p in enumerate(files):
        try:
            raw = p.read_bytes()
        except OSError as exc:
            raise IoError(f"cannot read {p}: {exc}") from exc
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{p.name} is not valid UTF-8: {exc}", i) from exc
        records.append(ArticleRecord(p.stem, text))
    return records


def load_corpus(path: str | Path) -> list[ArticleRecord]:
    path = Path(path)
    if path.is_dir():
        return _load_dir(path)
    if not path.exists():
        raise IoError(f"no such file or directory: {path}")
    return _load_json(path)


def save_corpus(records: list[ArticleRecord], path: str | Path) -> None:
    try:
        Path(path).write_text(
            json.dumps([r.to_json() for r in records], ensure_ascii=False, indent=1), encoding="utf-8"
        )
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def corpus_stats(records: list[ArticleRecord], params: CwqParams = DEFAULT_PARAMS) -> CorpusStats:
    counts = {cat: 0 for cat in CwqCategory}
    cwqs = []
    for rec in records:
        value = compute_cwq(len(rec.content), params).value
        counts[categorize(value)] += 1
        cwqs.append(value)
    if not records:
        return CorpusStats(0, counts, Fraction(0), Fraction(0), 0.0)
    return CorpusStats(
        total=len(records),
        per_category_counts=counts,
        mean_length=Fraction(sum(len(r.content) for r in records), len(records)),
        median_cwq=Fraction(statistics.median(cwqs)),
        stddev_cwq=float(statistics.pstdev(cwqs)),
        empty_titles=[r.title for r in records if not r.content],
    )


# --- synthetic corpora ----------------------------------------------------

_VOCAB = (
    "mind behavior study memory learning perception emotion cognition theory "
    "method evidence social brain model response stimulus attention language "
    "development process system analysis history research field science human "
    "animal experiment data result structure function change pattern context"
).split()

CATEGORY_COUNTS_381 = {
    CwqCategory.SMALL: 87,
    CwqCategory.MEDIUM: 140,
    CwqCategory.LARGE: 105,
    CwqCategory.EXTRA_LARGE: 42,
    CwqCategory.HUMONGOUS: 7,
}


def synthetic_text(length: int, seed: int = 0) -> str:
    """Deterministic filler prose of exactly ``length`` characters."""
    rng = random.Random(seed)
    parts: list[str] = []
    size = 0
    sentence = 0
    while size < length:
        word = rng.choice(_VOCAB)
        sentence += 1
        if sentence % 12 == 0:
            word += ".\n\n" if rng.random() < 0.2 else ". "
        else:
            word += " "
        parts.append(word)
        size += len(word)
    return "".join(parts)[:length]


def category_char_range(category: CwqCategory, params: CwqParams = DEFAULT_PARAMS) -> tuple[int, int]:
    """Inclusive character-length range of a category; Humongous is capped at five windows."""
    window = params.window_chars
    lo = int(window * (category - 1)) + 1 if category > CwqCategory.SMALL else 1
    hi = int(window * category)
    return lo, hi


def synthetic_corpus(counts: dict[CwqCategory, int] | None = None, seed: int = 0,
                     params: CwqParams = DEFAULT_PARAMS) -> list[ArticleRecord]:
    """Articles whose lengths land in the requested CWQ categories under ``params``.

    Pass a smaller ``base_token_window`` to get a quick, small corpus.
    """
    counts = CATEGORY_COUNTS_381 if counts is None else counts
    rng = random.Random(seed)
    records = []
    for cat in CwqCategory:
        lo, hi = category_char_range(cat, params)
        for i in range(counts.get(cat, 0)):
            length = rng.randint(lo, hi)
            records.append(ArticleRecord(f"{cat.label}-{i:03d}", synthetic_text(length, rng.randrange(2**31))))
    rng.shuffle(records)
    return records
