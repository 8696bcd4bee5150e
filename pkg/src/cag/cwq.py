"""Context window length quotient (CWQ).

CWQ expresses a text length as a multiple of one model context window,
measured in characters: ``length / (window_tokens * chars_per_token)``.
With the defaults (6144 tokens, 4 chars/token) one window holds 24,576
characters. Values are kept as exact fractions so a text of exactly one
window classifies as Small, not Medium.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from cag.errors import InvalidArg, InvalidConfig

BASE_TOKEN_WINDOW = 6144
CHARS_PER_TOKEN = 4


class CwqCategory(enum.IntEnum):
    SMALL = 1
    MEDIUM = 2
    LARGE = 3
    EXTRA_LARGE = 4
    HUMONGOUS = 5

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "CwqCategory":
        for cat, name in _LABELS.items():
            if name == label:
                return cat
        raise InvalidArg(f"unknown CWQ category {label!r}")


_LABELS = {
    CwqCategory.SMALL: "Small",
    CwqCategory.MEDIUM: "Medium",
    CwqCategory.LARGE: "Large",
    CwqCategory.EXTRA_LARGE: "ExtraLarge",
    CwqCategory.HUMONGOUS: "Humongous",
}


@dataclass(frozen=True)
class CwqParams:
    base_token_window: int = BASE_TOKEN_WINDOW
    chars_per_token: Fraction = field(default=Fraction(CHARS_PER_TOKEN))

    def __post_init__(self):
        object.__setattr__(self, "chars_per_token", Fraction(self.chars_per_token))
        if self.base_token_window <= 0:
            raise InvalidConfig("base_token_window", "must be positive")
        if self.chars_per_token <= 0:
            raise InvalidConfig("chars_per_token", "must be positive")

    @property
    def window_chars(self) -> Fraction:
        return self.base_token_window * self.chars_per_token


DEFAULT_PARAMS = CwqParams()


@dataclass(frozen=True)
class CwqValue:
    value: Fraction
    source_length: int

    def __float__(self) -> float:
        return float(self.value)


def estimate_tokens(text_length: int, params: CwqParams = DEFAULT_PARAMS) -> int:
    """Token estimate for a text of ``text_length`` characters, rounded up."""
    if text_length < 0:
        raise InvalidArg("text_length must be non-negative")
    return math.ceil(Fraction(text_length) / params.chars_per_token)


def compute_cwq(length: int, params: CwqParams = DEFAULT_PARAMS) -> CwqValue:
    if length < 0:
        raise InvalidArg("length must be non-negative")
    return CwqValue(Fraction(length) / params.window_chars, length)


def categorize(cwq: CwqValue | Fraction | int | float) -> CwqCategory:
    value = cwq.value if isinstance(cwq, CwqValue) else Fraction(cwq)
    if value < 0:
        raise InvalidArg("cwq must be non-negative")
    if value <= 1:
        return CwqCategory.SMALL
    if value <= 2:
        return CwqCategory.MEDIUM
    if value <= 3:
        return CwqCategory.LARGE
    if value <= 4:
        return CwqCategory.EXTRA_LARGE
    return CwqCategory.HUMONGOUS


def categorize_length(length: int, params: CwqParams = DEFAULT_PARAMS) -> CwqCategory:
    return categorize(compute_cwq(length, params))


def histogram(values: list[Fraction | float], bin_width: float = 0.25) -> list[tuple[float, float, int]]:
    """Count CWQ values into ``[lo, hi)`` bins of ``bin_width`` starting at 0.

    Returns ``(lo, hi, count)`` rows covering every bin up to the largest value.
    """
    if bin_width <= 0:
        raise InvalidArg("bin_width must be positive")
    if not values:
        return []
    counts: dict[int, int] = {}
    for v in values:
        b = math.floor(float(v) / bin_width)
        counts[b] = counts.get(b, 0) + 1
    return [(b * bin_width, (b + 1) * bin_width, counts.get(b, 0)) for b in range(max(counts) + 1)]
