"""Hierarchical text splitter with overlap.

Text is cut on the first separator of the hierarchy; pieces that are still
longer than ``chunk_size`` are cut again with the next separator. The empty
separator is the terminal fallback and slices a piece into fixed windows of
``chunk_size`` characters advancing by ``chunk_size - chunk_overlap``.
Pieces that fit are then merged greedily into chunks, each new chunk
re-using the trailing whole pieces of the previous one (up to
``chunk_overlap`` characters) as context.

Lengths are counted in Unicode code points (``len(str)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from cag.errors import InvalidConfig

DEFAULT_SEPARATORS: tuple[str, ...] = ("\n\n", "\n", " ", "")


@dataclass(frozen=True)
class SplitConfig:
    chunk_size: int = 4096
    chunk_overlap: int = 200
    separators: tuple[str, ...] = field(default=DEFAULT_SEPARATORS)

    def __post_init__(self):
        # accept any sequence, store a tuple so the config stays hashable
        object.__setattr__(self, "separators", tuple(self.separators))

    @property
    def stride(self) -> int:
        return self.chunk_size - self.chunk_overlap


@dataclass(frozen=True)
class Chunk:
    """One contiguous slice of the source text.

    ``start_offset`` indexes into the text that was split, so
    ``source[start_offset:start_offset + length] == text``.
    """

    index: int
    text: str
    start_offset: int
    length: int


def validate_split_config(config: SplitConfig) -> SplitConfig:
    if not isinstance(config.chunk_size, int) or config.chunk_size <= 0:
        raise InvalidConfig("chunk_size", f"must be a positive integer, got {config.chunk_size!r}")
    if not isinstance(config.chunk_overlap, int) or config.chunk_overlap < 0:
        raise InvalidConfig("chunk_overlap", f"must be a non-negative integer, got {config.chunk_overlap!r}")
    if config.chunk_overlap >= config.chunk_size:
        raise InvalidConfig(
            "chunk_overlap",
            f"must be smaller than chunk_size ({config.chunk_overlap} >= {config.chunk_size})",
        )
    if not config.separators:
        raise InvalidConfig("separators", "must not be empty")
    if config.separators[-1] != "":
        raise InvalidConfig("separators", "must end with the empty fallback separator")
    if any(not isinstance(s, str) for s in config.separators):
        raise InvalidConfig("separators", "every separator must be a string")
    return config


def _split_keep_end(text: str, sep: str, offset: int) -> list[tuple[int, str]]:
    # separators stay attached to the piece they terminate
    parts = text.split(sep)
    pieces = []
    pos = offset
    for i, part in enumerate(parts):
        piece = part + sep if i < len(parts) - 1 else part
        if piece:
            pieces.append((pos, piece))
            pos += len(piece)
    return pieces


def _windows(text: str, offset: int, size: int, stride: int) -> list[tuple[int, str]]:
    out = []
    start = 0
    while True:
        out.append((offset + start, text[start:start + size]))
        if start + size >= len(text):
            return out
        start += stride


def _atomic_pieces(text: str, offset: int, separators: tuple[str, ...], config: SplitConfig) -> list[tuple[int, str]]:
    sep, rest = separators[0], separators[1:]
    if sep == "":
        return _windows(text, offset, config.chunk_size, config.stride)
    pieces = []
    for pos, piece in _split_keep_end(text, sep, offset):
        if len(piece) <= config.chunk_size:
            pieces.append((pos, piece))
        else:
            pieces.extend(_atomic_pieces(piece, pos, rest, config))
    return pieces


def _merge(pieces: list[tuple[int, str]], config: SplitConfig) -> list[tuple[int, str]]:
    size, overlap = config.chunk_size, config.chunk_overlap
    chunks: list[tuple[int, str]] = []
    current: list[tuple[int, str]] = []
    total = 0
    for pos, piece in pieces:
        if current and total + len(piece) > size:
            chunks.append((current[0][0], "".join(p for _, p in current)))
            # carry trailing whole pieces, then drop from the front until the new piece fits
            while current and (total > overlap or total + len(piece) > size):
                total -= len(current.pop(0)[1])
        current.append((pos, piece))
        total += len(piece)
    if current:
        chunks.append((current[0][0], "".join(p for _, p in current)))
    return chunks


def split_text(text: str, config: SplitConfig | None = None) -> list[Chunk]:
    """Split ``text`` into ordered chunks of at most ``config.chunk_size`` characters.

    >>> [c.text for c in split_text("abcdef", SplitConfig(4, 2, ("",)))]
    ['abcd', 'cdef']
    """
    config = validate_split_config(config or SplitConfig())
    if not text:
        return []
    pieces = _atomic_pieces(text, 0, config.separators, config)
    return [
        Chunk(index=i, text=body, start_offset=start, length=len(body))
        for i, (start, body) in enumerate(_merge(pieces, config))
    ]
