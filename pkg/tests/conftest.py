from __future__ import annotations

import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Collects one line per acceptance criterion for the terminal summary."""

    def _report(criterion: str, ok: bool, detail: str = "") -> None:
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}" + (f" -- {detail}" if detail else ""))

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def words_text(n_chars: int, word_len: int = 7) -> str:
    """Distinct fixed-width words separated by single spaces, cut to ``n_chars``."""
    unit = word_len + 1
    count = n_chars // unit + 1
    body = "".join(f"w{i:0{word_len - 1}d} " for i in range(count))
    return body[:n_chars]


@pytest.fixture(scope="session")
def words_813k() -> str:
    return words_text(813_380)
