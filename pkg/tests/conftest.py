import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mbrkit import zoo  # noqa: E402
from mbrkit.seqmodel import ToySequenceModel, Vocabulary  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance_lines = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""
    def record(name, ok, detail=""):
        _acceptance_lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {detail}" if detail else ""))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


def table_model(rows, max_len, order=0, symbols=("a", "b", "c", "</s>"), source="x"):
    """Model from ``{context-symbols-tuple: {symbol: prob}}`` for one source."""
    vocab = Vocabulary(symbols, symbols.index("</s>"))
    tables = {}
    for ctx, dist in rows.items():
        vec = [0.0] * len(symbols)
        for sym, p in dist.items():
            vec[symbols.index(sym)] = p
        tables[(source, tuple(symbols.index(c) for c in ctx))] = vec
    return ToySequenceModel(vocab, max_len, order, tables)


@pytest.fixture(scope="session")
def spread():
    return zoo.get("spread")


@pytest.fixture(scope="session")
def skewed():
    return zoo.get("skewed")


@pytest.fixture(scope="session")
def peaked():
    return zoo.get("peaked")
