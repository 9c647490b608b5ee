"""Shipped toy models.

peaked  -- one dominant path ("the cat sat" carries most of the mass).
spread  -- near-uniform over a couple of hundred short sentences.
skewed  -- two modes: one heavy single path against a broad, diverse tail.

All are bigram (order 1) models over a small English-like vocabulary with
two sources, ``s0`` and ``s1``; ``s1`` swaps the roles of cat/dog and
sat/ran so the two sources have different, but equally shaped, outputs.
"""
from __future__ import annotations

from .errors import ConfigError
from .seqmodel import ToySequenceModel, Vocabulary

SYMBOLS = ("the", "a", "cat", "dog", "sat", "ran", "</s>")
_SWAP = {"cat": "dog", "dog": "cat", "sat": "ran", "ran": "sat"}

# context (None = sentence start) -> {next symbol: probability}
_SPREAD = {
    None: {"the": 0.3, "a": 0.25, "cat": 0.15, "dog": 0.15, "sat": 0.05, "ran": 0.05, "</s>": 0.05},
    "the": {"cat": 0.3, "dog": 0.25, "sat": 0.1, "ran": 0.1, "a": 0.05, "</s>": 0.2},
    "a": {"cat": 0.25, "dog": 0.3, "sat": 0.1, "ran": 0.1, "the": 0.05, "</s>": 0.2},
    "cat": {"sat": 0.3, "ran": 0.2, "the": 0.1, "a": 0.1, "dog": 0.05, "</s>": 0.25},
    "dog": {"ran": 0.3, "sat": 0.2, "the": 0.1, "a": 0.1, "cat": 0.05, "</s>": 0.25},
    "sat": {"the": 0.15, "a": 0.15, "cat": 0.05, "dog": 0.05, "</s>": 0.6},
    "ran": {"the": 0.15, "a": 0.15, "cat": 0.05, "dog": 0.05, "</s>": 0.6},
}

_PEAKED = {
    None: {"the": 0.94, "a": 0.03, "</s>": 0.03},
    "the": {"cat": 0.95, "dog": 0.04, "</s>": 0.01},
    "a": {"dog": 0.9, "</s>": 0.1},
    "cat": {"sat": 0.96, "ran": 0.03, "</s>": 0.01},
    "dog": {"ran": 0.9, "</s>": 0.1},
    "sat": {"</s>": 1.0},
    "ran": {"</s>": 1.0},
}

_SKEWED = {
    None: {"the": 0.5, "a": 0.3, "dog": 0.1, "cat": 0.1},
    "the": {"cat": 0.9, "dog": 0.1},
    "a": {"dog": 0.3, "cat": 0.25, "ran": 0.25, "sat": 0.2},
    "cat": {"sat": 0.75, "ran": 0.1, "the": 0.05, "</s>": 0.1},
    "dog": {"ran": 0.4, "sat": 0.3, "a": 0.1, "</s>": 0.2},
    "sat": {"</s>": 0.8, "a": 0.2},
    "ran": {"</s>": 0.55, "a": 0.25, "the": 0.2},
}

_SPECS = {
    "spread": (_SPREAD, 3),
    "peaked": (_PEAKED, 3),
    "skewed": (_SKEWED, 4),
}

NAMES = tuple(_SPECS)


def _build(spec: dict, max_len: int) -> ToySequenceModel:
    vocab = Vocabulary(SYMBOLS, SYMBOLS.index("</s>"))
    tables = {}
    for source, swap in (("s0", {}), ("s1", _SWAP)):
        for ctx, dist in spec.items():
            ctx_sym = swap.get(ctx, ctx)
            vec = [0.0] * len(SYMBOLS)
            for sym, p in dist.items():
                vec[SYMBOLS.index(swap.get(sym, sym))] = p
            key = () if ctx_sym is None else (SYMBOLS.index(ctx_sym),)
            tables[(source, key)] = vec
    return ToySequenceModel(vocab, max_len, 1, tables)


def get(name: str) -> ToySequenceModel:
    try:
        spec, max_len = _SPECS[name]
    except KeyError:
        raise ConfigError(f"unknown shipped model {name!r}; available: {list(NAMES)}") from None
    return _build(spec, max_len)
