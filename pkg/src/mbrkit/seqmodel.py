"""Exactly enumerable autoregressive toy models and their generators.

A :class:`ToySequenceModel` is a k-th order Markov chain per source: the
next-token distribution depends on the source id and the ``order`` most
recent tokens.  Sequences are tuples of vocabulary indices with EOS left
implicit.  At step ``max_len`` EOS is forced regardless of the tables.

Tie-breaking is by vocabulary index everywhere (beam pruning, nucleus
prefix, argmax), which coincides with Python tuple ordering of sequences.
"""
from __future__ import annotations

import bisect
import json
import math
import zlib
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import ConfigError, OracleInfeasibleError, ParameterError
from .utility import TokenizedSentence

Seq = tuple[int, ...]

NORMALISATION_TOL = 1e-12
NUCLEUS_MASS_TOL = 1e-12
ENUMERATION_BUDGET = 10 ** 7


@dataclass(frozen=True)
class Vocabulary:
    symbols: tuple[str, ...]
    eos_index: int

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if len(self.symbols) < 2:
            raise ConfigError("vocabulary needs at least one content token plus EOS")
        if len(set(self.symbols)) != len(self.symbols):
            raise ConfigError("vocabulary symbols must be unique")
        for s in self.symbols:
            if not s or s.split() != [s]:
                raise ConfigError(f"vocabulary symbol {s!r} is empty or contains whitespace")
        if not 0 <= self.eos_index < len(self.symbols):
            raise ConfigError(f"eos_index {self.eos_index} out of range")

    def __len__(self):
        return len(self.symbols)

    @property
    def eos(self) -> str:
        return self.symbols[self.eos_index]

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise ConfigError(f"unknown symbol {symbol!r}") from None

    def encode(self, tokens: Iterable[str]) -> Seq:
        seq = tuple(self.index(t) for t in tokens)
        if self.eos_index in seq:
            raise ConfigError("sequences may not contain the EOS symbol")
        return seq

    def render(self, seq: Seq) -> TokenizedSentence:
        return TokenizedSentence.from_tokens(self.symbols[i] for i in seq)


class Row(NamedTuple):
    probs: tuple[float, ...]
    cdf: tuple[float, ...]
    last: int  # highest index with positive mass; guards cdf round-off


def _make_row(probs) -> Row:
    probs = tuple(float(p) for p in probs)
    cdf = tuple(np.cumsum(probs).tolist())
    last = max(i for i, p in enumerate(probs) if p > 0)
    return Row(probs, cdf, last)


@dataclass(frozen=True)
class ScoredSequence:
    sequence: Seq
    log_prob: float
    score: float


class ToySequenceModel:
    """Immutable table-driven conditional model p(y | source).

    ``tables`` maps ``(source_id, context)`` to a probability vector over the
    vocabulary, where ``context`` is the tuple of the last ``min(order, j)``
    token indices at step ``j``.
    """

    def __init__(self, vocabulary: Vocabulary, max_len: int, order: int,
                 tables: Mapping[tuple[str, tuple[int, ...]], Iterable[float]]):
        if max_len < 1:
            raise ConfigError(f"max_len must be positive, got {max_len}")
        if order < 0:
            raise ConfigError(f"order must be >= 0, got {order}")
        self.vocabulary = vocabulary
        self.max_len = max_len
        self.order = order
        V = len(vocabulary)
        rows = {}
        sources = []
        for (source, context), probs in tables.items():
            context = tuple(context)
            where = f"row (source={source!r}, context={list(context)})"
            probs = list(probs)
            if len(probs) != V:
                raise ConfigError(f"{where}: expected {V} probabilities, got {len(probs)}")
            if len(context) > order:
                raise ConfigError(f"{where}: context longer than order {order}")
            if any(not 0 <= c < V or c == vocabulary.eos_index for c in context):
                raise ConfigError(f"{where}: context holds an invalid token index")
            if any(not math.isfinite(p) or p < 0 for p in probs):
                raise ConfigError(f"{where}: probabilities must be finite and non-negative")
            if abs(math.fsum(probs) - 1.0) > NORMALISATION_TOL:
                raise ConfigError(f"{where}: probabilities sum to {math.fsum(probs)!r}, not 1")
            rows[(source, context)] = _make_row(probs)
            if source not in sources:
                sources.append(source)
        self.sources = tuple(sources)
        self._rows = rows
        eos_only = [0.0] * V
        eos_only[vocabulary.eos_index] = 1.0
        self._eos_row = _make_row(eos_only)
        self._nucleus_cache: dict = {}
        self._support_cache: dict = {}
        for source in self.sources:
            self._check_reachable(source)

    @property
    def eos_index(self) -> int:
        return self.vocabulary.eos_index

    def context(self, prefix: Seq) -> tuple[int, ...]:
        if self.order == 0:
            return ()
        return tuple(prefix[-self.order:])

    def _check_reachable(self, source):
        # BFS over contexts by earliest depth; contexts first reached at
        # depth max_len are forced to EOS and need no row.
        seen = {(): 0}
        frontier = [()]
        while frontier:
            nxt = []
            for ctx in frontier:
                depth = seen[ctx]
                row = self._rows.get((source, ctx))
                if row is None:
                    raise ConfigError(
                        f"source {source!r}: reachable context {list(ctx)} (step {depth}) has no row")
                if depth + 1 >= self.max_len:
                    continue
                for tok, p in enumerate(row.probs):
                    if p > 0 and tok != self.eos_index:
                        c = (ctx + (tok,))[-self.order:] if self.order else ()
                        if c not in seen:
                            seen[c] = depth + 1
                            nxt.append(c)
            frontier = nxt

    def check_source(self, source):
        if source not in self.sources:
            raise ConfigError(f"unknown source id {source!r}")

    def row(self, source, prefix: Seq) -> Row:
        if len(prefix) >= self.max_len:
            return self._eos_row
        try:
            return self._rows[(source, self.context(prefix))]
        except KeyError:
            self.check_source(source)
            raise ConfigError(f"no row for source {source!r}, context {list(self.context(prefix))}") from None

    def step_probs(self, source, prefix: Seq) -> tuple[float, ...]:
        return self.row(source, prefix).probs

    def nucleus_row(self, source, prefix: Seq, p: float) -> Row:
        base = self.row(source, prefix)
        key = (base.probs, p)
        r = self._nucleus_cache.get(key)
        if r is None:
            truncated = truncate_nucleus(base.probs, p)
            r = base if truncated == base.probs else _make_row(truncated)
            self._nucleus_cache[key] = r
        return r

    def render(self, seq: Seq) -> TokenizedSentence:
        return self.vocabulary.render(seq)

    def to_dict(self) -> dict:
        sym = self.vocabulary.symbols
        return {
            "vocabulary": list(sym),
            "eos": self.vocabulary.eos,
            "max_len": self.max_len,
            "order": self.order,
            "rows": [
                {"source": s, "context": [sym[c] for c in ctx],
                 "probs": {sym[i]: p for i, p in enumerate(row.probs) if p > 0}}
                for (s, ctx), row in self._rows.items()
            ],
        }


def model_from_dict(d: dict) -> ToySequenceModel:
    """Build a model from its JSON description.

    ``probs`` is either a full list in vocabulary order or a mapping from
    symbol to probability (missing symbols get 0).
    """
    for key in ("vocabulary", "eos", "max_len", "order", "rows"):
        if key not in d:
            raise ConfigError(f"model description is missing {key!r}")
    symbols = list(d["vocabulary"])
    if d["eos"] not in symbols:
        raise ConfigError(f"eos symbol {d['eos']!r} not in vocabulary")
    vocab = Vocabulary(tuple(symbols), symbols.index(d["eos"]))
    tables = {}
    for i, row in enumerate(d["rows"]):
        where = f"row {i}"
        try:
            source = str(row["source"])
            context = tuple(vocab.index(t) for t in row.get("context", []))
            probs = row["probs"]
            if isinstance(probs, Mapping):
                vec = [0.0] * len(vocab)
                for sym, p in probs.items():
                    vec[vocab.index(sym)] = float(p)
            else:
                vec = [float(p) for p in probs]
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"{where}: {err}") from None
        if (source, context) in tables:
            raise ConfigError(f"{where}: duplicate row for source {source!r}, context {row.get('context')}")
        tables[(source, context)] = vec
    try:
        return ToySequenceModel(vocab, int(d["max_len"]), int(d["order"]), tables)
    except ConfigError as err:
        raise ConfigError(f"model description: {err}") from None


def load_model(path) -> ToySequenceModel:
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read model {path}: {err}") from None
    return model_from_dict(d)


def truncate_nucleus(probs, p: float) -> tuple[float, ...]:
    """Smallest descending-probability prefix with mass >= p, renormalised.

    Ties in probability keep the lower vocabulary index first.  The result
    is the input unchanged when every positive-mass token survives.
    """
    if not 0 < p <= 1:
        raise ParameterError(f"nucleus p must be in (0, 1], got {p}")
    probs = tuple(probs)
    support = [i for i, q in enumerate(probs) if q > 0]
    if p == 1.0:
        return probs
    kept = []
    mass = 0.0
    for i in sorted(support, key=lambda i: (-probs[i], i)):
        kept.append(i)
        mass += probs[i]
        if mass >= p - NUCLEUS_MASS_TOL:
            break
    if len(kept) == len(support):
        return probs
    total = math.fsum(probs[i] for i in kept)
    out = [0.0] * len(probs)
    for i in kept:
        out[i] = probs[i] / total
    return tuple(out)


def _draw(row: Row, rng: np.random.Generator) -> int:
    i = bisect.bisect_right(row.cdf, rng.random())
    return min(i, row.last)


def log_prob(model: ToySequenceModel, source, seq: Seq) -> float:
    """Natural-log probability of ``seq`` followed by EOS; ``-inf`` if impossible."""
    model.check_source(source)
    seq = tuple(seq)
    V = len(model.vocabulary)
    if len(seq) > model.max_len:
        raise ParameterError(f"sequence longer than max_len={model.max_len}")
    if any(not 0 <= t < V or t == model.eos_index for t in seq):
        raise ParameterError(f"invalid token index in {seq}")
    total = 0.0
    for j in range(len(seq) + 1):
        probs = model.step_probs(source, seq[:j])
        q = probs[seq[j]] if j < len(seq) else probs[model.eos_index]
        if q <= 0:
            return -math.inf
        total += math.log(q)
    return total


def ancestral_sample(model: ToySequenceModel, source, rng: np.random.Generator) -> Seq:
    """One draw from the model's chain of categoricals (one uniform per step)."""
    model.check_source(source)
    seq: list[int] = []
    eos = model.eos_index
    while True:
        tok = _draw(model.row(source, seq), rng)
        if tok == eos:
            return tuple(seq)
        seq.append(tok)


def nucleus_sample(model: ToySequenceModel, source, p: float, rng: np.random.Generator) -> Seq:
    """Top-p sampling; consumes the rng exactly like :func:`ancestral_sample`."""
    if not 0 < p <= 1:
        raise ParameterError(f"nucleus p must be in (0, 1], got {p}")
    model.check_source(source)
    seq: list[int] = []
    eos = model.eos_index
    while True:
        tok = _draw(model.nucleus_row(source, tuple(seq), p), rng)
        if tok == eos:
            return tuple(seq)
        seq.append(tok)


def length_penalty(n: int, alpha: float) -> float:
    return ((5.0 + n) / 6.0) ** alpha


def beam_search(model: ToySequenceModel, source, beam_size: int,
                length_penalty_alpha: float = 0.0, k: int | None = None) -> list[ScoredSequence]:
    """Beam search returning up to ``k`` finished sequences, best first.

    Scores are ``log_prob / ((5 + len) / 6) ** alpha``.  Live beams are
    pruned to ``beam_size`` by raw log-probability; finished hypotheses go to
    a separate pool of size ``k``.  Search stops once no live beam can
    beat the k-th finished score.  Fewer than ``k`` results come back only
    when the model's support is smaller than ``k``.
    """
    k = beam_size if k is None else k
    if beam_size < 1 or not 1 <= k <= beam_size:
        raise ParameterError(f"need beam_size >= k >= 1, got beam_size={beam_size}, k={k}")
    if length_penalty_alpha < 0:
        raise ParameterError("length_penalty_alpha must be >= 0")
    model.check_source(source)
    eos = model.eos_index
    alpha = length_penalty_alpha
    best_lp = length_penalty(model.max_len, alpha)
    live: list[tuple[float, Seq]] = [(0.0, ())]
    finished: list[ScoredSequence] = []
    while live:
        candidates = []
        for lp, seq in live:
            for tok, q in enumerate(model.step_probs(source, seq)):
                if q <= 0:
                    continue
                new = lp + math.log(q)
                if tok == eos:
                    finished.append(ScoredSequence(seq, new, new / length_penalty(len(seq), alpha)))
                else:
                    candidates.append((new, seq + (tok,)))
        finished.sort(key=lambda s: (-s.score, s.sequence))
        del finished[k:]
        candidates.sort(key=lambda c: (-c[0], c[1]))
        live = candidates[:beam_size]
        # log-probs only fall, and the penalty is largest at max_len
        if live and len(finished) == k and live[0][0] / best_lp < finished[-1].score:
            break
    return finished


def _enumerate(model: ToySequenceModel, source, budget: int) -> list[tuple[Seq, float]]:
    eos = model.eos_index
    out = []
    stack = [((), 0.0)]
    while stack:
        seq, lp = stack.pop()
        probs = model.step_probs(source, seq)
        q = probs[eos]
        if q > 0:
            out.append((seq, lp + math.log(q)))
            if len(out) > budget:
                raise OracleInfeasibleError(
                    f"support of source {source!r} exceeds the enumeration budget of {budget} sequences")
        children = []
        for tok, q in enumerate(probs):
            if q > 0 and tok != eos:
                children.append((seq + (tok,), lp + math.log(q)))
        stack.extend(reversed(children))
    return out


def support_size(model: ToySequenceModel, source) -> int:
    """Number of nonzero-probability sequences, counted without listing them."""
    model.check_source(source)
    eos = model.eos_index
    memo = {}

    def count(prefix):
        key = (model.context(prefix), len(prefix))
        if key not in memo:
            probs = model.step_probs(source, prefix)
            memo[key] = int(probs[eos] > 0) + sum(
                count(prefix + (tok,)) for tok, q in enumerate(probs) if q > 0 and tok != eos)
        return memo[key]

    return count(())


def enumerate_support(model: ToySequenceModel, source, budget: int = ENUMERATION_BUDGET,
                      with_log_prob: bool = False):
    """All nonzero-probability sequences in lexicographic order, with probabilities.

    Log-probabilities are accumulated in the same order as :func:`log_prob`
    and :func:`beam_search`, so rankings agree bit-for-bit.
    """
    model.check_source(source)
    cached = model._support_cache.get(source)
    if cached is None or len(cached) > budget:
        if support_size(model, source) > budget:
            raise OracleInfeasibleError(
                f"support of source {source!r} exceeds the enumeration budget of {budget} sequences")
        cached = _enumerate(model, source, budget)
        model._support_cache[source] = cached
    if with_log_prob:
        return [(s, math.exp(lp), lp) for s, lp in cached]
    return [(s, math.exp(lp)) for s, lp in cached]


def exact_mode(model: ToySequenceModel, source) -> Seq:
    """Most probable sequence; ties go to the lexicographically smallest."""
    support = enumerate_support(model, source, with_log_prob=True)
    return min(support, key=lambda t: (-t[2], t[0]))[0]


def derive_rng(master_seed: int, source_index: int = 0, tag: str = "", replicate: int = 0) -> np.random.Generator:
    """Independent stream for (master seed, source index, strategy tag, replicate).

    The tag is hashed with CRC-32 and the four integers seed a numpy
    ``SeedSequence``, which mixes them into PCG64 state.
    """
    words = [int(master_seed), int(source_index), zlib.crc32(tag.encode("utf-8")), int(replicate)]
    if any(w < 0 for w in words):
        raise ParameterError("seeds and indices must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def random_toy_model(rng: np.random.Generator, vocab_size: int = 4, max_len: int = 4, order: int = 1,
                     n_sources: int = 1, zero_prob: float = 0.2, concentration: float = 1.0) -> ToySequenceModel:
    """Random valid model for property tests: Dirichlet rows with random zeros.

    Every row keeps EOS or at least one token positive, so all rows are valid.
    """
    symbols = tuple(f"t{i}" for i in range(vocab_size - 1)) + ("</s>",)
    vocab = Vocabulary(symbols, vocab_size - 1)
    content = range(vocab_size - 1)
    tables = {}
    for s in range(n_sources):
        for n in range(order + 1):
            for ctx in product(content, repeat=n):
                mask = rng.random(vocab_size) >= zero_prob
                if not mask.any():
                    mask[rng.integers(vocab_size)] = True
                w = rng.dirichlet(np.full(vocab_size, concentration)) * mask
                if w.sum() <= 0:
                    w = mask.astype(float)
                w = w / w.sum()
                tables[(f"s{s}", ctx)] = w.tolist()
    return ToySequenceModel(vocab, max_len, order, tables)
