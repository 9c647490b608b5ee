"""Sentence-level utility functions u(reference, hypothesis) -> [0, 1].

All metrics work on whitespace tokens (no lowercasing).  Empty sides follow
the exact-match convention: both empty scores 1, one empty scores 0.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Sequence

from .errors import ParameterError

BLEU_MAX_ORDER = 4
BLEU_FLOOR = 0.1
CHRF_MAX_ORDER = 6
CHRF_BETA = 2.0


@dataclass(frozen=True)
class TokenizedSentence:
    tokens: tuple[str, ...]
    chars: str = field(default="", compare=False)

    @classmethod
    def from_text(cls, text: str) -> "TokenizedSentence":
        return cls(tuple(text.split()), text)

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "TokenizedSentence":
        tokens = tuple(tokens)
        return cls(tokens, " ".join(tokens))

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __str__(self) -> str:
        return self.text


def as_sentence(x) -> TokenizedSentence:
    if isinstance(x, TokenizedSentence):
        return x
    if isinstance(x, str):
        return TokenizedSentence.from_text(x)
    return TokenizedSentence.from_tokens(x)


@dataclass(frozen=True)
class UtilityFunction:
    """A named, pure utility.  ``fn`` takes (reference, hypothesis)."""

    id: str
    fn: Callable[[TokenizedSentence, TokenizedSentence], float]

    def __call__(self, y, h) -> float:
        return self.fn(as_sentence(y), as_sentence(h))


def memoized(u: UtilityFunction) -> UtilityFunction:
    """Wrap ``u`` with a (reference, hypothesis) result cache.

    Callers that count utility calls must count at their own level; a cache
    hit is still a logical evaluation.
    """
    cache: dict = {}
    fn = u.fn

    def cached(y, h):
        key = (y, h)
        v = cache.get(key)
        if v is None:
            v = cache[key] = fn(y, h)
        return v

    return UtilityFunction(u.id, cached)


def _f_score(overlap: int, n_hyp: int, n_ref: int, beta: float = 1.0) -> float:
    if overlap == 0:
        return 0.0
    p = overlap / n_hyp
    r = overlap / n_ref
    b2 = beta * beta
    return (1 + b2) * p * r / (b2 * p + r)


def _empty_logic(y: TokenizedSentence, h: TokenizedSentence) -> float | None:
    if not y.tokens or not h.tokens:
        return 1.0 if not y.tokens and not h.tokens else 0.0
    return None


def exact_match(y, h) -> float:
    y, h = as_sentence(y), as_sentence(h)
    return 1.0 if y.tokens == h.tokens else 0.0


def _clipped_overlap(a: Counter, b: Counter) -> int:
    return sum((a & b).values())


def unigram_f1(y, h) -> float:
    y, h = as_sentence(y), as_sentence(h)
    empty = _empty_logic(y, h)
    if empty is not None:
        return empty
    overlap = _clipped_overlap(Counter(y.tokens), Counter(h.tokens))
    return _f_score(overlap, len(h.tokens), len(y.tokens))


def skip_bigrams(tokens: Sequence[str]) -> Counter:
    return Counter(combinations(tokens, 2))


def skip_bigram_f1(y, h) -> float:
    y, h = as_sentence(y), as_sentence(h)
    if len(y.tokens) < 2 or len(h.tokens) < 2:
        return exact_match(y, h)
    ry, rh = skip_bigrams(y.tokens), skip_bigrams(h.tokens)
    n = len(y.tokens)
    m = len(h.tokens)
    return _f_score(_clipped_overlap(ry, rh), m * (m - 1) // 2, n * (n - 1) // 2)


def _ngrams(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(y: TokenizedSentence, h: TokenizedSentence, max_n: int = BLEU_MAX_ORDER):
    """(matches per order, hypothesis n-gram totals per order, hyp_len, ref_len)."""
    matches, totals = [], []
    for n in range(1, max_n + 1):
        hg = _ngrams(h.tokens, n)
        matches.append(_clipped_overlap(hg, _ngrams(y.tokens, n)))
        totals.append(max(len(h.tokens) - n + 1, 0))
    return matches, totals, len(h.tokens), len(y.tokens)


def bleu_from_stats(matches, totals, hyp_len, ref_len, eps=BLEU_FLOOR) -> float:
    # effective order: only orders the hypothesis actually has n-grams for
    if hyp_len == 0 or ref_len == 0:
        return 0.0
    log_sum = 0.0
    order = 0
    for m, t in zip(matches, totals):
        if t == 0:
            break
        order += 1
        log_sum += math.log((m if m > 0 else eps) / t)
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    return bp * math.exp(log_sum / order)


def sentence_bleu(y, h, max_n: int = BLEU_MAX_ORDER, eps: float = BLEU_FLOOR) -> float:
    """Floor-smoothed sentence BLEU in [0, 1]; 0 when either side is empty."""
    y, h = as_sentence(y), as_sentence(h)
    return bleu_from_stats(*bleu_stats(y, h, max_n), eps=eps)


def _chars(s: TokenizedSentence) -> str:
    return "".join(s.chars.split()) if s.chars else "".join(s.tokens)


def chrf_stats(y: TokenizedSentence, h: TokenizedSentence, max_n: int):
    """Per order: (overlap, hyp n-gram count, ref n-gram count)."""
    cy, ch = _chars(y), _chars(h)
    out = []
    for n in range(1, max_n + 1):
        gy, gh = _ngrams(cy, n), _ngrams(ch, n)
        out.append((_clipped_overlap(gy, gh), max(len(ch) - n + 1, 0), max(len(cy) - n + 1, 0)))
    return out


def chrf_from_stats(stats, beta: float) -> float:
    scores = []
    for overlap, n_hyp, n_ref in stats:
        if n_hyp == 0 and n_ref == 0:
            break
        scores.append(0.0 if n_hyp == 0 or n_ref == 0 else _f_score(overlap, n_hyp, n_ref, beta))
    return math.fsum(scores) / len(scores)


def char_ngram_f(y, h, max_n: int = CHRF_MAX_ORDER, beta: float = CHRF_BETA) -> float:
    """Character n-gram F-beta averaged over orders 1..max_n, whitespace removed.

    Orders longer than both strings are skipped, so short identical strings
    still score 1.
    """
    if max_n < 1 or beta <= 0:
        raise ParameterError(f"char_ngram_f needs max_n >= 1 and beta > 0, got {max_n}, {beta}")
    y, h = as_sentence(y), as_sentence(h)
    cy, ch = _chars(y), _chars(h)
    if not cy or not ch:
        return 1.0 if not cy and not ch else 0.0
    return chrf_from_stats(chrf_stats(y, h, max_n), beta)


# metric-id registry --------------------------------------------------------

_PARAMS = {
    "exact": {},
    "uf": {},
    "sbf": {},
    "bleu": {"n": int, "eps": float},
    "chrf": {"n": int, "beta": float},
}


def parse_metric_id(metric_id: str) -> tuple[str, dict]:
    """Split ``"chrf:n=6,beta=2"`` into ``("chrf", {"n": 6, "beta": 2.0})``."""
    name, _, rest = metric_id.partition(":")
    if name not in _PARAMS:
        raise ParameterError(f"unknown metric id {metric_id!r}; known: {sorted(_PARAMS)}")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            key = key.strip()
            if not eq or key not in _PARAMS[name]:
                raise ParameterError(f"bad parameter {item!r} in metric id {metric_id!r}")
            try:
                params[key] = _PARAMS[name][key](value)
            except ValueError:
                raise ParameterError(f"bad value for {key!r} in metric id {metric_id!r}") from None
    return name, params


def get_utility(metric_id: str) -> UtilityFunction:
    name, params = parse_metric_id(metric_id)
    if name == "exact":
        fn = exact_match
    elif name == "uf":
        fn = unigram_f1
    elif name == "sbf":
        fn = skip_bigram_f1
    elif name == "bleu":
        max_n, eps = params.get("n", BLEU_MAX_ORDER), params.get("eps", BLEU_FLOOR)
        fn = lambda y, h: sentence_bleu(y, h, max_n, eps)  # noqa: E731
    else:
        max_n, beta = params.get("n", CHRF_MAX_ORDER), params.get("beta", CHRF_BETA)
        if max_n < 1 or beta <= 0:
            raise ParameterError(f"chrf needs n >= 1 and beta > 0 in {metric_id!r}")
        fn = lambda y, h: char_ngram_f(y, h, max_n, beta)  # noqa: E731
    return UtilityFunction(metric_id, fn)


def corpus_aggregate(metric_id: str, pairs) -> float:
    """Corpus-level score over (reference, hypothesis) pairs by pooling counts.

    bleu pools n-gram matches/totals and lengths; uf, sbf and chrf pool
    clipped overlaps and side totals (micro-average); exact is the fraction
    of identical pairs.
    """
    pairs = [(as_sentence(y), as_sentence(h)) for y, h in pairs]
    if not pairs:
        raise ParameterError("corpus_aggregate needs at least one pair")
    name, params = parse_metric_id(metric_id)
    if name == "exact":
        return math.fsum(exact_match(y, h) for y, h in pairs) / len(pairs)
    if name == "bleu":
        max_n, eps = params.get("n", BLEU_MAX_ORDER), params.get("eps", BLEU_FLOOR)
        matches, totals = [0] * max_n, [0] * max_n
        hyp_len = ref_len = 0
        for y, h in pairs:
            m, t, hl, rl = bleu_stats(y, h, max_n)
            matches = [a + b for a, b in zip(matches, m)]
            totals = [a + b for a, b in zip(totals, t)]
            hyp_len += hl
            ref_len += rl
        return bleu_from_stats(matches, totals, hyp_len, ref_len, eps)
    if name == "chrf":
        max_n, beta = params.get("n", CHRF_MAX_ORDER), params.get("beta", CHRF_BETA)
        pooled = [[0, 0, 0] for _ in range(max_n)]
        for y, h in pairs:
            for acc, st in zip(pooled, chrf_stats(y, h, max_n)):
                for i in range(3):
                    acc[i] += st[i]
        if pooled[0][1] == 0 or pooled[0][2] == 0:
            return 1.0 if pooled[0][1] == pooled[0][2] == 0 else 0.0
        return chrf_from_stats(pooled, beta)

    overlap = n_hyp = n_ref = 0
    for y, h in pairs:
        if name == "uf":
            cy, ch = Counter(y.tokens), Counter(h.tokens)
        else:
            cy, ch = skip_bigrams(y.tokens), skip_bigrams(h.tokens)
        overlap += _clipped_overlap(cy, ch)
        n_hyp += sum(ch.values())
        n_ref += sum(cy.values())
    if n_hyp == 0 or n_ref == 0:
        both_empty = n_hyp == n_ref == 0
        return 1.0 if both_empty and all(y.tokens == h.tokens for y, h in pairs) else 0.0
    return _f_score(overlap, n_hyp, n_ref)
