"""Decision rules: MAP, MBR N-by-N, MBR N-by-S and coarse-to-fine MBR.

Each MBR decoder counts *logical* utility evaluations, so counts follow
the closed forms N*N, |H|*S and |H|*S + T*L even when hypotheses
repeat or utilities are memoised.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError, StrategyError
from .estimate import CallCounter, SampleSet, UtilityEstimate, draw_samples, mc_expected_utility
from .seqmodel import ToySequenceModel, ancestral_sample, beam_search, log_prob, nucleus_sample
from .utility import TokenizedSentence, UtilityFunction, as_sentence

STRATEGIES = ("ancestral", "nucleus", "beam")


@dataclass(frozen=True)
class Hypothesis:
    sentence: TokenizedSentence
    origins: tuple[str, ...]
    log_prob: float | None = None
    multiplicity: int = 1

    @property
    def text(self) -> str:
        return self.sentence.text


@dataclass(frozen=True)
class HypothesisSpace:
    """Deduplicated candidates in first-occurrence order.

    ``construction`` maps each strategy tag to how many candidates it
    produced before deduplication.
    """

    hypotheses: tuple[Hypothesis, ...]
    construction: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.hypotheses)

    def __iter__(self):
        return iter(self.hypotheses)

    def __getitem__(self, i):
        return self.hypotheses[i]

    @property
    def sentences(self) -> list[TokenizedSentence]:
        return [h.sentence for h in self.hypotheses]

    @classmethod
    def from_candidates(cls, candidates: Iterable) -> "HypothesisSpace":
        """Build from ``(sentence, origin, log_prob)`` triples (log_prob may be None)."""
        index: dict[TokenizedSentence, int] = {}
        merged: list[list] = []
        construction: dict[str, int] = {}
        for sentence, origin, lp in candidates:
            sentence = as_sentence(sentence)
            construction[origin] = construction.get(origin, 0) + 1
            i = index.get(sentence)
            if i is None:
                index[sentence] = len(merged)
                merged.append([sentence, [origin], lp, 1])
            else:
                entry = merged[i]
                if origin not in entry[1]:
                    entry[1].append(origin)
                if entry[2] is None:
                    entry[2] = lp
                entry[3] += 1
        hyps = tuple(Hypothesis(s, tuple(o), lp, m) for s, o, lp, m in merged)
        return cls(hyps, construction)


@dataclass(frozen=True)
class DecoderConfig:
    N: int = 405
    S: int = 13
    T: int = 50
    L: int = 100
    proxy_utility_id: str = "uf"
    target_utility_id: str = "chrf"
    nucleus_p: float = 0.7
    beam_size: int = 4
    length_penalty_alpha: float = 0.6
    master_seed: int = 0

    def __post_init__(self):
        if self.N < 1 or self.S < 1 or self.L < 1:
            raise ParameterError("N, S and L must be >= 1")
        if not 1 <= self.T <= self.N:
            raise ParameterError(f"T must satisfy 1 <= T <= N, got T={self.T}, N={self.N}")
        if not 0 < self.nucleus_p <= 1:
            raise ParameterError(f"nucleus_p must be in (0, 1], got {self.nucleus_p}")
        if self.beam_size < 1:
            raise ParameterError("beam_size must be >= 1")
        if self.length_penalty_alpha < 0:
            raise ParameterError("length_penalty_alpha must be >= 0")


@dataclass(frozen=True)
class DecodeResult:
    chosen: Hypothesis
    final_estimate: UtilityEstimate | None
    counters: dict
    timings: dict = field(default_factory=dict, compare=False)
    trace: tuple | None = None


def _ms(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


def _strategy_parts(item):
    if isinstance(item, dict):
        params = {k: v for k, v in item.items() if k not in ("tag", "count")}
        return item["tag"], int(item["count"]), params
    tag, count, *rest = item
    return tag, int(count), dict(rest[0] if rest else {})


def build_hypothesis_space(model: ToySequenceModel, source, strategies, rng: np.random.Generator) -> HypothesisSpace:
    """Union of candidates from ``(tag, count, params)`` strategies, deduplicated.

    params: ``p`` for nucleus; ``beam_size`` (default ``count``) and
    ``alpha`` for beam.
    """
    cands = []
    for item in strategies:
        tag, count, params = _strategy_parts(item)
        if count < 1:
            raise StrategyError(f"strategy {tag!r} needs a positive count, got {count}")
        if tag == "ancestral":
            seqs = [ancestral_sample(model, source, rng) for _ in range(count)]
        elif tag == "nucleus":
            p = params.get("p", 0.7)
            seqs = [nucleus_sample(model, source, p, rng) for _ in range(count)]
        elif tag == "beam":
            beam_size = params.get("beam_size", count)
            if beam_size < count:
                raise StrategyError(f"beam strategy asks for {count} outputs from a beam of {beam_size}")
            found = beam_search(model, source, beam_size, params.get("alpha", 0.0), count)
            if len(found) < count:
                raise StrategyError(f"beam search found only {len(found)} finished sequences, {count} requested")
            cands.extend((model.render(s.sequence), "beam", s.log_prob) for s in found)
            continue
        else:
            raise StrategyError(f"unknown strategy {tag!r}; expected one of {STRATEGIES}")
        cands.extend((model.render(s), tag, log_prob(model, source, s)) for s in seqs)
    return HypothesisSpace.from_candidates(cands)


def map_decode(model: ToySequenceModel, source, config: DecoderConfig) -> DecodeResult:
    t0 = time.perf_counter()
    best = beam_search(model, source, config.beam_size, config.length_penalty_alpha, 1)[0]
    chosen = Hypothesis(model.render(best.sequence), ("beam",), best.log_prob)
    return DecodeResult(chosen, None, {}, {"generation": _ms(t0), "sampling": 0.0, "decoding": 0.0})


def _estimate_space(space: HypothesisSpace, samples: SampleSet, u: UtilityFunction,
                    counter: CallCounter, count_multiplicity: bool) -> list[UtilityEstimate]:
    out = []
    for h in space:
        est = mc_expected_utility(h.sentence, samples, u, counter)
        if count_multiplicity and h.multiplicity > 1:
            counter.add(u.id, (h.multiplicity - 1) * len(samples))
        out.append(est)
    return out


def _argmax(values: Sequence[float], indices: Sequence[int] | None = None) -> int:
    indices = range(len(values)) if indices is None else indices
    best = None
    for i in indices:
        if best is None or values[i] > values[best]:
            best = i
    return best


def mbr_n_by_s(space: HypothesisSpace, samples: SampleSet, target_utility: UtilityFunction,
               counter: CallCounter | None = None, count_multiplicity: bool = False) -> DecodeResult:
    """Argmax of MC expected utility over ``space`` using one shared sample set.

    With ``count_multiplicity`` each candidate is charged once per
    pre-deduplication occurrence.
    """
    if len(space) == 0:
        raise ParameterError("hypothesis space is empty")
    if len(samples) == 0:
        raise ParameterError("sample set is empty")
    counter = CallCounter() if counter is None else counter
    t0 = time.perf_counter()
    ests = _estimate_space(space, samples, target_utility, counter, count_multiplicity)
    best = _argmax([e.value for e in ests])
    trace = tuple(e.value for e in ests)
    return DecodeResult(space[best], ests[best], counter.snapshot(), {"decoding": _ms(t0)}, trace)


def mbr_n_by_n(model: ToySequenceModel, source, N: int, target_utility: UtilityFunction,
               rng: np.random.Generator, counter: CallCounter | None = None) -> DecodeResult:
    """N ancestral samples serve as both candidates and references (N*N calls)."""
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    t0 = time.perf_counter()
    samples = draw_samples(model, source, N, rng)
    sampling = _ms(t0)
    space = HypothesisSpace.from_candidates((s, "ancestral", None) for s in samples)
    result = mbr_n_by_s(space, samples, target_utility, counter, count_multiplicity=True)
    return DecodeResult(result.chosen, result.final_estimate, result.counters,
                        {"generation": 0.0, "sampling": sampling, **result.timings}, result.trace)


def top_t(values: Sequence[float], T: int) -> list[int]:
    """Indices of the T highest values, best first; earlier index wins ties."""
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))
    return order[:T]


def mbr_c2f(space: HypothesisSpace, coarse_samples: SampleSet | None, fine_samples: SampleSet,
            proxy_u: UtilityFunction | None, target_u: UtilityFunction, T: int,
            counter: CallCounter | None = None, proxy_scores: Sequence[float] | None = None) -> DecodeResult:
    """Coarse-to-fine MBR.

    The coarse step keeps the top-T of ``space`` by proxy estimates over
    ``coarse_samples``; the fine step picks the argmax of target estimates
    over ``fine_samples`` among those T, scanning them in space order so
    ties resolve exactly as in :func:`mbr_n_by_s`.  ``proxy_scores``
    replaces the coarse MC step with precomputed per-hypothesis values (no
    proxy calls are counted then).
    """
    if len(space) == 0:
        raise ParameterError("hypothesis space is empty")
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    if T > len(space):
        warnings.warn(f"T={T} exceeds hypothesis space size {len(space)}; clamping", stacklevel=2)
        T = len(space)
    counter = CallCounter() if counter is None else counter
    t0 = time.perf_counter()
    if proxy_scores is None:
        if proxy_u is None or coarse_samples is None:
            raise ParameterError("coarse step needs a proxy utility and coarse samples")
        coarse = [e.value for e in _estimate_space(space, coarse_samples, proxy_u, counter, False)]
    else:
        if len(proxy_scores) != len(space):
            raise ParameterError("proxy_scores must have one value per hypothesis")
        coarse = list(proxy_scores)
    kept = sorted(top_t(coarse, T))
    fine = {i: mc_expected_utility(space[i].sentence, fine_samples, target_u, counter) for i in kept}
    best = _argmax({i: e.value for i, e in fine.items()}, kept)
    trace = tuple((i, coarse[i], fine[i].value) for i in kept)
    return DecodeResult(space[best], fine[best], counter.snapshot(), {"decoding": _ms(t0)}, trace)
