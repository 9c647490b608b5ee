"""Monte Carlo estimation of expected utility, with call accounting."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError
from .seqmodel import (ToySequenceModel, ancestral_sample, beam_search, enumerate_support,
                       nucleus_sample)
from .utility import TokenizedSentence, UtilityFunction, as_sentence


@dataclass(frozen=True)
class SampleSet:
    """Multiset of reference-role sequences; duplicates are kept on purpose."""

    samples: tuple[TokenizedSentence, ...]
    origin: str = "ancestral"
    seed: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(as_sentence(s) for s in self.samples))

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


@dataclass(frozen=True)
class UtilityEstimate:
    value: float
    sample_size: int
    utility_id: str


class CallCounter:
    """Thread-safe per-utility count of logical utility evaluations."""

    def __init__(self):
        self._counts: dict[str, int] = {}
        self._lock = threading.Lock()

    def add(self, utility_id: str, n: int = 1):
        if n < 0:
            raise ValueError("call counters are monotone")
        with self._lock:
            self._counts[utility_id] = self._counts.get(utility_id, 0) + n

    def __getitem__(self, utility_id: str) -> int:
        return self._counts.get(utility_id, 0)

    def total(self) -> int:
        return sum(self._counts.values())

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return dict(sorted(self._counts.items()))


def draw_samples(model: ToySequenceModel, source, size: int, rng: np.random.Generator,
                 strategy: str = "ancestral", nucleus_p: float = 0.7, beam_alpha: float = 0.0,
                 seed: tuple | None = None) -> SampleSet:
    """Draw a sample set.  Only ``"ancestral"`` gives unbiased estimates.

    ``"beam"`` uses the k-best list (k = beam size = ``size``) as a uniform
    pseudo-sample multiset.
    """
    if size < 1:
        raise ParameterError(f"sample size must be >= 1, got {size}")
    if strategy == "ancestral":
        seqs = [ancestral_sample(model, source, rng) for _ in range(size)]
    elif strategy == "nucleus":
        seqs = [nucleus_sample(model, source, nucleus_p, rng) for _ in range(size)]
    elif strategy == "beam":
        seqs = [s.sequence for s in beam_search(model, source, size, beam_alpha, size)]
    else:
        raise ParameterError(f"unknown sampling strategy {strategy!r}")
    return SampleSet(tuple(model.render(s) for s in seqs), strategy, seed)


def mc_expected_utility(h, samples: SampleSet, u: UtilityFunction,
                        counter: CallCounter | None = None) -> UtilityEstimate:
    """Mean of u(y, h) over the sample multiset."""
    if len(samples) == 0:
        raise ParameterError("cannot estimate expected utility from an empty sample set")
    h = as_sentence(h)
    value = math.fsum(u(y, h) for y in samples.samples) / len(samples)
    if counter is not None:
        counter.add(u.id, len(samples))
    return UtilityEstimate(value, len(samples), u.id)


def exact_expected_utility(model: ToySequenceModel, source, h, u: UtilityFunction) -> float:
    """Sum over the whole support of p(y) u(y, h).  Desk-scale oracle."""
    if not isinstance(h, TokenizedSentence) and not isinstance(h, str):
        h = model.render(tuple(h))
    h = as_sentence(h)
    return math.fsum(p * u(model.render(y), h) for y, p in enumerate_support(model, source))


class ExactOracle:
    """Exact expected utility for one (model, source, utility), memoised per hypothesis."""

    def __init__(self, model: ToySequenceModel, source, u: UtilityFunction):
        self.model = model
        self.source = source
        self.u = u
        self.support = [(model.render(y), p) for y, p in enumerate_support(model, source)]
        self._cache: dict[TokenizedSentence, float] = {}

    def __call__(self, h) -> float:
        if not isinstance(h, (TokenizedSentence, str)):
            h = self.model.render(tuple(h))
        h = as_sentence(h)
        v = self._cache.get(h)
        if v is None:
            v = self._cache[h] = math.fsum(p * self.u(y, h) for y, p in self.support)
        return v

    def argmax(self, hypotheses: Sequence) -> int:
        """Index of the best hypothesis; earliest wins ties."""
        values = [self(h) for h in hypotheses]
        return max(range(len(values)), key=lambda i: (values[i], -i))


def rank_by_expected_utility(H: Iterable, samples: SampleSet, u: UtilityFunction,
                             counter: CallCounter | None = None):
    """Hypotheses with their estimates, best first; stable on ties."""
    H = [as_sentence(h) for h in H]
    if not H:
        raise ParameterError("cannot rank an empty hypothesis list")
    scored = [(h, mc_expected_utility(h, samples, u, counter)) for h in H]
    return sorted(scored, key=lambda t: -t[1].value)
