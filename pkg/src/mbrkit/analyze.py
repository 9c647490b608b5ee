"""Desk-scale diagnostic experiments on enumerable toy models.

Every experiment takes a master seed and derives one rng stream per
(strategy, replicate) via :func:`mbrkit.seqmodel.derive_rng`, so reports
are reproducible bit-for-bit.  Exact values always come from a single
shared :class:`~mbrkit.estimate.ExactOracle`.
"""
from __future__ import annotations

import csv
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .decode import HypothesisSpace, build_hypothesis_space, mbr_c2f, mbr_n_by_s, top_t
from .errors import ParameterError
from .estimate import CallCounter, ExactOracle, SampleSet, draw_samples, mc_expected_utility
from .seqmodel import ToySequenceModel, beam_search, derive_rng
from .utility import UtilityFunction, as_sentence, get_utility, memoized

DEFAULT_TARGET = "chrf"
N_BINS = 20

# report CSV schemas; the first columns of each are what the plot emitter keeps
BIAS_COLUMNS = ["strategy", "hypothesis_id", "estimate_mean", "exact", "deviation",
                "estimate_std", "sample_size", "replicates"]
FILTER_COLUMNS = ["proxy", "replicate", "retained_exact_mean", "oracle_overlap", "rank_correlation",
                  "wall_ms", "proxy_samples", "T", "candidates"]
PROPORTION_COLUMNS = ["strategy", "bin_lo", "bin_hi", "count", "proportion"]
SCALING_COLUMNS = ["N", "S", "mean_exact", "std_exact", "se_exact", "calls", "replicates"]


def _target(u):
    return memoized(get_utility(DEFAULT_TARGET) if u is None else u)


def _mean_std(xs):
    xs = np.asarray(xs, dtype=float)
    if len(xs) < 2:
        return float(xs.mean()), 0.0
    return float(xs.mean()), float(xs.std(ddof=1))


# -- estimation bias -------------------------------------------------------

@dataclass
class BiasReport:
    rows: list[dict]
    summary: dict  # strategy -> {"mad": ..., "se": ...}

    def deviation(self, strategy: str) -> float:
        return self.summary[strategy]["mad"]


def estimation_bias_experiment(model: ToySequenceModel, source, probes: Sequence, S: int, replicates: int,
                               seed: int = 0, u: UtilityFunction | None = None, nucleus_p: float = 0.7,
                               strategies: Sequence[str] = ("ancestral", "nucleus", "beam")) -> BiasReport:
    """Mean MC estimate per probe hypothesis for each sample source vs the exact value.

    Beam pseudo-samples are deterministic, so one replicate stands for all.
    ``se`` in the summary propagates per-probe standard errors through the
    mean absolute deviation.
    """
    u = _target(u)
    oracle = ExactOracle(model, source, u)
    probes = [as_sentence(p) if isinstance(p, str) or hasattr(p, "tokens") else model.render(tuple(p))
              for p in probes]
    exact = [oracle(h) for h in probes]
    rows, summary = [], {}
    for strategy in strategies:
        reps = 1 if strategy == "beam" else replicates
        est = np.empty((reps, len(probes)))
        for r in range(reps):
            samples = draw_samples(model, source, S, derive_rng(seed, 0, f"bias:{strategy}:S{S}", r),
                                   strategy=strategy, nucleus_p=nucleus_p)
            est[r] = [mc_expected_utility(h, samples, u).value for h in probes]
        if strategy == "beam":
            est = np.repeat(est, replicates, axis=0)
        means = est.mean(axis=0)
        stds = est.std(axis=0, ddof=1) if replicates > 1 else np.zeros(len(probes))
        devs = np.abs(means - np.asarray(exact))
        for i, h in enumerate(probes):
            rows.append({"strategy": strategy, "hypothesis_id": i, "estimate_mean": float(means[i]),
                         "exact": exact[i], "deviation": float(devs[i]), "estimate_std": float(stds[i]),
                         "sample_size": S, "replicates": replicates})
        se = math.sqrt(float(np.sum((stds / math.sqrt(replicates)) ** 2))) / len(probes)
        summary[strategy] = {"mad": float(devs.mean()), "se": se}
    return BiasReport(rows, summary)


# -- proxy filtering -------------------------------------------------------

@dataclass(frozen=True)
class ProxySpec:
    """A coarse-step scorer: ``utility`` over ``samples`` ancestral draws.

    ``utility=None`` means the exact oracle of the target utility.
    """

    name: str
    utility: UtilityFunction | None
    samples: int = 0


def default_proxies(target: UtilityFunction) -> list[ProxySpec]:
    return [
        ProxySpec("target@1", target, 1),
        ProxySpec("target@5", target, 5),
        ProxySpec("target@100", target, 100),
        ProxySpec("uf@50", get_utility("uf"), 50),
        ProxySpec("sbf@50", get_utility("sbf"), 50),
    ]


@dataclass
class FilterReport:
    rows: list[dict]

    def mean(self, proxy: str, column: str) -> float:
        return float(np.mean([r[column] for r in self.rows if r["proxy"] == proxy]))


def proxy_filter_experiment(model: ToySequenceModel, source, N0: int, T: int, proxies=None,
                            target_u: UtilityFunction | None = None, seed: int = 0,
                            replicates: int = 1) -> FilterReport:
    """Filter a top-T from N0 ancestral candidates with each proxy.

    Per replicate, all proxies see the same candidate set; the reference
    point is the exact-oracle top-T of that set.
    """
    target_u = _target(target_u)
    proxies = default_proxies(target_u) if proxies is None else proxies
    oracle = ExactOracle(model, source, target_u)
    rows = []
    for r in range(replicates):
        space = build_hypothesis_space(model, source, [("ancestral", N0)],
                                       derive_rng(seed, 0, "filter:candidates", r))
        exact = [oracle(h.sentence) for h in space]
        t = min(T, len(space))
        oracle_top = set(top_t(exact, t))
        for spec in proxies:
            t0 = time.perf_counter()
            if spec.utility is None:
                scores = list(exact)
            else:
                samples = draw_samples(model, source, spec.samples,
                                       derive_rng(seed, 0, f"filter:{spec.name}", r))
                u = memoized(spec.utility)
                scores = [mc_expected_utility(h.sentence, samples, u).value for h in space]
            kept = top_t(scores, t)
            wall = (time.perf_counter() - t0) * 1000.0
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rho = stats.spearmanr(scores, exact).statistic if len(space) > 1 else float("nan")
            rows.append({"proxy": spec.name, "replicate": r,
                         "retained_exact_mean": float(np.mean([exact[i] for i in kept])),
                         "oracle_overlap": len(oracle_top.intersection(kept)) / t,
                         "rank_correlation": float(rho), "wall_ms": wall,
                         "proxy_samples": spec.samples, "T": t, "candidates": len(space)})
    return FilterReport(rows)


# -- hypothesis-space quality ----------------------------------------------

@dataclass
class ProportionReport:
    edges: list[float]
    counts: dict  # strategy -> list of bin counts
    values: dict = field(default_factory=dict)  # strategy -> exact utilities

    def mean_bin(self, strategy: str) -> float:
        c = np.asarray(self.counts[strategy], dtype=float)
        return float((c * np.arange(len(c))).sum() / c.sum())

    @property
    def rows(self) -> list[dict]:
        out = []
        for strategy, counts in self.counts.items():
            total = sum(counts)
            for i, c in enumerate(counts):
                out.append({"strategy": strategy, "bin_lo": self.edges[i], "bin_hi": self.edges[i + 1],
                            "count": c, "proportion": c / total if total else 0.0})
        return out


def bin_index(value: float, n_bins: int = N_BINS) -> int:
    """Bins are [i/n, (i+1)/n); the last one also takes 1.0."""
    if not 0.0 <= value <= 1.0:
        raise ParameterError(f"value {value} outside [0, 1]")
    return min(int(value * n_bins), n_bins - 1)


def hypothesis_space_quality(model: ToySequenceModel, source, count: int, seed: int = 0,
                             u: UtilityFunction | None = None, nucleus_p: float = 0.7,
                             beam_alpha: float = 0.0, n_bins: int = N_BINS) -> ProportionReport:
    """Histogram of exact expected utility of each strategy's raw candidates."""
    u = _target(u)
    oracle = ExactOracle(model, source, u)
    edges = [i / n_bins for i in range(n_bins + 1)]
    counts, values = {}, {}
    plan = [("ancestral", {}), ("nucleus", {"p": nucleus_p}), ("beam", {})]
    for tag, params in plan:
        if tag == "beam":
            # a k-best list shorter than count (tiny support) repeats in rank order
            best = [model.render(s.sequence) for s in beam_search(model, source, count, beam_alpha, count)]
            vals = [oracle(best[i % len(best)]) for i in range(count)]
        else:
            space = build_hypothesis_space(model, source, [(tag, count, params)],
                                           derive_rng(seed, 0, f"quality:{tag}", 0))
            vals = []
            for h in space:
                vals.extend([oracle(h.sentence)] * h.multiplicity)
        hist = [0] * n_bins
        for v in vals:
            hist[bin_index(v, n_bins)] += 1
        counts[tag] = hist
        values[tag] = vals
    return ProportionReport(edges, counts, values)


# -- scaling ---------------------------------------------------------------

@dataclass
class ScalingReport:
    rows: list[dict]

    def cell(self, N, S) -> dict:
        for r in self.rows:
            if r["N"] == N and r["S"] == S:
                return r
        raise KeyError((N, S))


def scaling_sweep(model: ToySequenceModel, sources: Sequence, N_values: Sequence[int], S_values: Sequence,
                  replicates: int, seed: int = 0, u: UtilityFunction | None = None) -> ScalingReport:
    """Replicate-mean exact utility of N-by-S output per (N, S) cell.

    Candidates are N ancestral draws (duplicates charged, so calls are
    N*S per decode).  ``S="N"`` runs N-by-N: the candidates double as
    the samples.
    """
    u = _target(u)
    oracles = {s: ExactOracle(model, s, u) for s in sources}
    rows = []
    for N in N_values:
        for S in S_values:
            values = []
            counter = CallCounter()
            for r in range(replicates):
                for si, source in enumerate(sources):
                    space = build_hypothesis_space(model, source, [("ancestral", N)],
                                                   derive_rng(seed, si, f"sweep:hyp:{N}", r))
                    if S == "N":
                        samples = SampleSet(tuple(h.sentence for h in space for _ in range(h.multiplicity)))
                    else:
                        samples = draw_samples(model, source, S, derive_rng(seed, si, f"sweep:mc:{N}:{S}", r))
                    res = mbr_n_by_s(space, samples, u, counter, count_multiplicity=True)
                    values.append(oracles[source](res.chosen.sentence))
            mean, std = _mean_std(values)
            rows.append({"N": N, "S": S, "mean_exact": mean, "std_exact": std,
                         "se_exact": std / math.sqrt(len(values)), "calls": counter.total(),
                         "replicates": replicates})
    return ScalingReport(rows)


def c2f_vs_nbys(model: ToySequenceModel, source, replicates: int, seed: int = 0, N: int = 405,
                S_nbys: int = 13, S_proxy: int = 50, T: int = 50, L: int = 100, nucleus_p: float = 0.7,
                proxy: UtilityFunction | None = None, target: UtilityFunction | None = None) -> dict:
    """Exact utility of C2F and N-by-S choices on shared nucleus hypothesis spaces."""
    target = _target(target)
    proxy = memoized(get_utility("uf") if proxy is None else proxy)
    oracle = ExactOracle(model, source, target)
    out = {"c2f": [], "nbys": []}
    for r in range(replicates):
        space = build_hypothesis_space(model, source, [("nucleus", N, {"p": nucleus_p})],
                                       derive_rng(seed, 0, "cmp:hyp", r))
        coarse = draw_samples(model, source, S_proxy, derive_rng(seed, 0, "cmp:coarse", r))
        fine = draw_samples(model, source, L, derive_rng(seed, 0, "cmp:fine", r))
        small = draw_samples(model, source, S_nbys, derive_rng(seed, 0, "cmp:nbys", r))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            c = mbr_c2f(space, coarse, fine, proxy, target, T)
        n = mbr_n_by_s(space, small, target)
        out["c2f"].append(oracle(c.chosen.sentence))
        out["nbys"].append(oracle(n.chosen.sentence))
    return out


def measure_cost_ratio(slow: UtilityFunction, fast: UtilityFunction, pairs, repeat: int = 3) -> float:
    """Wall-time ratio slow/fast over the same (reference, hypothesis) pairs."""
    def run(u):
        best = math.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            for y, h in pairs:
                u(y, h)
            best = min(best, time.perf_counter() - t0)
        return best
    return run(slow) / max(run(fast), 1e-12)


# -- CSV -------------------------------------------------------------------

REPORT_SCHEMAS = {
    "bias": BIAS_COLUMNS,
    "filter": FILTER_COLUMNS,
    "proportions": PROPORTION_COLUMNS,
    "scaling": SCALING_COLUMNS,
}


def write_report_csv(path, kind: str, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = REPORT_SCHEMAS[kind]
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({c: row[c] for c in columns})
    return path
