"""Orchestration behind the CLI subcommands.

Outputs written to ``out_dir``:

decode.jsonl / rerank.jsonl
    one record per (source, replicate) in corpus order; deterministic.
timings.jsonl
    per-phase wall times in milliseconds (generation, sampling,
    decoding); not covered by the determinism guarantee.
summary.json
    total call counts, error count and corpus scores against references.
"""
from __future__ import annotations

import csv
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .. import analyze, zoo
from ..decode import (DecodeResult, HypothesisSpace, build_hypothesis_space, map_decode, mbr_c2f,
                      mbr_n_by_n, mbr_n_by_s)
from ..errors import ConfigError, InputDataError, MBRError
from ..estimate import CallCounter, SampleSet, draw_samples
from ..seqmodel import ToySequenceModel, derive_rng, enumerate_support, load_model
from ..utility import corpus_aggregate, get_utility, memoized
from .config import ExperimentConfig, require
from .io import read_candidates, read_corpus, write_json, write_jsonl

PLOT_COLUMNS = {
    "bias": ["strategy", "hypothesis_id", "estimate_mean", "exact", "deviation"],
    "filter": ["proxy", "replicate", "retained_exact_mean", "oracle_overlap", "rank_correlation", "wall_ms"],
    "proportions": ["strategy", "bin_lo", "bin_hi", "count", "proportion"],
    "scaling": ["N", "S", "mean_exact", "std_exact", "calls"],
}


def resolve_model(spec: str) -> ToySequenceModel:
    if spec.startswith("zoo:"):
        return zoo.get(spec[4:])
    return load_model(spec)


@dataclass
class _Outcome:
    record: dict
    timings: dict
    counts: dict


def _ms(t0):
    return (time.perf_counter() - t0) * 1000.0


def _record(source_id, replicate, decoder, result: DecodeResult) -> dict:
    est = result.final_estimate
    return {
        "source_id": source_id,
        "replicate": replicate,
        "decoder": decoder,
        "chosen": result.chosen.text,
        "origins": list(result.chosen.origins),
        "log_prob": result.chosen.log_prob,
        "estimate": None if est is None else est.value,
        "utility_id": None if est is None else est.utility_id,
        "sample_size": None if est is None else est.sample_size,
        "counts": result.counters,
    }


def _error_outcome(source_id, replicate, decoder, e: Exception) -> _Outcome:
    rec = {"source_id": source_id, "replicate": replicate, "decoder": decoder, "error": str(e)}
    return _Outcome(rec, {}, {})


def _run_parallel(fn, tasks, workers):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _corpus_scores(cfg: ExperimentConfig, corpus, outcomes) -> dict:
    refs = {c.source_id: c.references for c in corpus if c.references}
    scores = {}
    for metric in cfg.metrics:
        u = get_utility(metric)
        pairs = []
        for o in outcomes:
            sid = o.record["source_id"]
            if "chosen" not in o.record or sid not in refs:
                continue
            hyp = o.record["chosen"]
            if cfg.multi_reference == "pooled":
                pairs.extend((r, hyp) for r in refs[sid])
            else:
                pairs.append((max(refs[sid], key=lambda r: u(r, hyp)), hyp))
        if pairs:
            scores[metric] = corpus_aggregate(metric, pairs)
    return scores


def _write_outputs(cfg, name, corpus, outcomes) -> dict:
    out = Path(cfg.out_dir)
    totals = CallCounter()
    for o in outcomes:
        for uid, n in o.counts.items():
            totals.add(uid, n)
    summary = {
        "command": name,
        "decoder": cfg.decoder,
        "records": len(outcomes),
        "errors": sum("error" in o.record for o in outcomes),
        "counts": totals.snapshot(),
        "corpus_scores": _corpus_scores(cfg, corpus, outcomes),
    }
    paths = {
        name: write_jsonl(out / f"{name}.jsonl", [o.record for o in outcomes]),
        "timings": write_jsonl(out / "timings.jsonl", [
            {"source_id": o.record["source_id"], "replicate": o.record["replicate"], "timings_ms": o.timings}
            for o in outcomes]),
        "summary": write_json(out / "summary.json", summary),
    }
    return paths


def run_decode(cfg: ExperimentConfig) -> dict:
    """Decode every corpus source with the internal toy model."""
    require(cfg, "model", "corpus")
    model = resolve_model(cfg.model)
    corpus = read_corpus(cfg.corpus)
    for c in corpus:
        if c.source_id not in model.sources:
            raise InputDataError(f"{cfg.corpus}: source_id {c.source_id!r} is not a source of the model")
    dc = cfg.decoder_config
    target = memoized(get_utility(dc.target_utility_id))
    proxy = memoized(get_utility(dc.proxy_utility_id))
    seed = cfg.master_seed

    def task(t):
        si, sid, rep = t
        counter = CallCounter()
        try:
            timings = {}
            if cfg.decoder == "map":
                res = map_decode(model, sid, dc)
                timings = res.timings
            elif cfg.decoder == "nbyn":
                res = mbr_n_by_n(model, sid, dc.N, target, derive_rng(seed, si, "nbyn", rep), counter)
                timings = res.timings
            else:
                t0 = time.perf_counter()
                space = build_hypothesis_space(model, sid, cfg.strategies, derive_rng(seed, si, "hyp", rep))
                timings["generation"] = _ms(t0)
                t0 = time.perf_counter()
                if cfg.decoder == "nbys":
                    samples = draw_samples(model, sid, dc.S, derive_rng(seed, si, "mc", rep))
                    timings["sampling"] = _ms(t0)
                    res = mbr_n_by_s(space, samples, target, counter)
                else:
                    coarse = draw_samples(model, sid, dc.S, derive_rng(seed, si, "coarse", rep))
                    fine = draw_samples(model, sid, dc.L, derive_rng(seed, si, "fine", rep))
                    timings["sampling"] = _ms(t0)
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        res = mbr_c2f(space, coarse, fine, proxy, target, dc.T, counter)
                timings["decoding"] = res.timings["decoding"]
        except MBRError as e:
            return _error_outcome(sid, rep, cfg.decoder, e)
        return _Outcome(_record(sid, rep, cfg.decoder, res), timings, res.counters)

    tasks = [(si, c.source_id, rep) for si, c in enumerate(corpus) for rep in range(cfg.replicates)]
    outcomes = _run_parallel(task, tasks, cfg.workers)
    return _write_outputs(cfg, "decode", corpus, outcomes)


def rerank_external(cfg: ExperimentConfig) -> dict:
    """MBR over file-supplied candidates and samples; no model involved.

    With ``dual_role`` every record of the candidates file serves both as
    a candidate and as a sample (N-by-N style).  For c2f the single sample
    set is used in both the coarse and the fine step.
    """
    require(cfg, "corpus", "candidates")
    if cfg.decoder == "map":
        raise ConfigError("invalid config:\n  decoder: rerank supports nbyn, nbys or c2f")
    if cfg.decoder == "nbyn" and not cfg.dual_role:
        raise ConfigError("invalid config:\n  decoder: nbyn reranking needs dual_role: true")
    if not cfg.dual_role and cfg.samples is None:
        raise ConfigError("invalid config:\n  samples: required unless dual_role is true")
    corpus = read_corpus(cfg.corpus)
    known = {c.source_id for c in corpus}
    records = read_candidates(cfg.candidates, known)
    if cfg.samples is not None and cfg.samples != cfg.candidates:
        records += read_candidates(cfg.samples, known)
    by_source = {c.source_id: ([], []) for c in corpus}
    for r in records:
        cands, samps = by_source[r.source_id]
        if cfg.dual_role or r.kind == "candidate":
            cands.append(r)
        if cfg.dual_role or r.kind == "sample":
            samps.append(r)
    dc = cfg.decoder_config
    target = memoized(get_utility(dc.target_utility_id))
    proxy = memoized(get_utility(dc.proxy_utility_id))

    def task(sid):
        cands, samps = by_source[sid]
        counter = CallCounter()
        try:
            if not cands:
                raise InputDataError(f"source {sid!r} has no candidate records")
            if not samps:
                raise InputDataError(f"source {sid!r} has no sample records")
            t0 = time.perf_counter()
            space = HypothesisSpace.from_candidates((r.text, r.origin, r.log_prob) for r in cands)
            samples = SampleSet(tuple(r.text for r in samps), "file")
            timings = {"generation": 0.0, "sampling": _ms(t0)}
            if cfg.decoder == "c2f":
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    res = mbr_c2f(space, samples, samples, proxy, target, dc.T, counter)
            else:
                res = mbr_n_by_s(space, samples, target, counter, count_multiplicity=cfg.decoder == "nbyn")
            timings["decoding"] = res.timings["decoding"]
        except MBRError as e:
            return _error_outcome(sid, 0, cfg.decoder, e)
        return _Outcome(_record(sid, 0, cfg.decoder, res), timings, res.counters)

    outcomes = _run_parallel(task, [c.source_id for c in corpus], cfg.workers)
    return _write_outputs(cfg, "rerank", corpus, outcomes)


def run_analyze(cfg: ExperimentConfig) -> Path:
    """Run the configured diagnostic experiment and write ``<kind>_report.csv``."""
    require(cfg, "model", "analysis")
    model = resolve_model(cfg.model)
    a = cfg.analysis
    kind = a["experiment"]
    seed = cfg.master_seed
    target = get_utility(cfg.decoder_config.target_utility_id)
    if kind == "bias":
        probes = a["probes"]
        if isinstance(probes, int):
            support = sorted(enumerate_support(model, a["source"]), key=lambda t: (-t[1], t[0]))
            probes = [s for s, _ in support[:probes]]
        else:
            probes = [model.vocabulary.encode(p.split()) for p in probes]
        rows = analyze.estimation_bias_experiment(model, a["source"], probes, a["S"], a["replicates"],
                                                  seed, target, a["nucleus_p"]).rows
    elif kind == "filter":
        rows = analyze.proxy_filter_experiment(model, a["source"], a["N0"], a["T"], None, target, seed,
                                               a["replicates"]).rows
    elif kind == "proportions":
        rows = analyze.hypothesis_space_quality(model, a["source"], a["count"], seed, target,
                                                a["nucleus_p"], a["beam_alpha"]).rows
    else:
        rows = analyze.scaling_sweep(model, a["sources"], a["N_values"], a["S_values"], a["replicates"],
                                     seed, target).rows
    return analyze.write_report_csv(Path(cfg.out_dir) / f"{kind}_report.csv", kind, rows)


def _detect_kind(path: Path, header: list[str]) -> str:
    for kind, columns in analyze.REPORT_SCHEMAS.items():
        if header == columns:
            return kind
    stem = path.stem.removesuffix("_report")
    if stem in analyze.REPORT_SCHEMAS:
        expected = analyze.REPORT_SCHEMAS[stem]
        for i, col in enumerate(expected):
            if i >= len(header) or header[i] != col:
                got = header[i] if i < len(header) else "<missing>"
                raise InputDataError(f"{path}: column {i + 1} should be {col!r}, found {got!r}")
        raise InputDataError(f"{path}: unexpected extra column {header[len(expected)]!r}")
    first = header[0] if header else "<empty header>"
    raise InputDataError(f"{path}: unrecognised report schema (first column {first!r})")


def emit_plot_data(report_paths, out_dir) -> dict:
    """Collect report CSVs into one stable-schema CSV per figure."""
    bundles: dict[str, list[dict]] = {}
    for p in report_paths:
        p = Path(p)
        try:
            with open(p, newline="", encoding="utf-8") as f:
                reader = csv.reader(f)
                header = next(reader, [])
                kind = _detect_kind(p, header)
                rows = [dict(zip(header, r)) for r in reader]
        except OSError as e:
            raise InputDataError(f"{p}: {e}") from None
        bundles.setdefault(kind, []).extend(rows)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    for kind, rows in bundles.items():
        path = out / f"{kind}.csv"
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(PLOT_COLUMNS[kind])
            for r in rows:
                w.writerow([r[c] for c in PLOT_COLUMNS[kind]])
        written[kind] = path
    return written


def validate(cfg: ExperimentConfig) -> list[str]:
    """Parse every input the config names; return a list of what was checked."""
    checked = []
    if cfg.model:
        model = resolve_model(cfg.model)
        checked.append(f"model {cfg.model}: {len(model.sources)} sources")
    if cfg.corpus:
        corpus = read_corpus(cfg.corpus)
        checked.append(f"corpus {cfg.corpus}: {len(corpus)} records")
        known = {c.source_id for c in corpus}
        for name in ("candidates", "samples"):
            path = getattr(cfg, name)
            if path is not None:
                checked.append(f"{name} {path}: {len(read_candidates(path, known))} records")
    return checked
