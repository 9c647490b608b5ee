import csv
import math

import numpy as np
import pytest

from conftest import table_model
from mbrkit.analyze import (FILTER_COLUMNS, ProxySpec, bin_index, c2f_vs_nbys, estimation_bias_experiment,
                            hypothesis_space_quality, proxy_filter_experiment, scaling_sweep, write_report_csv)
from mbrkit.decode import build_hypothesis_space, top_t
from mbrkit.errors import OracleInfeasibleError, ParameterError
from mbrkit.estimate import ExactOracle
from mbrkit.seqmodel import derive_rng, enumerate_support, random_toy_model
from mbrkit.utility import UtilityFunction, get_utility, memoized

CHRF = memoized(get_utility("chrf"))
DET = {(): {"a": 1.0}, ("a",): {"b": 1.0}, ("b",): {"</s>": 1.0}}


@pytest.fixture
def det():
    return table_model(DET, max_len=3, order=1)


def _top(model, source, n):
    return [s for s, _ in sorted(enumerate_support(model, source), key=lambda t: (-t[1], t[0]))[:n]]


def test_bias_point_mass_is_unbiased(det):
    rep = estimation_bias_experiment(det, "x", ["a b", "a", "b c"], S=3, replicates=5)
    for strategy in ("ancestral", "nucleus", "beam"):
        assert rep.deviation(strategy) == 0.0
    probes = {(r["strategy"], r["hypothesis_id"]) for r in rep.rows}
    assert len(probes) == 9


def test_bias_shared_exact_values(skewed):
    rep = estimation_bias_experiment(skewed, "s0", _top(skewed, "s0", 4), S=5, replicates=20)
    by_probe = {}
    for r in rep.rows:
        by_probe.setdefault(r["hypothesis_id"], set()).add(r["exact"])
    assert all(len(v) == 1 for v in by_probe.values())


def test_bias_skewed_ordering(skewed):
    rep = estimation_bias_experiment(skewed, "s0", _top(skewed, "s0", 10), S=10, replicates=300)
    assert rep.deviation("ancestral") <= rep.deviation("nucleus")
    assert rep.deviation("ancestral") <= rep.deviation("beam")


def test_bias_shrinks_with_replicates(spread):
    probes = _top(spread, "s0", 5)
    one = [estimation_bias_experiment(spread, "s0", probes, 5, 1, seed=s, strategies=("ancestral",))
           .deviation("ancestral") for s in range(10)]
    many = estimation_bias_experiment(spread, "s0", probes, 5, 1000, strategies=("ancestral",))
    assert many.deviation("ancestral") < np.mean(one)


def test_bias_infeasible():
    m = random_toy_model(np.random.default_rng(0), 6, 14, 0, zero_prob=0.0)
    with pytest.raises(OracleInfeasibleError):
        estimation_bias_experiment(m, "s0", ["t0"], 2, 2)


def test_filter_oracle_proxy_full_overlap(spread):
    rep = proxy_filter_experiment(spread, "s0", 40, 10, [ProxySpec("oracle", None)], replicates=3)
    assert all(r["oracle_overlap"] == 1.0 for r in rep.rows)
    assert set(rep.rows[0]) == set(FILTER_COLUMNS)


def test_filter_constant_proxy_keeps_prefix(spread):
    const = UtilityFunction("const", lambda y, h: 0.5)
    rep = proxy_filter_experiment(spread, "s0", 40, 10, [ProxySpec("const", const, 3)], seed=4, replicates=3)
    oracle = ExactOracle(spread, "s0", CHRF)
    for r, row in enumerate(rep.rows):
        space = build_hypothesis_space(spread, "s0", [("ancestral", 40)], derive_rng(4, 0, "filter:candidates", r))
        exact = [oracle(h.sentence) for h in space]
        t = min(10, len(space))
        expected = len(set(top_t(exact, t)) & set(range(t))) / t
        assert row["oracle_overlap"] == expected


def test_filter_same_candidates_across_proxies(spread):
    rep = proxy_filter_experiment(spread, "s0", 30, 5, replicates=2)
    for r in range(2):
        assert len({row["candidates"] for row in rep.rows if row["replicate"] == r}) == 1
    assert {row["proxy"] for row in rep.rows} == {"target@1", "target@5", "target@100", "uf@50", "sbf@50"}


def test_histogram_bins():
    assert bin_index(0.0) == 0
    assert bin_index(0.05) == 1
    assert bin_index(0.0499) == 0
    assert bin_index(1.0) == 19
    with pytest.raises(ParameterError):
        bin_index(1.2)


def test_quality_deterministic_model(det):
    rep = hypothesis_space_quality(det, "x", 12)
    for strategy, counts in rep.counts.items():
        assert sum(counts) == 12
        assert sum(1 for c in counts if c) == 1
    assert rep.edges[0] == 0.0 and rep.edges[-1] == 1.0
    assert len(rep.rows) == 3 * 20


def test_quality_conservation_and_ordering(skewed):
    rep = hypothesis_space_quality(skewed, "s0", 50)
    for counts in rep.counts.values():
        assert sum(counts) == 50
    assert rep.mean_bin("nucleus") >= rep.mean_bin("ancestral")


def test_scaling_n1_matches_closed_form(spread):
    oracle = ExactOracle(spread, "s0", CHRF)
    closed = math.fsum(p * oracle(seq) for seq, p in enumerate_support(spread, "s0"))
    rep = scaling_sweep(spread, ["s0"], [1], [1], replicates=2000, seed=3)
    cell = rep.cell(1, 1)
    assert abs(cell["mean_exact"] - closed) <= 3 * cell["se_exact"]


def test_scaling_call_counts(spread):
    rep = scaling_sweep(spread, ["s0", "s1"], [3, 7], [2, "N"], replicates=4)
    assert len(rep.rows) == 4
    for row in rep.rows:
        S = row["N"] if row["S"] == "N" else row["S"]
        assert row["calls"] == row["N"] * S * 4 * 2


def test_scaling_trend(spread):
    rep = scaling_sweep(spread, ["s0"], [5, 100], [50], replicates=60)
    lo, hi = rep.cell(5, 50), rep.cell(100, 50)
    assert hi["mean_exact"] >= lo["mean_exact"] - lo["std_exact"]


def test_reports_reproducible(spread):
    a = scaling_sweep(spread, ["s0"], [4], [3], replicates=5, seed=9)
    b = scaling_sweep(spread, ["s0"], [4], [3], replicates=5, seed=9)
    assert a == b
    assert c2f_vs_nbys(spread, "s0", 2, N=30, T=5) == c2f_vs_nbys(spread, "s0", 2, N=30, T=5)


def test_write_report_csv(tmp_path, spread):
    rep = scaling_sweep(spread, ["s0"], [2], [2], replicates=2)
    path = write_report_csv(tmp_path / "out" / "scaling.csv", "scaling", rep.rows)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 1
    assert rows[0]["N"] == "2"
    empty = write_report_csv(tmp_path / "empty.csv", "bias", [])
    assert empty.read_text().splitlines() == [
        "strategy,hypothesis_id,estimate_mean,exact,deviation,estimate_std,sample_size,replicates"]


def test_filter_uf50_beats_target1(spread):
    rep = proxy_filter_experiment(spread, "s0", 100, 20, replicates=20)
    assert rep.mean("uf@50", "oracle_overlap") > rep.mean("target@1", "oracle_overlap")


def test_c2f_not_worse_than_n_by_s(spread):
    out = c2f_vs_nbys(spread, "s0", 20)
    assert np.mean(out["c2f"]) >= np.mean(out["nbys"])
