"""Estimation bias of ancestral, nucleus and beam sample sources."""
import argparse
from dataclasses import dataclass

from mbrkit import zoo
from mbrkit.analyze import estimation_bias_experiment, write_report_csv
from mbrkit.seqmodel import enumerate_support


@dataclass
class BiasRun:
    model: str = "skewed"
    source: str = "s0"
    probes: int = 10
    S: int = 10
    replicates: int = 1000
    nucleus_p: float = 0.7
    seed: int = 0
    out: str = "out/bias_report.csv"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(BiasRun()).items():
        ap.add_argument(f"--{name}", type=type(default), default=default)
    run = BiasRun(**vars(ap.parse_args(argv)))
    model = zoo.get(run.model)
    support = sorted(enumerate_support(model, run.source), key=lambda t: (-t[1], t[0]))
    probes = [s for s, _ in support[:run.probes]]
    rep = estimation_bias_experiment(model, run.source, probes, run.S, run.replicates, run.seed,
                                     nucleus_p=run.nucleus_p)
    for strategy, s in rep.summary.items():
        print(f"{strategy:10s} MAD {s['mad']:.5f} (se {s['se']:.5f})")
    print("wrote", write_report_csv(run.out, "bias", rep.rows))


if __name__ == "__main__":
    main()
