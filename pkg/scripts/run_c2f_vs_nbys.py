"""C2F against N-by-S at a matched coarse budget, on shared nucleus spaces."""
import argparse
import math
from dataclasses import dataclass

import numpy as np

from mbrkit import zoo
from mbrkit.analyze import c2f_vs_nbys


@dataclass
class CompareRun:
    model: str = "spread"
    source: str = "s0"
    replicates: int = 20
    N: int = 405
    S_nbys: int = 13
    S_proxy: int = 50
    T: int = 50
    L: int = 100
    seed: int = 0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(CompareRun()).items():
        ap.add_argument(f"--{name}", type=type(default), default=default)
    run = CompareRun(**vars(ap.parse_args(argv)))
    out = c2f_vs_nbys(zoo.get(run.model), run.source, run.replicates, run.seed, run.N, run.S_nbys,
                      run.S_proxy, run.T, run.L)
    for name, values in out.items():
        v = np.asarray(values)
        print(f"{name:5s} mean exact {v.mean():.4f} +/- {v.std(ddof=1) / math.sqrt(len(v)):.4f}")


if __name__ == "__main__":
    main()
