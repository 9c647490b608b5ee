"""Regenerate the golden outputs under tests/fixtures/golden/.

Each golden run is cross-checked against an independent oracle before it
is written: MAP output against the exact mode, the hand-built rerank
fixture against its hand-computed utility matrix.
"""
import argparse
import json
import math
import shutil
import sys
from fractions import Fraction
from pathlib import Path

from mbrkit import zoo
from mbrkit.harness.cli import main as cli_main
from mbrkit.seqmodel import exact_mode

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
GOLDEN_RUNS = {
    "decode_map": ("decode", "decode.jsonl"),
    "decode_c2f": ("decode", "decode.jsonl"),
    "rerank": ("rerank", "rerank.jsonl"),
}
GOLDEN_FILES = ("summary.json",)

# unigram F1 of each candidate against the 4 samples, by hand
HAND_UF = {
    "a b c": [Fraction(1), Fraction(2, 3), Fraction(4, 5), Fraction(0)],
    "a b": [Fraction(4, 5), Fraction(4, 5), Fraction(1, 2), Fraction(0)],
    "c d": [Fraction(2, 5), Fraction(2, 5), Fraction(1, 2), Fraction(2, 3)],
}


def _records(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def check_map(out: Path):
    model = zoo.get("skewed")
    for rec in _records(out / "decode.jsonl"):
        mode = model.render(exact_mode(model, rec["source_id"])).text
        if rec["chosen"] != mode:
            raise SystemExit(f"map golden disagrees with exact mode for {rec['source_id']}: {rec['chosen']!r}")


def check_rerank(out: Path):
    means = {h: sum(v) / len(v) for h, v in HAND_UF.items()}
    best = max(means, key=means.get)
    rec = _records(out / "rerank.jsonl")[0]
    if rec["chosen"] != best or not math.isclose(rec["estimate"], float(means[best]), abs_tol=1e-15):
        raise SystemExit(f"rerank golden disagrees with hand oracle: {rec}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default=str(FIXTURES / "golden"))
    args = ap.parse_args(argv)
    root = Path(args.out_dir)
    for name, (command, main_file) in GOLDEN_RUNS.items():
        work = root / f".{name}.tmp"
        code = cli_main([command, "--config", str(FIXTURES / f"{name}.json"), "--out-dir", str(work)])
        if code:
            raise SystemExit(f"{name}: exit code {code}")
        if name == "decode_map":
            check_map(work)
        elif name == "rerank":
            check_rerank(work)
        dest = root / name
        dest.mkdir(parents=True, exist_ok=True)
        for f in (main_file, *GOLDEN_FILES):
            shutil.copyfile(work / f, dest / f)
        shutil.rmtree(work)
        print(f"froze {dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
