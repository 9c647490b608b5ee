"""``mbrkit`` command line.

Exit codes: 0 success, 1 usage/config error, 2 input data error,
3 oracle-infeasible.
"""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import MBRError
from .config import load_config
from .run import emit_plot_data, rerank_external, run_analyze, run_decode, validate

log = logging.getLogger("mbrkit")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mbrkit", description="Sampling-based MBR decoding toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--workers", type=int, help="parallel workers over sources")
        p.add_argument("--out-dir", help="output directory")
        return p

    common(sub.add_parser("decode", help="decode a corpus with the internal toy model"))
    common(sub.add_parser("rerank", help="MBR-rerank externally supplied candidate files"))
    common(sub.add_parser("analyze", help="run a diagnostic experiment, write a report CSV"))
    p = common(sub.add_parser("plotdata", help="turn report CSVs into per-figure CSVs"), config_required=False)
    p.add_argument("reports", nargs="+", help="report CSV files")
    common(sub.add_parser("validate", help="validate a config and the files it names"))
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plotdata":
            written = emit_plot_data(args.reports, args.out_dir or ".")
            for kind, path in written.items():
                log.info("%s -> %s", kind, path)
            return 0
        cfg = load_config(args.config, seed=args.seed, workers=args.workers, out_dir=args.out_dir)
        if args.command == "decode":
            paths = run_decode(cfg)
        elif args.command == "rerank":
            paths = rerank_external(cfg)
        elif args.command == "analyze":
            paths = {"report": run_analyze(cfg)}
        else:
            for line in validate(cfg):
                log.info(line)
            log.info("config ok")
            return 0
        for name, path in paths.items():
            log.info("%s -> %s", name, path)
        return 0
    except MBRError as e:
        log.error("error: %s", e)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
