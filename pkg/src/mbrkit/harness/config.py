"""Experiment configuration: one JSON document, validated before any work."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..decode import STRATEGIES, DecoderConfig
from ..errors import ConfigError, MBRError
from ..utility import get_utility

CONFIG_VERSION = 1
DECODERS = ("map", "nbyn", "nbys", "c2f")
EXPERIMENTS = {
    # experiment -> allowed keys (with defaults)
    "bias": {"source": "s0", "S": 10, "replicates": 1000, "probes": 10, "nucleus_p": 0.7},
    "filter": {"source": "s0", "N0": 100, "T": 20, "replicates": 20},
    "proportions": {"source": "s0", "count": 50, "nucleus_p": 0.7, "beam_alpha": 0.0},
    "scaling": {"sources": ["s0"], "N_values": [5, 25, 100], "S_values": ["N"], "replicates": 200},
}
_TOP_LEVEL = {"version", "decoder", "model", "corpus", "candidates", "samples", "dual_role",
              "decoder_config", "strategies", "metrics", "multi_reference", "replicates",
              "master_seed", "workers", "out_dir", "analysis"}
_DECODER_FIELDS = {f.name for f in dataclasses.fields(DecoderConfig)} - {"master_seed"}


@dataclass
class ExperimentConfig:
    decoder: str = "c2f"
    decoder_config: DecoderConfig = field(default_factory=DecoderConfig)
    model: str | None = None
    corpus: Path | None = None
    candidates: Path | None = None
    samples: Path | None = None
    dual_role: bool = False
    strategies: list = field(default_factory=list)
    metrics: list = field(default_factory=list)
    multi_reference: str = "max"
    replicates: int = 1
    master_seed: int = 0
    workers: int = 1
    out_dir: Path = Path("out")
    analysis: dict | None = None
    base_dir: Path = Path(".")


def _resolve(base: Path, value) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def parse_config(doc: dict, base_dir=".", seed=None, workers=None, out_dir=None) -> ExperimentConfig:
    """Validate ``doc`` and build an :class:`ExperimentConfig`.

    All problems are collected and reported together, one per field.
    Command-line overrides (seed, workers, out_dir) win over the document.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    base = Path(base_dir)
    errors = []

    def err(name, msg):
        errors.append(f"{name}: {msg}")

    for key in sorted(set(doc) - _TOP_LEVEL):
        err(key, "unknown field")
    if doc.get("version") != CONFIG_VERSION:
        err("version", f"must be {CONFIG_VERSION}, got {doc.get('version')!r}")

    cfg = ExperimentConfig(base_dir=base)
    cfg.decoder = doc.get("decoder", "c2f")
    if cfg.decoder not in DECODERS:
        err("decoder", f"must be one of {list(DECODERS)}, got {cfg.decoder!r}")

    for name in ("replicates", "master_seed", "workers"):
        value = doc.get(name, getattr(cfg, name))
        lo = 0 if name == "master_seed" else 1
        if not isinstance(value, int) or isinstance(value, bool) or value < lo:
            err(name, f"must be an integer >= {lo}, got {value!r}")
        else:
            setattr(cfg, name, value)

    dc = doc.get("decoder_config", {})
    if not isinstance(dc, dict):
        err("decoder_config", "must be an object")
        dc = {}
    for key in sorted(set(dc) - _DECODER_FIELDS):
        err(f"decoder_config.{key}", "unknown field")
    try:
        cfg.decoder_config = DecoderConfig(**{k: v for k, v in dc.items() if k in _DECODER_FIELDS},
                                           master_seed=cfg.master_seed if seed is None else seed)
    except (MBRError, TypeError) as e:
        err("decoder_config", str(e))
    for name in ("proxy_utility_id", "target_utility_id"):
        try:
            get_utility(getattr(cfg.decoder_config, name))
        except MBRError as e:
            err(f"decoder_config.{name}", str(e))

    strategies = doc.get("strategies")
    if strategies is None:
        d = cfg.decoder_config
        strategies = [{"tag": "nucleus", "count": d.N, "p": d.nucleus_p}]
    if not isinstance(strategies, list) or not strategies:
        err("strategies", "must be a non-empty list")
        strategies = []
    for i, s in enumerate(strategies):
        if not isinstance(s, dict) or s.get("tag") not in STRATEGIES:
            err(f"strategies[{i}]", f"needs a tag in {list(STRATEGIES)}")
            continue
        if not isinstance(s.get("count"), int) or s["count"] < 1:
            err(f"strategies[{i}].count", "must be a positive integer")
        allowed = {"tag", "count"} | {"nucleus": {"p"}, "beam": {"beam_size", "alpha"}}.get(s["tag"], set())
        for key in sorted(set(s) - allowed):
            err(f"strategies[{i}].{key}", "unknown field")
    cfg.strategies = strategies

    metrics = doc.get("metrics", [])
    if not isinstance(metrics, list):
        err("metrics", "must be a list of metric ids")
        metrics = []
    for i, m in enumerate(metrics):
        try:
            get_utility(m)
        except (MBRError, TypeError, AttributeError) as e:
            err(f"metrics[{i}]", str(e))
    cfg.metrics = metrics

    cfg.multi_reference = doc.get("multi_reference", "max")
    if cfg.multi_reference not in ("max", "pooled"):
        err("multi_reference", "must be 'max' or 'pooled'")
    cfg.dual_role = doc.get("dual_role", False)
    if not isinstance(cfg.dual_role, bool):
        err("dual_role", "must be true or false")

    if "model" in doc:
        model = doc["model"]
        if not isinstance(model, str):
            err("model", "must be 'zoo:<name>' or a path")
        else:
            cfg.model = model if model.startswith("zoo:") else str(_resolve(base, model))
    for name in ("corpus", "candidates", "samples"):
        if name in doc:
            if not isinstance(doc[name], str):
                err(name, "must be a path string")
            else:
                setattr(cfg, name, _resolve(base, doc[name]))
    if out_dir is not None:
        cfg.out_dir = Path(out_dir)
    elif "out_dir" in doc:
        cfg.out_dir = _resolve(base, doc["out_dir"])
    if workers is not None:
        if workers < 1:
            err("workers", "must be >= 1")
        cfg.workers = workers
    if seed is not None:
        cfg.master_seed = seed

    if "analysis" in doc:
        a = doc["analysis"]
        if not isinstance(a, dict) or a.get("experiment") not in EXPERIMENTS:
            err("analysis.experiment", f"must be one of {list(EXPERIMENTS)}")
        else:
            allowed = EXPERIMENTS[a["experiment"]]
            for key in sorted(set(a) - set(allowed) - {"experiment"}):
                err(f"analysis.{key}", "unknown field")
            cfg.analysis = {"experiment": a["experiment"], **allowed, **{k: v for k, v in a.items() if k in allowed}}

    if errors:
        raise ConfigError("invalid config:\n  " + "\n  ".join(errors))
    return cfg


def load_config(path, seed=None, workers=None, out_dir=None) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from None
    return parse_config(doc, path.parent, seed=seed, workers=workers, out_dir=out_dir)


def require(cfg: ExperimentConfig, *names):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise ConfigError("invalid config:\n  " + "\n  ".join(f"{n}: required for this command" for n in missing))
