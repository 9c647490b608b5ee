"""Command-line harness: configuration, file formats and experiment runs."""
from .config import ExperimentConfig, load_config, parse_config
from .run import emit_plot_data, rerank_external, run_analyze, run_decode, validate

__all__ = ["ExperimentConfig", "load_config", "parse_config", "emit_plot_data", "rerank_external",
           "run_analyze", "run_decode", "validate"]
