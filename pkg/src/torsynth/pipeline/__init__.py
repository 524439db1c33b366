"""Experiment orchestration, desk data, instrumentation, reports and the command line."""
from .config import ConfigError, ExperimentConfig, config_from_dict, load_config, save_config
from .desk import make_desk_dataset
from .experiment import StageError, TradeoffReport, preprocess, run_experiment
from .instrument import measure, timing_and_memory
from .report import emit_report

__all__ = ["ConfigError", "ExperimentConfig", "StageError", "TradeoffReport", "config_from_dict",
           "emit_report", "load_config", "make_desk_dataset", "measure", "preprocess",
           "run_experiment", "save_config", "timing_and_memory"]
