from src.experiments.config import ExperimentConfig, load_config, parse_config
from src.experiments.report import ExperimentReport, emit_report, read_report, write_table
from src.experiments.runner import PRESETS, build_model, run_experiment
