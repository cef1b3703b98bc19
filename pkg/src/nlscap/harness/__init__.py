from .config import CLI_NAMES, ConfigError, Experiment, ExperimentConfig, build_config, load_config
from .report import Check, ExperimentReport
from .suites import run_experiment, sweep
