from .config import (COOPERATIVE, ORACLE, REGIMES, ConfigError, ExperimentConfig, config_from_dict,
                     load_config, loads_config)
from .experiment import (COOPERATIVE_MAX, Comparison, SummaryReport, compare_regimes, run_experiment,
                         write_trace_csv)
