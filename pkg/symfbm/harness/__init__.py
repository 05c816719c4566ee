from .config import ExperimentConfig, config_from_dict, load_config, validate_dict
from .experiments import (
    limit_law_experiment,
    power_sum_clt_experiment,
    residual_decay_experiment,
    riemann_summary,
    simulate,
)
from .lemmas import lemma_bound_scan, run_lemma_scans
from .report import ExperimentReport, StatRecord
from .stats import ks_statistic
