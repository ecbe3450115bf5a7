"""County-scale hurricane power-outage performance classification.

Ingest outage, socioeconomic and gust-grid extracts, label county
performance, and rank variables with random-forest permutation importance
over repeated random splits.
"""

from .dataset import IntegratedRecord, SplitPlan, label_performance, synth_corpus, to_matrix
from .experiment import ExperimentConfig, emit_outputs, run_experiment
from .forest import REPORTED_OPTIMUM, Forest, Hyperparams, fit_forest
from .importance import mda, mdi, normalize_importance
from .metrics import class_report, confusion, roc_auc
from .tuning import HalvingSchedule, SearchSpace, halving_search

__version__ = "0.1.0"
