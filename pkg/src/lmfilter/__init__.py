"""Large-margin FIR filtering for multichannel signal sequence labeling."""
__version__ = "0.1.0"

from .signal import FilterBank, LinearModel, filter_apply, vectorize_windows, window_at
from .svm import SvmSolution, decision_values, squared_hinge_objective, train_l2svm
from .window import WindowModel, predict_window, train_window_svm
from .filtersvm import (FilterModel, StoppingRule, gradient_F, objective_J, predict_filter,
                        train_avg_svm, train_filter_svm)
from .toy import ToySpec, default_experiment_specs, generate_toy
from .harness import (GridSpec, HyperParams, OvaModel, error_rate, grid_search, predict_ova,
                      run_figure2_experiment, train_ova)

__all__ = [
    "FilterBank", "LinearModel", "filter_apply", "vectorize_windows", "window_at",
    "SvmSolution", "decision_values", "squared_hinge_objective", "train_l2svm",
    "WindowModel", "predict_window", "train_window_svm",
    "FilterModel", "StoppingRule", "gradient_F", "objective_J", "predict_filter",
    "train_avg_svm", "train_filter_svm",
    "ToySpec", "default_experiment_specs", "generate_toy",
    "GridSpec", "HyperParams", "OvaModel", "error_rate", "grid_search", "predict_ova",
    "run_figure2_experiment", "train_ova",
]
