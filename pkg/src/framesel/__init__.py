"""Feature selection toolkit with a two-stage RFE + forward selector and a benchmark harness."""

from ._kernels import BACKEND
from .data import Dataset, SyntheticSpec, Task, generate_synthetic, load_csv, train_test_split
from .estimators import EstimatorSpec, fit, predict
from .metrics import evaluate
from .profile import profile_dataset
from .selectors import SelectionResult, SelectorConfig, frame, run_selector

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Dataset",
    "EstimatorSpec",
    "SelectionResult",
    "SelectorConfig",
    "SyntheticSpec",
    "Task",
    "evaluate",
    "fit",
    "frame",
    "generate_synthetic",
    "load_csv",
    "predict",
    "profile_dataset",
    "run_selector",
    "train_test_split",
]
