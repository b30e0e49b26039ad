"""Temperature-scheduled training and open-set evaluation on synthetic data."""
from .data import DatasetSplit, GeneratorSpec, generate
from .harness import ExperimentConfig, evaluate, sweep, train
from .metrics import EvalResult, auroc, oscr
from .schedule import Kind, ScheduleSpec, temperature_at

__all__ = ["DatasetSplit", "EvalResult", "ExperimentConfig", "GeneratorSpec", "Kind",
           "ScheduleSpec", "auroc", "evaluate", "generate", "oscr", "sweep",
           "temperature_at", "train"]
__version__ = "0.1.0"
