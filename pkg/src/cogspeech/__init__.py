"""Acoustic biomarkers and classifier fusion for dementia-stage
identification from conversational speech."""

__version__ = "0.1.0"

from .audio import AudioBuffer, FrameSequence, load_audio, read_wav
from .chat import Transcript, Turn, parse_cha
from .functionals import FeatureVector, f1_vector, f2_vector
from .prosody import f3_vector
from .emotion import EmotionModel, f4_vector, train_emotion_model
from .cfs import SelectionResult, greedy_stepwise
from .classifiers import Dataset, Model, predict, predict_proba, train
from .fusion import FusionPlan, PosteriorBundle, early_concat, late_sum
from .evaluation import (
    AccessAudit,
    ExperimentReport,
    metrics,
    run_experiment,
    spread_subsample,
    stratified_kfold,
)
from .config import ExperimentConfig, load_config

__all__ = [
    "AudioBuffer",
    "FrameSequence",
    "load_audio",
    "read_wav",
    "Transcript",
    "Turn",
    "parse_cha",
    "FeatureVector",
    "f1_vector",
    "f2_vector",
    "f3_vector",
    "f4_vector",
    "EmotionModel",
    "train_emotion_model",
    "SelectionResult",
    "greedy_stepwise",
    "Dataset",
    "Model",
    "train",
    "predict",
    "predict_proba",
    "FusionPlan",
    "PosteriorBundle",
    "early_concat",
    "late_sum",
    "AccessAudit",
    "ExperimentReport",
    "metrics",
    "run_experiment",
    "spread_subsample",
    "stratified_kfold",
    "ExperimentConfig",
    "load_config",
    "__version__",
]
