"""Emotion-posterior features: a pre-trained 7-class classifier whose
posterior distribution becomes the 7-dim feature vector."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer, load_audio
from .classifiers import Dataset, Model, predict_proba, train
from .dataio import ManifestEntry
from .errors import (
    InsufficientClassCoverage,
    LabelOutOfVocabulary,
    RecipeMismatch,
)
from .functionals import FeatureVector, RECIPE_VERSION, f1_names, f1_vector

EMOTION_CLASSES = ("anger", "happy", "neutral", "sad", "disgust",
                   "boredom", "anxiety")

F4_NAMES = tuple(f"p_{c}" for c in EMOTION_CLASSES)

MODEL_VERSION = "1"


def feature_recipe_hash() -> str:
    """Hash of the f1 extraction recipe; models refuse other recipes."""
    payload = RECIPE_VERSION + "|" + "|".join(f1_names())
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class EmotionModel:
    inner: Model
    recipe_hash: str
    version: str = MODEL_VERSION

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(self.inner.class_order)

    def save(self, path) -> None:
        payload = {
            "version": self.version,
            "classes": list(EMOTION_CLASSES),
            "recipe": {"id": "f1", "hash": self.recipe_hash},
            "model": self.inner.to_dict(),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "EmotionModel":
        with open(path) as fh:
            payload = json.load(fh)
        stored = payload["recipe"]["hash"]
        if stored != feature_recipe_hash():
            raise RecipeMismatch(
                f"model recipe {stored} != current {feature_recipe_hash()}"
            )
        return cls(
            inner=Model.from_dict(payload["model"]),
            recipe_hash=stored,
            version=payload["version"],
        )


def train_emotion_model(entries: list[ManifestEntry], seed: int,
                        classifier_kind: str = "random_forest",
                        features: dict[str, np.ndarray] | None = None
                        ) -> EmotionModel:
    """Fit the 7-class model on f1 features of the given corpus.

    ``features`` may pre-supply f1 vectors keyed by utterance id (used by
    tests and cached extraction); otherwise audio is loaded and featurized
    here.
    """
    for e in entries:
        if e.label not in EMOTION_CLASSES:
            raise LabelOutOfVocabulary(
                f"{e.utterance_id}: label {e.label!r} is not one of "
                f"{EMOTION_CLASSES}"
            )
    counts = {c: 0 for c in EMOTION_CLASSES}
    for e in entries:
        counts[e.label] += 1
    lacking = [c for c, n in counts.items() if n < 2]
    if lacking:
        raise InsufficientClassCoverage(
            f"need >= 2 examples per class; short on {lacking}"
        )

    rows = []
    labels = []
    for e in entries:
        if features is not None and e.utterance_id in features:
            rows.append(np.asarray(features[e.utterance_id]))
        else:
            rows.append(f1_vector(load_audio(e.wav_path)).values)
        labels.append(e.label)
    data = Dataset.from_labels(np.vstack(rows), labels,
                               list(EMOTION_CLASSES))
    inner = train(classifier_kind, data, seed)
    return EmotionModel(inner=inner, recipe_hash=feature_recipe_hash())


def f4_vector(audio: AudioBuffer, model: EmotionModel,
              f1_values: np.ndarray | None = None) -> FeatureVector:
    """Posterior over the frozen 7 emotions for one utterance."""
    if model.recipe_hash != feature_recipe_hash():
        raise RecipeMismatch(
            f"model recipe {model.recipe_hash} != current "
            f"{feature_recipe_hash()}"
        )
    values = f1_values if f1_values is not None else f1_vector(audio).values
    probs = predict_proba(model.inner, values)
    return FeatureVector("f4", probs, F4_NAMES)
