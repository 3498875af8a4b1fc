"""Per-utterance feature extraction over a manifest, with content caching.

One worker handles one utterance: load audio, strip clinician turns using
the transcript timing, and compute the requested feature sets. Failures
are collected, not fatal; the cache keys on content hashes so re-runs skip
unchanged work.
"""

from __future__ import annotations

import hashlib
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import load_audio
from .chat import excise_segments, parse_cha, participant_intervals, word_count
from .dataio import FeatureCorpus, ManifestEntry, class_order_of
from .emotion import EmotionModel, F4_NAMES, f4_vector
from .functionals import RECIPE_VERSION, f1_names, f1_vector, f2_names, f2_vector
from .prosody import F3_NAMES, f3_vector

ALL_SETS = ("f1", "f2", "f3", "f4")

SET_NAME_FNS = {
    "f1": f1_names,
    "f2": f2_names,
    "f3": lambda: F3_NAMES,
    "f4": lambda: F4_NAMES,
}


@dataclass
class ExtractStats:
    computed: int = 0
    cached: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _content_key(entry: ManifestEntry, set_id: str,
                 emotion_hash: str | None) -> str:
    h = hashlib.sha256()
    h.update(Path(entry.wav_path).read_bytes())
    if entry.cha_path is not None:
        h.update(Path(entry.cha_path).read_bytes())
    h.update(RECIPE_VERSION.encode())
    h.update(set_id.encode())
    if set_id == "f4" and emotion_hash:
        h.update(emotion_hash.encode())
    return h.hexdigest()[:16]


def prepared_audio(entry: ManifestEntry):
    """Load, excise clinician turns, and return (audio, word count)."""
    audio = load_audio(entry.wav_path)
    words = None
    if entry.cha_path is not None:
        transcript = parse_cha(Path(entry.cha_path).read_text())
        speaker = transcript.participant_id or "PAR"
        intervals = participant_intervals(transcript, speaker)
        if intervals:
            audio = excise_segments(audio, intervals)
        words = word_count(transcript, speaker)
    return audio, words


def extract_utterance(entry: ManifestEntry, sets,
                      emotion_model: EmotionModel | None) -> dict:
    """Feature values per requested set for one manifest entry."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        audio, words = prepared_audio(entry)
        out = {}
        f1_cache = None
        if "f1" in sets or "f4" in sets:
            f1_cache = f1_vector(audio)
        if "f1" in sets:
            out["f1"] = f1_cache.values
        if "f2" in sets:
            out["f2"] = f2_vector(audio).values
        if "f3" in sets:
            out["f3"] = f3_vector(audio, words).values
        if "f4" in sets:
            if emotion_model is None:
                raise ValueError("f4 requested without an emotion model")
            out["f4"] = f4_vector(audio, emotion_model,
                                  f1_values=f1_cache.values).values
    return out


def _work(args):
    entry, sets, model_path = args
    model = EmotionModel.load(model_path) if model_path else None
    try:
        return entry.utterance_id, extract_utterance(entry, sets, model), None
    except Exception as exc:  # per-file failure, run continues
        return entry.utterance_id, None, f"{type(exc).__name__}: {exc}"


def extract_corpus(
    entries: list[ManifestEntry],
    sets,
    emotion_model_path=None,
    cache_dir=None,
    jobs: int = 1,
) -> tuple[FeatureCorpus, ExtractStats]:
    """Extract all requested sets for a manifest, using the cache."""
    sets = [s for s in ALL_SETS if s in sets]
    stats = ExtractStats()
    emotion_model = (EmotionModel.load(emotion_model_path)
                     if emotion_model_path else None)
    emotion_hash = emotion_model.recipe_hash if emotion_model else None

    cache = Path(cache_dir) if cache_dir else None
    if cache:
        cache.mkdir(parents=True, exist_ok=True)

    results: dict[str, dict[str, np.ndarray]] = {}
    todo: list[ManifestEntry] = []
    keys: dict[tuple[str, str], str] = {}

    for entry in entries:
        hit = {}
        ok = True
        for s in sets:
            key = _content_key(entry, s, emotion_hash)
            keys[(entry.utterance_id, s)] = key
            path = cache / f"{entry.utterance_id}.{s}.{key}.npy" if cache \
                else None
            if path is not None and path.exists():
                hit[s] = np.load(path)
            else:
                ok = False
        if ok and len(hit) == len(sets):
            results[entry.utterance_id] = hit
            stats.cached += 1
        else:
            todo.append(entry)

    if todo:
        if jobs > 1:
            payload = [(e, sets, emotion_model_path) for e in todo]
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                outcomes = list(pool.map(_work, payload))
        else:
            outcomes = []
            for e in todo:
                try:
                    outcomes.append(
                        (e.utterance_id,
                         extract_utterance(e, sets, emotion_model), None)
                    )
                except Exception as exc:
                    outcomes.append(
                        (e.utterance_id, None,
                         f"{type(exc).__name__}: {exc}")
                    )
        for utt, values, error in outcomes:
            if values is None:
                if error:
                    stats.failures.append((utt, error))
                continue
            results[utt] = values
            stats.computed += 1
            if cache:
                for s in sets:
                    np.save(
                        cache / f"{utt}.{s}.{keys[(utt, s)]}.npy", values[s]
                    )

    kept = [e for e in entries if e.utterance_id in results]
    corpus = FeatureCorpus(
        ids=[e.utterance_id for e in kept],
        labels=[e.label for e in kept],
        class_order=class_order_of(entries),
        sets={
            s: (
                np.vstack([results[e.utterance_id][s] for e in kept])
                if kept else np.zeros((0, len(SET_NAME_FNS[s]()))),
                list(SET_NAME_FNS[s]()),
            )
            for s in sets
        },
    )
    return corpus, stats


