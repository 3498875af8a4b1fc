"""Speaking-rate features: syllable nuclei, pauses, and the 7-dim vector."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer, expected_frame_count, frame_signal
from .errors import WordRateFallbackWarning
from .functionals import FeatureVector
from .lld import pitch_track

HOP_MS = 10.0
SMOOTH_MS = 50.0
PEAK_OVER_MEDIAN_DB = 2.0
DIP_DB = 2.0
PAUSE_DROP_DB = 25.0
# -45 dB re full-scale mean-square: above typical recording noise beds,
# below any plausible speech level after normalization
ENERGY_FLOOR = 10.0 ** (-4.5)
MIN_PAUSE_MS = 250

F3_NAMES = (
    "words_per_minute",
    "n_syllables",
    "speech_duration_s",
    "phonation_time_s",
    "n_pauses",
    "articulation_rate",
    "avg_syllable_duration_s",
)


@dataclass(frozen=True)
class ProsodyProfile:
    n_syllables: int
    n_pauses: int
    speech_duration_s: float
    phonation_time_s: float
    words_per_minute: float
    articulation_rate: float
    avg_syllable_duration_s: float


def _energy_contour(audio: AudioBuffer, window_ms: float) -> np.ndarray:
    """Mean-square energy on a 10 ms hop; one value per hop frame."""
    sr = audio.sample_rate
    hop = int(round(HOP_MS * sr / 1000.0))
    win = max(int(round(window_ms * sr / 1000.0)), 1)
    n = expected_frame_count(len(audio), win, hop)
    if n == 0:
        return np.zeros(0)
    idx = np.arange(win)[None, :] + hop * np.arange(n)[:, None]
    x = audio.samples[idx]
    return (x * x).mean(axis=1)


def _to_db(energy: np.ndarray) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(energy, 1e-12))


def detect_syllables(audio: AudioBuffer) -> list[float]:
    """Nucleus timestamps (s) from intensity peaks inside voiced regions.

    A peak qualifies when it exceeds the median contour energy by 2 dB and
    is separated from the previous kept peak by a dip of at least 2 dB.
    """
    contour = _to_db(_energy_contour(audio, SMOOTH_MS))
    if contour.size < 3:
        return []
    threshold = np.median(contour) + PEAK_OVER_MEDIAN_DB

    candidates = [
        i for i in range(1, contour.size - 1)
        if contour[i] > contour[i - 1] and contour[i] > contour[i + 1]
        and contour[i] >= threshold
    ]
    kept: list[int] = []
    for i in candidates:
        if not kept:
            kept.append(i)
            continue
        valley = contour[kept[-1]:i + 1].min()
        if min(contour[kept[-1]], contour[i]) - valley >= DIP_DB:
            kept.append(i)
        elif contour[i] > contour[kept[-1]]:
            kept[-1] = i

    voiced = _voiced_mask_for_contour(audio, contour.size)
    sr = audio.sample_rate
    hop = int(round(HOP_MS * sr / 1000.0))
    half_win = int(round(SMOOTH_MS * sr / 1000.0)) // 2
    return [
        (i * hop + half_win) / sr for i in kept if voiced[i]
    ]


def _voiced_mask_for_contour(audio: AudioBuffer, n_contour: int) -> np.ndarray:
    """Map 20/10 ms pitch voicing onto the 50/10 ms contour grid."""
    frames = frame_signal(audio, 20.0, HOP_MS, "hamming")
    if frames.n_frames == 0:
        return np.zeros(n_contour, dtype=bool)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        voiced = pitch_track(audio, frames).voiced
    out = np.zeros(n_contour, dtype=bool)
    for i in range(n_contour):
        # the 50 ms contour window centered near pitch frames i+1 / i+2
        j0 = min(i + 1, len(voiced) - 1)
        j1 = min(i + 3, len(voiced))
        out[i] = voiced[j0:max(j1, j0 + 1)].any()
    return out


def detect_pauses(audio: AudioBuffer,
                  min_pause_ms: int = MIN_PAUSE_MS) -> list[tuple[int, int]]:
    """Internal low-energy runs of at least min_pause_ms, as (start, end) ms.

    The threshold is max(absolute floor, median energy - 25 dB); leading
    and trailing silence never count as pauses.
    """
    if min_pause_ms <= 0:
        raise ValueError("min_pause_ms must be positive")
    energy = _energy_contour(audio, HOP_MS)  # 10 ms rect frames, no overlap
    if energy.size == 0:
        return []
    db = _to_db(energy)
    threshold = max(_to_db(np.array([ENERGY_FLOOR]))[0],
                    np.median(db) - PAUSE_DROP_DB)
    quiet = db < threshold

    loud = np.flatnonzero(~quiet)
    if loud.size == 0:
        return []
    first, last = loud[0], loud[-1]

    pauses = []
    i = first
    hop_ms = HOP_MS
    while i <= last:
        if quiet[i]:
            j = i
            while j <= last and quiet[j]:
                j += 1
            dur_ms = (j - i) * hop_ms
            if dur_ms >= min_pause_ms:
                pauses.append((int(round(i * hop_ms)),
                               int(round(j * hop_ms))))
            i = j
        else:
            i += 1
    return pauses


def prosody_profile(audio: AudioBuffer,
                    word_count: int | None = None) -> ProsodyProfile:
    syllables = detect_syllables(audio)
    pauses = detect_pauses(audio)
    duration = audio.duration_s
    pause_time = sum(end - start for start, end in pauses) / 1000.0
    phonation = max(duration - pause_time, 0.0)
    n_syll = len(syllables)

    if word_count is None:
        warnings.warn(
            "no transcript word count; words-per-minute falls back to "
            "syllables / 1.5",
            WordRateFallbackWarning,
        )
        effective_words = n_syll / 1.5
    else:
        effective_words = float(word_count)
    wpm = 60.0 * effective_words / duration if duration > 0 else 0.0

    articulation = n_syll / phonation if phonation > 0 else 0.0
    avg_syll = phonation / n_syll if n_syll > 0 else 0.0
    return ProsodyProfile(
        n_syllables=n_syll,
        n_pauses=len(pauses),
        speech_duration_s=duration,
        phonation_time_s=phonation,
        words_per_minute=wpm,
        articulation_rate=articulation,
        avg_syllable_duration_s=avg_syll,
    )


def f3_vector(audio: AudioBuffer,
              word_count: int | None = None) -> FeatureVector:
    """The 7 speaking-rate dimensions in frozen order."""
    p = prosody_profile(audio, word_count)
    values = np.array([
        p.words_per_minute,
        p.n_syllables,
        p.speech_duration_s,
        p.phonation_time_s,
        p.n_pauses,
        p.articulation_rate,
        p.avg_syllable_duration_s,
    ])
    return FeatureVector("f3", values, F3_NAMES)
