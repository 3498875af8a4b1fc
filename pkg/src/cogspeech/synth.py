"""Synthetic mini-corpus generation.

Produces speech-like audio plus matching CHAT transcripts for three
cognitive-status classes whose acoustics differ in controlled ways
(articulation rate, pause length, pitch variability), and a 7-class
emotional-speech corpus for training the posterior-feature model. The
point is a test substrate: every pipeline stage can be exercised without
any license-gated data.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, write_wav
from .dataio import ManifestEntry, write_manifest

SAMPLE_RATE = 16_000

DEMENTIA_LABELS = ("HC", "MCI", "AD")
EMOTION_LABELS = ("anger", "happy", "neutral", "sad", "disgust",
                  "boredom", "anxiety")

_VOCAB = (
    "the boy is on the stool and it is falling over he wants a cookie "
    "mother is drying dishes water runs over the sink outside the window "
    "girl reaches up for the jar they do not see the mess"
).split()


@dataclass(frozen=True)
class VoiceProfile:
    """Acoustic recipe for one class of synthetic speaker."""

    articulation_rate: float      # syllable bursts per second of phonation
    f0_low: float
    f0_high: float
    f0_burst_sd: float            # per-burst pitch deviation (variability cue)
    shimmer_sd: float             # per-burst relative amplitude deviation
    pause_low_s: float
    pause_high_s: float
    phonation_s: float = 2.4


DEMENTIA_PROFILES = {
    "HC": VoiceProfile(5.0, 165.0, 185.0, 30.0, 0.10, 0.26, 0.38),
    "MCI": VoiceProfile(3.5, 145.0, 162.0, 14.0, 0.06, 0.45, 0.65),
    "AD": VoiceProfile(2.0, 126.0, 142.0, 5.0, 0.03, 0.75, 1.10),
}

EMOTION_PROFILES = {
    "anger": VoiceProfile(5.5, 290.0, 320.0, 22.0, 0.10, 0.20, 0.30, 1.2),
    "happy": VoiceProfile(5.0, 250.0, 275.0, 18.0, 0.08, 0.20, 0.30, 1.2),
    "neutral": VoiceProfile(4.0, 170.0, 190.0, 8.0, 0.04, 0.25, 0.35, 1.2),
    "sad": VoiceProfile(2.8, 110.0, 125.0, 5.0, 0.03, 0.40, 0.60, 1.2),
    "disgust": VoiceProfile(3.4, 140.0, 155.0, 10.0, 0.06, 0.30, 0.45, 1.2),
    "boredom": VoiceProfile(2.4, 88.0, 100.0, 4.0, 0.03, 0.45, 0.65, 1.2),
    "anxiety": VoiceProfile(6.0, 215.0, 235.0, 26.0, 0.12, 0.18, 0.28, 1.2),
}

_INV_PROFILE = VoiceProfile(4.5, 100.0, 110.0, 6.0, 0.04, 0.2, 0.3, 0.7)

NOISE_RMS = 0.0025


def _glottal_burst(rng: np.random.Generator, f0: float, duration_s: float,
                   amplitude: float, sr: int) -> np.ndarray:
    """One voiced syllable-like burst: pulse train under a cosine envelope."""
    n = int(round(duration_s * sr))
    out = np.zeros(n)
    pulse_len = int(0.002 * sr)
    tpulse = np.linspace(0, np.pi, pulse_len)
    pulse = np.sin(tpulse) ** 2
    pos = 0.0
    while int(pos) + pulse_len < n:
        # small per-cycle wobble keeps the voice from being sterile
        period = sr / (f0 * (1.0 + 0.004 * rng.standard_normal()))
        start = int(pos)
        out[start:start + pulse_len] += pulse
        pos += period
    envelope = np.sin(np.linspace(0, np.pi, n)) ** 0.5
    return amplitude * out * envelope


def _speech_segment(rng: np.random.Generator, profile: VoiceProfile,
                    sr: int) -> tuple[np.ndarray, list[int], int]:
    """Phrase/pause audio for one speaker; returns (x, phrase spans, bursts).

    phrase spans alternate [p0_start, p0_end, p1_start, ...] in samples.
    """
    rate = profile.articulation_rate * (1.0 + 0.06 * rng.standard_normal())
    rate = max(rate, 0.8)
    n_bursts = max(int(round(profile.phonation_s * rate)), 2)
    n_phrases = int(np.clip(rng.integers(3, 5), 1, max(n_bursts, 1)))
    per_phrase = np.full(n_phrases, n_bursts // n_phrases)
    per_phrase[: n_bursts % n_phrases] += 1
    per_phrase = per_phrase[per_phrase > 0]

    f0_base = rng.uniform(profile.f0_low, profile.f0_high)
    period = 1.0 / rate
    burst_s = 0.65 * period
    gap_s = period - burst_s

    pieces: list[np.ndarray] = []
    spans: list[int] = []
    cursor = 0
    for p, count in enumerate(per_phrase):
        spans.append(cursor)
        for b in range(int(count)):
            f0 = float(np.clip(
                f0_base + profile.f0_burst_sd * rng.standard_normal(),
                70.0, 380.0,
            ))
            amp = float(np.clip(
                0.42 * (1.0 + profile.shimmer_sd * rng.standard_normal()),
                0.05, 0.9,
            ))
            burst = _glottal_burst(rng, f0, burst_s, amp, sr)
            pieces.append(burst)
            cursor += burst.size
            if b != count - 1:
                gap = np.zeros(int(gap_s * sr))
                pieces.append(gap)
                cursor += gap.size
        spans.append(cursor)
        if p != len(per_phrase) - 1:
            pause = np.zeros(int(
                rng.uniform(profile.pause_low_s, profile.pause_high_s) * sr
            ))
            pieces.append(pause)
            cursor += pause.size
    return np.concatenate(pieces), spans, n_bursts


def synth_utterance(seed: int, label: str, sr: int = SAMPLE_RATE,
                    profiles=None):
    """One utterance: clinician opener then participant speech.

    Returns (AudioBuffer, cha text, participant word count).
    """
    profiles = profiles or DEMENTIA_PROFILES
    rng = np.random.default_rng(seed)
    inv_x, _, _ = _speech_segment(rng, _INV_PROFILE, sr)
    gap = np.zeros(int(0.35 * sr))
    par_x, spans, n_bursts = _speech_segment(rng, profiles[label], sr)
    tail = np.zeros(int(0.25 * sr))

    x = np.concatenate([inv_x, gap, par_x, tail])
    x = x + NOISE_RMS * rng.standard_normal(x.size)
    audio = AudioBuffer(np.clip(x, -1.0, 1.0), sr)

    par_offset = inv_x.size + gap.size
    to_ms = lambda s: int(round(s * 1000.0 / sr))

    lines = [
        "@Begin",
        "@Languages:\teng",
        "@Participants:\tPAR Participant, INV Investigator",
        "@ID:\teng|synth|PAR|||||Participant|||",
        "@ID:\teng|synth|INV|||||Investigator|||",
    ]
    inv_words = "tell me everything you see going on"
    lines.append(
        f"*INV:\t{inv_words} . \x150_{to_ms(inv_x.size)}\x15"
    )
    phrase_bounds = [
        (spans[2 * i], spans[2 * i + 1]) for i in range(len(spans) // 2)
    ]
    word_total = 0
    for i, (a, b) in enumerate(phrase_bounds):
        bursts_here = max(int(round(
            n_bursts * (b - a) / max(spans[-1], 1)
        )), 1)
        n_words = max(int(round(bursts_here / 1.35)), 1)
        words = " ".join(
            _VOCAB[int(rng.integers(0, len(_VOCAB)))]
            for _ in range(n_words)
        )
        word_total += n_words
        start = to_ms(par_offset + a)
        # bullets run to the next phrase start so pauses stay inside the
        # retained participant intervals
        if i + 1 < len(phrase_bounds):
            end = to_ms(par_offset + phrase_bounds[i + 1][0])
        else:
            end = to_ms(par_offset + b)
        lines.append(f"*PAR:\t{words} . \x15{start}_{end}\x15")
    lines.append("@End")
    return audio, "\n".join(lines) + "\n", word_total


def generate_corpus(out_dir, n_per_class: int, seed: int,
                    labels=DEMENTIA_LABELS, profiles=None,
                    counts: dict[str, int] | None = None) -> Path:
    """Write wavs + chas + manifest; returns the manifest path."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    out_dir = Path(out_dir)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    (out_dir / "transcripts").mkdir(parents=True, exist_ok=True)
    entries = []
    for label in labels:
        n = counts.get(label, n_per_class) if counts else n_per_class
        for i in range(n):
            utt = f"{label.lower()}_{i:03d}"
            utt_seed = (seed * 100_003 + hash_label(label) * 1009 + i) % (2**31)
            audio, cha, _ = synth_utterance(utt_seed, label,
                                            profiles=profiles)
            wav_path = out_dir / "audio" / f"{utt}.wav"
            cha_path = out_dir / "transcripts" / f"{utt}.cha"
            write_wav(wav_path, audio)
            cha_path.write_text(cha)
            entries.append(ManifestEntry(utt, wav_path, cha_path, label))
    manifest = out_dir / "manifest.csv"
    write_manifest(manifest, entries)
    return manifest


def generate_emotion_corpus(out_dir, n_per_class: int, seed: int) -> Path:
    """7-class emotional-speech corpus (audio only, no transcripts)."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    out_dir = Path(out_dir)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    entries = []
    for label in EMOTION_LABELS:
        for i in range(n_per_class):
            utt = f"{label}_{i:03d}"
            utt_seed = (seed * 90_001 + hash_label(label) * 733 + i) % (2**31)
            rng = np.random.default_rng(utt_seed)
            x, _, _ = _speech_segment(rng, EMOTION_PROFILES[label],
                                      SAMPLE_RATE)
            x = x + NOISE_RMS * rng.standard_normal(x.size)
            audio = AudioBuffer(np.clip(x, -1.0, 1.0), SAMPLE_RATE)
            wav_path = out_dir / "audio" / f"{utt}.wav"
            write_wav(wav_path, audio)
            entries.append(ManifestEntry(utt, wav_path, None, label))
    manifest = out_dir / "manifest.csv"
    write_manifest(manifest, entries)
    return manifest


def hash_label(label: str) -> int:
    return sum(ord(c) * (31 ** k) for k, c in enumerate(label)) % 65_521
