"""WAV loading, resampling, framing, and spectral-subtraction denoising.

Everything downstream consumes :class:`AudioBuffer` (mono float64 in
[-1, 1]) and :class:`FrameSequence`. The canonical internal rate is 16 kHz;
``load_audio`` resamples on read.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import resample_poly

from .errors import (
    AudioTooShort,
    AudioTooShortWarning,
    MalformedWav,
    UnsupportedEncoding,
)

CANONICAL_RATE = 16_000

# Berouti-style defaults; the oversubtraction factor is alpha, the spectral
# floor is beta.
DEFAULT_OVERSUBTRACTION = 2.0
DEFAULT_FLOOR = 0.02
DEFAULT_NOISE_FRAMES = 10

_WINDOWS = ("hamming", "hann", "rect")


@dataclass(frozen=True)
class AudioBuffer:
    """Mono PCM samples at a known sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if samples.ndim != 1:
            raise ValueError("AudioBuffer is mono: expected a 1-D array")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FrameSequence:
    """Windowed analysis frames: (n_frames, frame_len)."""

    frames: np.ndarray
    frame_len: int
    hop: int
    sample_rate: int

    def __post_init__(self):
        if self.frame_len < self.hop:
            raise ValueError("frame_len must be >= hop")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def frame_rate(self) -> float:
        """Frames per second implied by the hop."""
        return self.sample_rate / self.hop


def expected_frame_count(n_samples: int, frame_len: int, hop: int) -> int:
    if n_samples < frame_len:
        return 0
    return (n_samples - frame_len) // hop + 1


def read_wav(path) -> AudioBuffer:
    """Read a RIFF/WAVE file (PCM16 or IEEE float, mono or stereo).

    Stereo is downmixed by channel averaging; samples are scaled to [-1, 1].
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWav(f"{path}: not a RIFF/WAVE file")

    fmt = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4:pos + 8])
        body = data[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise MalformedWav(f"{path}: fmt chunk too small")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif cid == b"data":
            if fmt is None:
                raise MalformedWav(f"{path}: data chunk before fmt chunk")
            if len(body) < size:
                raise MalformedWav(f"{path}: truncated data chunk")
            return _decode_pcm(body, fmt, path)
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    raise MalformedWav(f"{path}: missing data chunk")


def _decode_pcm(body: bytes, fmt, path) -> AudioBuffer:
    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if n_channels not in (1, 2):
        raise UnsupportedEncoding(f"{path}: {n_channels} channels")
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(body[:len(body) - len(body) % 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == 3 and bits == 32:
        raw = np.frombuffer(body[:len(body) - len(body) % 4], dtype="<f4")
        samples = raw.astype(np.float64)
    elif audio_format == 3 and bits == 64:
        raw = np.frombuffer(body[:len(body) - len(body) % 8], dtype="<f8")
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedEncoding(
            f"{path}: format tag {audio_format} with {bits} bits"
        )
    if n_channels == 2:
        samples = samples[:2 * (samples.size // 2)].reshape(-1, 2).mean(axis=1)
    samples = np.clip(samples, -1.0, 1.0)
    return AudioBuffer(samples, int(sample_rate))


def write_wav(path, audio: AudioBuffer) -> None:
    """Write 16-bit PCM. Round-trips read_wav output bit-exactly."""
    scaled = np.clip(np.round(audio.samples * 32768.0), -32768, 32767)
    pcm = scaled.astype("<i2").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(pcm), b"WAVE",
        b"fmt ", 16, 1, 1, audio.sample_rate,
        audio.sample_rate * 2, 2, 16,
        b"data", len(pcm),
    )
    with open(path, "wb") as fh:
        fh.write(header + pcm)


def resample(audio: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Band-limited (polyphase windowed-sinc) resampling."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == audio.sample_rate:
        return audio
    if len(audio) == 0:
        return AudioBuffer(np.zeros(0), target_rate)
    g = np.gcd(audio.sample_rate, target_rate)
    up, down = target_rate // g, audio.sample_rate // g
    out = resample_poly(audio.samples, up, down)
    return AudioBuffer(np.clip(out, -1.0, 1.0), target_rate)


def load_audio(path, target_rate: int = CANONICAL_RATE) -> AudioBuffer:
    """read_wav followed by resampling to the canonical rate."""
    return resample(read_wav(path), target_rate)


def frame_signal(
    audio: AudioBuffer,
    frame_ms: float = 20.0,
    hop_ms: float = 10.0,
    window: str = "hamming",
) -> FrameSequence:
    """Slice into overlapping windowed frames.

    If the signal is shorter than one frame the sequence is empty and an
    AudioTooShortWarning is issued (callers that need frames raise).
    """
    if not frame_ms >= hop_ms > 0:
        raise ValueError("require frame_ms >= hop_ms > 0")
    if window not in _WINDOWS:
        raise ValueError(f"window must be one of {_WINDOWS}")
    sr = audio.sample_rate
    frame_len = int(round(frame_ms * sr / 1000.0))
    hop = int(round(hop_ms * sr / 1000.0))
    n = expected_frame_count(len(audio), frame_len, hop)
    if n == 0:
        warnings.warn(
            f"audio of {len(audio)} samples is shorter than one "
            f"{frame_len}-sample frame",
            AudioTooShortWarning,
        )
        return FrameSequence(np.zeros((0, frame_len)), frame_len, hop, sr)
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n)[:, None]
    frames = audio.samples[idx] * _window(window, frame_len)[None, :]
    return FrameSequence(frames, frame_len, hop, sr)


def _window(name: str, length: int) -> np.ndarray:
    if name == "hamming":
        return np.hamming(length)
    if name == "hann":
        return np.hanning(length)
    return np.ones(length)


def raw_frames(audio: AudioBuffer, frames: FrameSequence) -> np.ndarray:
    """Unwindowed frame matrix on the same grid as ``frames``."""
    n = frames.n_frames
    idx = (np.arange(frames.frame_len)[None, :]
           + frames.hop * np.arange(n)[:, None])
    return audio.samples[idx]


# --- spectral subtraction -------------------------------------------------
#
# Analysis and synthesis both use a periodic sqrt-Hann window at 50%
# overlap, so w_a * w_s sums to exactly 1 over the interior and the
# overlap-add machinery is an identity when magnitudes are untouched.

def _sqrt_hann(n: int) -> np.ndarray:
    return np.sqrt(np.hanning(n + 1)[:n])


def _stft(x: np.ndarray, frame_len: int):
    hop = frame_len // 2
    pad = np.concatenate([np.zeros(hop), x, np.zeros(frame_len)])
    n = (pad.size - frame_len) // hop + 1
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n)[:, None]
    win = _sqrt_hann(frame_len)
    return np.fft.rfft(pad[idx] * win[None, :], axis=1)


def _istft(spec: np.ndarray, frame_len: int, out_len: int) -> np.ndarray:
    hop = frame_len // 2
    frames = np.fft.irfft(spec, n=frame_len, axis=1)
    win = _sqrt_hann(frame_len)
    frames *= win[None, :]
    total = (spec.shape[0] - 1) * hop + frame_len
    out = np.zeros(total)
    norm = np.zeros(total)
    sq = win * win
    for i in range(spec.shape[0]):
        out[i * hop:i * hop + frame_len] += frames[i]
        norm[i * hop:i * hop + frame_len] += sq
    out = out / np.maximum(norm, 1e-12)
    return out[hop:hop + out_len]


def spectral_subtract(
    audio: AudioBuffer,
    oversubtraction: float = DEFAULT_OVERSUBTRACTION,
    floor: float = DEFAULT_FLOOR,
    noise_frames: int = DEFAULT_NOISE_FRAMES,
    frame_ms: float = 20.0,
) -> AudioBuffer:
    """Magnitude spectral subtraction with overlap-add reconstruction.

    |Y| = max(|X| - alpha * |N|, beta * |X|) per frame and bin; the noise
    magnitude |N| is the mean spectrum of the ``noise_frames`` lowest-energy
    frames. Phase is preserved; output length equals input length.
    """
    if oversubtraction < 1:
        raise ValueError("oversubtraction must be >= 1")
    if not 0 < floor <= 1:
        raise ValueError("floor must be in (0, 1]")
    if noise_frames < 1:
        raise ValueError("noise_frames must be >= 1")
    if len(audio) == 0:
        return audio
    frame_len = int(round(frame_ms * audio.sample_rate / 1000.0))
    frame_len += frame_len & 1  # even length so hop = frame_len/2 is exact
    spec = _stft(audio.samples, frame_len)
    mag = np.abs(spec)
    energy = (mag * mag).sum(axis=1)
    quiet = np.argsort(energy, kind="stable")[:min(noise_frames, len(energy))]
    noise_mag = mag[quiet].mean(axis=0)
    sub = np.maximum(mag - oversubtraction * noise_mag, floor * mag)
    phase = np.where(mag > 0, spec / np.maximum(mag, 1e-300), 1.0)
    out = _istft(sub * phase, frame_len, len(audio))
    return AudioBuffer(np.clip(out, -1.0, 1.0), audio.sample_rate)


def require_frames(frames: FrameSequence) -> FrameSequence:
    """Raise AudioTooShort when an empty FrameSequence reaches a consumer."""
    if frames.n_frames == 0:
        raise AudioTooShort("no complete analysis frame fits in the audio")
    return frames
