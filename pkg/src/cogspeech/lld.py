"""Low-level descriptor trajectories.

The 56-descriptor census feeding the large feature set: 13 cepstral,
35 spectral, 5 energy, 3 voicing; plus the 3 jitter/shimmer descriptors
for the voice-quality set, and regression deltas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct

from .audio import AudioBuffer, FrameSequence, raw_frames, require_frames

LOG_FLOOR = 1e-10
F0_MIN = 55.0
F0_MAX = 500.0
VOICING_THRESHOLD = 0.45
HNR_MIN_DB = -10.0
HNR_MAX_DB = 40.0

N_CEPSTRAL = 13
N_MELS = 26
N_SPECTRAL = 35
N_ENERGY = 5
N_VOICING = 3

MEL_LOW_HZ = 20.0
MEL_HIGH_HZ = 8000.0
LOW_BAND_HZ = (0.0, 650.0)
HIGH_BAND_HZ = (4000.0, 8000.0)
ROLLOFF_FRACTIONS = (0.25, 0.50, 0.75, 0.90)


@dataclass
class LldTrajectory:
    """One per-frame descriptor contour."""

    name: str
    values: np.ndarray
    voiced_mask: np.ndarray | None = None
    frame_rate: float = 100.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)


@dataclass
class PitchTrack:
    """Per-frame F0/voicing plus cycle-level period and peak measurements."""

    f0_hz: np.ndarray
    voicing_prob: np.ndarray
    periods_ms: np.ndarray          # all cycle durations, runs concatenated
    cycle_peaks: np.ndarray         # per-cycle amplitude maxima
    peak_pos: np.ndarray            # sample index of every located pulse peak
    peak_run: np.ndarray            # voiced-run id per pulse peak
    frame_len: int = 0
    hop: int = 0
    sample_rate: int = 16_000

    @property
    def voiced(self) -> np.ndarray:
        return self.f0_hz > 0


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def next_pow2(n: int) -> int:
    size = 1
    while size < n:
        size *= 2
    return size


def mel_filterbank(n_mels: int, nfft: int, sample_rate: int,
                   low_hz: float = MEL_LOW_HZ,
                   high_hz: float = MEL_HIGH_HZ) -> np.ndarray:
    """Triangular mel filter matrix (n_mels, nfft//2 + 1).

    Triangles are evaluated at the exact bin frequencies rather than
    snapped to bin indices.
    """
    high_hz = min(high_hz, sample_rate / 2.0)
    edges = mel_to_hz(np.linspace(hz_to_mel(low_hz), hz_to_mel(high_hz),
                                  n_mels + 2))
    bin_freqs = np.arange(nfft // 2 + 1) * sample_rate / nfft
    bank = np.zeros((n_mels, bin_freqs.size))
    for m in range(n_mels):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        rising = (bin_freqs - lo) / max(center - lo, 1e-12)
        falling = (hi - bin_freqs) / max(hi - center, 1e-12)
        bank[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def power_spectrum(frames: FrameSequence) -> tuple[np.ndarray, int]:
    """|FFT|^2 per frame, FFT size = next power of two >= frame_len."""
    nfft = next_pow2(frames.frame_len)
    spec = np.fft.rfft(frames.frames, n=nfft, axis=1)
    return (spec.real ** 2 + spec.imag ** 2), nfft


def mfcc(frames: FrameSequence, n_coeffs: int = N_CEPSTRAL,
         n_mels: int = N_MELS) -> list[LldTrajectory]:
    """Mel-frequency cepstra: power spectrum -> mel bank -> log -> DCT-II."""
    frames = require_frames(frames)
    power, nfft = power_spectrum(frames)
    bank = mel_filterbank(n_mels, nfft, frames.sample_rate)
    log_mel = np.log(np.maximum(power @ bank.T, LOG_FLOOR))
    ceps = dct(log_mel, type=2, norm="ortho", axis=1)[:, :n_coeffs]
    return [
        LldTrajectory(f"mfcc{i}", ceps[:, i], frame_rate=frames.frame_rate)
        for i in range(n_coeffs)
    ]


def spectral_llds(frames: FrameSequence) -> list[LldTrajectory]:
    """The 35-descriptor spectral family.

    26 log mel-band energies, centroid, flux, entropy, four roll-off
    points, and the positions of the spectral minimum and maximum.
    """
    frames = require_frames(frames)
    power, nfft = power_spectrum(frames)
    sr = frames.sample_rate
    fr = frames.frame_rate
    bin_freqs = np.arange(power.shape[1]) * sr / nfft

    bank = mel_filterbank(N_MELS, nfft, sr)
    log_mel = np.log(np.maximum(power @ bank.T, LOG_FLOOR))

    total = power.sum(axis=1)
    safe_total = np.maximum(total, LOG_FLOOR)
    centroid = (power @ bin_freqs) / safe_total
    centroid[total <= LOG_FLOOR] = 0.0

    mag = np.sqrt(power)
    flux = np.zeros(power.shape[0])
    if power.shape[0] > 1:
        flux[1:] = np.sqrt(((mag[1:] - mag[:-1]) ** 2).sum(axis=1))

    p = power / safe_total[:, None]
    entropy = -(np.where(p > 0, p * np.log2(np.maximum(p, 1e-300)), 0.0)
                ).sum(axis=1)
    entropy[total <= LOG_FLOOR] = 0.0

    cumulative = np.cumsum(power, axis=1)
    rolloffs = []
    for frac in ROLLOFF_FRACTIONS:
        idx = np.argmax(cumulative >= frac * safe_total[:, None], axis=1)
        roll = bin_freqs[idx]
        roll[total <= LOG_FLOOR] = 0.0
        rolloffs.append(roll)

    pos_min = bin_freqs[np.argmin(power, axis=1)]
    pos_max = bin_freqs[np.argmax(power, axis=1)]

    out = [
        LldTrajectory(f"melband{i}", log_mel[:, i], frame_rate=fr)
        for i in range(N_MELS)
    ]
    out.append(LldTrajectory("spec_centroid", centroid, frame_rate=fr))
    out.append(LldTrajectory("spec_flux", flux, frame_rate=fr))
    out.append(LldTrajectory("spec_entropy", entropy, frame_rate=fr))
    for frac, roll in zip(ROLLOFF_FRACTIONS, rolloffs):
        out.append(LldTrajectory(f"spec_rolloff{int(frac * 100)}", roll,
                                 frame_rate=fr))
    out.append(LldTrajectory("spec_min_pos", pos_min, frame_rate=fr))
    out.append(LldTrajectory("spec_max_pos", pos_max, frame_rate=fr))
    assert len(out) == N_SPECTRAL
    return out


def energy_llds(frames: FrameSequence) -> list[LldTrajectory]:
    """Log energy, RMS, zero-crossing rate, low/high band energy ratios."""
    frames = require_frames(frames)
    x = frames.frames
    sr = frames.sample_rate
    fr = frames.frame_rate
    energy = (x * x).sum(axis=1)
    log_energy = np.log(np.maximum(energy, LOG_FLOOR))
    rms = np.sqrt(energy / frames.frame_len)

    signs = np.sign(x)
    # zeros inherit the previous sign so a zero sample is not two crossings
    for j in range(1, signs.shape[1]):
        zero = signs[:, j] == 0
        signs[zero, j] = signs[zero, j - 1]
    crossings = (np.abs(np.diff(signs, axis=1)) > 1).sum(axis=1)
    zcr = crossings * sr / frames.frame_len  # crossings per second

    power, nfft = power_spectrum(frames)
    bin_freqs = np.arange(power.shape[1]) * sr / nfft
    total = np.maximum(power.sum(axis=1), LOG_FLOOR)
    low = (bin_freqs >= LOW_BAND_HZ[0]) & (bin_freqs <= LOW_BAND_HZ[1])
    high = (bin_freqs >= HIGH_BAND_HZ[0]) & (
        bin_freqs <= min(HIGH_BAND_HZ[1], sr / 2)
    )
    low_ratio = power[:, low].sum(axis=1) / total
    high_ratio = power[:, high].sum(axis=1) / total

    names = ("log_energy", "rms", "zcr", "low_band_ratio", "high_band_ratio")
    series = (log_energy, rms, zcr, low_ratio, high_ratio)
    return [LldTrajectory(n, v, frame_rate=fr) for n, v in zip(names, series)]


# --- pitch, voicing, and voice-quality substrate --------------------------

def pitch_track(audio: AudioBuffer, frames: FrameSequence) -> PitchTrack:
    """Autocorrelation F0 with cycle-level pulse marking in voiced runs."""
    frames = require_frames(frames)
    sr = frames.sample_rate
    x = raw_frames(audio, frames)
    x = x - x.mean(axis=1, keepdims=True)

    lag_min = max(2, int(np.floor(sr / F0_MAX)))
    lag_max = min(frames.frame_len - 1, int(np.ceil(sr / F0_MIN)))
    nfft = next_pow2(2 * frames.frame_len)
    spec = np.fft.rfft(x, n=nfft, axis=1)
    acorr = np.fft.irfft(spec.real ** 2 + spec.imag ** 2, axis=1)
    r0 = acorr[:, 0]
    silent = r0 < 1e-12
    norm = acorr / np.maximum(r0, 1e-12)[:, None]

    window = norm[:, lag_min:lag_max + 1]
    best = np.argmax(window, axis=1) + lag_min
    # parabolic interpolation around the peak for sub-sample lag accuracy
    li = np.clip(best, lag_min + 1, lag_max - 1)
    y0 = norm[np.arange(len(best)), li - 1]
    y1 = norm[np.arange(len(best)), li]
    y2 = norm[np.arange(len(best)), li + 1]
    denom = y0 - 2 * y1 + y2
    shift = np.where(np.abs(denom) > 1e-12, 0.5 * (y0 - y2) / denom, 0.0)
    shift = np.clip(shift, -0.5, 0.5)
    lag = np.where(best == li, best + shift, best.astype(np.float64))

    voicing_prob = np.clip(norm[np.arange(len(best)), best], 0.0, 1.0)
    voicing_prob[silent] = 0.0
    voiced = voicing_prob >= VOICING_THRESHOLD
    f0 = np.where(voiced, sr / lag, 0.0)
    f0 = np.where(voiced, np.clip(f0, F0_MIN, F0_MAX), 0.0)

    periods, peaks_amp, peak_pos, peak_run = _mark_cycles(
        audio, f0, voiced, frames
    )
    return PitchTrack(
        f0_hz=f0,
        voicing_prob=voicing_prob,
        periods_ms=periods,
        cycle_peaks=peaks_amp,
        peak_pos=peak_pos,
        peak_run=peak_run,
        frame_len=frames.frame_len,
        hop=frames.hop,
        sample_rate=sr,
    )


def _mark_cycles(audio: AudioBuffer, f0: np.ndarray, voiced: np.ndarray,
                 frames: FrameSequence):
    """Locate one pulse peak per pitch period inside each voiced run."""
    sr = frames.sample_rate
    hop, flen = frames.hop, frames.frame_len
    env = np.abs(audio.samples)
    periods: list[float] = []
    amps: list[float] = []
    positions: list[int] = []
    runs: list[int] = []

    run_id = -1
    i = 0
    n = len(voiced)
    while i < n:
        if not voiced[i]:
            i += 1
            continue
        j = i
        while j < n and voiced[j]:
            j += 1
        run_id += 1
        start = i * hop
        stop = min((j - 1) * hop + flen, len(audio))
        f0_med = float(np.median(f0[i:j][f0[i:j] > 0]))
        period = sr / f0_med
        seg = env[start:stop]
        if seg.size >= int(1.5 * period):
            pos = int(np.argmax(seg[:int(1.5 * period)]))
            peaks = [pos]
            while True:
                lo = peaks[-1] + int(0.5 * period)
                hi = peaks[-1] + int(1.5 * period)
                if lo >= seg.size:
                    break
                hi = min(hi, seg.size)
                peaks.append(lo + int(np.argmax(seg[lo:hi])))
            for a, b in zip(peaks[:-1], peaks[1:]):
                periods.append((b - a) * 1000.0 / sr)
            for p in peaks:
                amps.append(float(seg[p]))
                positions.append(start + p)
                runs.append(run_id)
        i = j

    return (np.asarray(periods), np.asarray(amps),
            np.asarray(positions, dtype=np.int64),
            np.asarray(runs, dtype=np.int64))


def voicing_llds(pt: PitchTrack) -> list[LldTrajectory]:
    """F0, voicing probability, and autocorrelation-based HNR."""
    r = np.clip(pt.voicing_prob, 0.0, 1.0 - 1e-12)
    hnr = 10.0 * np.log10(np.maximum(r, 1e-12) / (1.0 - r))
    hnr = np.clip(hnr, HNR_MIN_DB, HNR_MAX_DB)
    hnr = np.where(pt.voiced, hnr, HNR_MIN_DB)
    fr = pt.sample_rate / pt.hop if pt.hop else 100.0
    return [
        LldTrajectory("f0", pt.f0_hz, frame_rate=fr),
        LldTrajectory("voicing_prob", pt.voicing_prob, frame_rate=fr),
        LldTrajectory("hnr", hnr, frame_rate=fr),
    ]


def jitter_shimmer_llds(pt: PitchTrack) -> list[LldTrajectory]:
    """Per-frame jitter (local, ddp) and shimmer from overlapping cycles.

    Unvoiced frames carry 0 with voiced_mask False; voiced frames without
    enough overlapping cycles also carry 0 but stay masked True.
    """
    n = len(pt.f0_hz)
    voiced = pt.voiced
    jit_local = np.zeros(n)
    jit_ddp = np.zeros(n)
    shim = np.zeros(n)

    pos = pt.peak_pos
    if pos.size:
        run = pt.peak_run
        amps = pt.cycle_peaks
        # cycle k spans pos[k] .. pos[k+1] within one run
        same_run = run[:-1] == run[1:]
        cyc_start = pos[:-1][same_run]
        cyc_end = pos[1:][same_run]
        cyc_T = (cyc_end - cyc_start) * 1000.0 / pt.sample_rate
        cyc_run = run[:-1][same_run]
        amp_a = amps[:-1][same_run]

        for t in range(n):
            if not voiced[t]:
                continue
            w0 = t * pt.hop
            w1 = w0 + pt.frame_len
            inside = (cyc_end > w0) & (cyc_start < w1)
            if not np.any(inside):
                continue
            T = cyc_T[inside]
            rids = cyc_run[inside]
            A = amp_a[inside]
            mean_t = T.mean()
            adj = rids[:-1] == rids[1:]
            if T.size >= 2 and np.any(adj) and mean_t > 0:
                d1 = np.abs(np.diff(T))[adj]
                jit_local[t] = d1.mean() / mean_t
                if T.size >= 3:
                    adj2 = adj[:-1] & adj[1:]
                    if np.any(adj2):
                        d2 = np.abs(np.diff(T, n=2))[adj2]
                        jit_ddp[t] = d2.mean() / mean_t
            mean_a = A.mean()
            if A.size >= 2 and np.any(adj) and mean_a > 0:
                shim[t] = np.abs(np.diff(A))[adj].mean() / mean_a

    fr = pt.sample_rate / pt.hop if pt.hop else 100.0
    mask = voiced.copy()
    return [
        LldTrajectory("jitter_local", jit_local, voiced_mask=mask, frame_rate=fr),
        LldTrajectory("jitter_ddp", jit_ddp, voiced_mask=mask, frame_rate=fr),
        LldTrajectory("shimmer_local", shim, voiced_mask=mask, frame_rate=fr),
    ]


def deltas(t: LldTrajectory, half_window: int = 2) -> LldTrajectory:
    """Regression delta with edge replication."""
    if half_window < 1:
        raise ValueError("half_window must be >= 1")
    x = t.values
    w = half_window
    if x.size == 0:
        vals = x.copy()
    else:
        padded = np.concatenate([np.full(w, x[0]), x, np.full(w, x[-1])])
        num = np.zeros_like(x)
        for k in range(1, w + 1):
            num += k * (padded[w + k:w + k + x.size]
                        - padded[w - k:w - k + x.size])
        vals = num / (2.0 * sum(k * k for k in range(1, w + 1)))
    return LldTrajectory(
        t.name + "_de", vals,
        voiced_mask=None if t.voiced_mask is None else t.voiced_mask.copy(),
        frame_rate=t.frame_rate,
    )
