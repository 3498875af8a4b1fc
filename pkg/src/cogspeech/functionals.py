"""Statistical functionals that collapse LLD trajectories to fixed vectors.

Two frozen functional sets are defined: ``large39`` for the 6552-dim
spectral/cepstral/energy/voicing vector and ``voiced19`` for the 114-dim
jitter/shimmer vector. The member lists and their order are the package's
canon; every feature index maps to exactly one (trajectory, functional)
pair and back.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .audio import (
    AudioBuffer,
    frame_signal,
    require_frames,
    spectral_subtract,
)
from .errors import AudioTooShort, EmptyTrajectory, NoVoicedFramesWarning
from .lld import (
    LldTrajectory,
    N_CEPSTRAL,
    N_ENERGY,
    N_SPECTRAL,
    N_VOICING,
    deltas,
    energy_llds,
    jitter_shimmer_llds,
    mfcc,
    pitch_track,
    spectral_llds,
    voicing_llds,
)

LARGE39 = (
    "mean", "absmean", "quadmean", "std", "variance", "skewness", "kurtosis",
    "min", "max", "range", "minpos", "maxpos",
    "percentile1", "percentile5", "percentile25", "percentile50",
    "percentile75", "percentile95", "percentile99",
    "iqr25_75", "iqr5_95",
    "linreg_slope", "linreg_offset", "linreg_errq", "linreg_erra",
    "quadreg_a", "quadreg_b", "quadreg_c", "quadreg_errq", "quadreg_erra",
    "uplevel25", "uplevel50", "uplevel75", "uplevel90",
    "risetime", "falltime", "zcr_contour", "peak_rate", "peak_meanamp",
)

VOICED19 = (
    "mean", "std", "skewness", "kurtosis", "min", "max", "range",
    "minpos", "maxpos",
    "percentile1", "percentile25", "percentile50", "percentile75",
    "percentile99",
    "iqr25_75", "linreg_slope", "linreg_offset", "linreg_errq",
    "zcr_contour",
)

assert len(LARGE39) == 39 and len(set(LARGE39)) == 39
assert len(VOICED19) == 19 and set(VOICED19) <= set(LARGE39)

N_F1_TRAJECTORIES = 3 * (N_CEPSTRAL + N_SPECTRAL + N_ENERGY + N_VOICING)
N_F2_TRAJECTORIES = 2 * 3
F1_DIM = N_F1_TRAJECTORIES * len(LARGE39)
F2_DIM = N_F2_TRAJECTORIES * len(VOICED19)
assert N_F1_TRAJECTORIES == 168 and F1_DIM == 6552
assert N_F2_TRAJECTORIES == 6 and F2_DIM == 114

F1_BLOCKS = {
    "cepstral": 3 * N_CEPSTRAL * len(LARGE39),
    "spectral": 3 * N_SPECTRAL * len(LARGE39),
    "energy": 3 * N_ENERGY * len(LARGE39),
    "voicing": 3 * N_VOICING * len(LARGE39),
}

SET_DIMS = {"f1": F1_DIM, "f2": F2_DIM, "f3": 7, "f4": 7}

# bump when any extraction recipe detail changes; feature caches key on it
RECIPE_VERSION = "1"


@dataclass(frozen=True)
class FunctionalSet:
    name: str
    functionals: tuple[str, ...]


LARGE39_SET = FunctionalSet("large39", LARGE39)
VOICED19_SET = FunctionalSet("voiced19", VOICED19)


@dataclass
class FeatureVector:
    set_id: str
    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.names),):
            raise ValueError("values/names length mismatch")
        if self.set_id in SET_DIMS and len(self.values) != SET_DIMS[self.set_id]:
            raise ValueError(
                f"{self.set_id} must have {SET_DIMS[self.set_id]} dims, "
                f"got {len(self.values)}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")


def _batch_functionals(values: np.ndarray, names: tuple[str, ...],
                       frame_rate: float) -> np.ndarray:
    """Evaluate functionals over each row of (n_traj, n_frames)."""
    m, n = values.shape
    t = np.arange(n, dtype=np.float64)
    cols: dict[str, np.ndarray] = {}

    mean = values.mean(axis=1)
    centered = values - mean[:, None]
    m2 = (centered ** 2).mean(axis=1)
    std = np.sqrt(m2)
    safe_m2 = np.where(m2 > 1e-30, m2, 1.0)
    vmin = values.min(axis=1)
    vmax = values.max(axis=1)

    cols["mean"] = mean
    cols["absmean"] = np.abs(values).mean(axis=1)
    cols["quadmean"] = np.sqrt((values ** 2).mean(axis=1))
    cols["std"] = std
    cols["variance"] = m2
    cols["skewness"] = np.where(
        m2 > 1e-30, (centered ** 3).mean(axis=1) / safe_m2 ** 1.5, 0.0
    )
    cols["kurtosis"] = np.where(
        m2 > 1e-30, (centered ** 4).mean(axis=1) / safe_m2 ** 2 - 3.0, 0.0
    )
    cols["min"] = vmin
    cols["max"] = vmax
    cols["range"] = vmax - vmin
    span = max(n - 1, 1)
    cols["minpos"] = np.argmin(values, axis=1) / span
    cols["maxpos"] = np.argmax(values, axis=1) / span

    pcts = np.percentile(values, [1, 5, 25, 50, 75, 95, 99], axis=1)
    for i, p in enumerate((1, 5, 25, 50, 75, 95, 99)):
        cols[f"percentile{p}"] = pcts[i]
    cols["iqr25_75"] = pcts[4] - pcts[2]
    cols["iqr5_95"] = pcts[5] - pcts[1]

    # linear and quadratic fits against the frame index, via pinv of the
    # Vandermonde bases (min-norm solution keeps short inputs well-defined)
    lin_basis = np.stack([t, np.ones(n)], axis=1)
    lin_coef = values @ np.linalg.pinv(lin_basis).T
    lin_fit = lin_coef @ lin_basis.T
    cols["linreg_slope"] = lin_coef[:, 0]
    cols["linreg_offset"] = lin_coef[:, 1]
    cols["linreg_errq"] = ((values - lin_fit) ** 2).mean(axis=1)
    cols["linreg_erra"] = np.abs(values - lin_fit).mean(axis=1)

    quad_basis = np.stack([t * t, t, np.ones(n)], axis=1)
    quad_coef = values @ np.linalg.pinv(quad_basis).T
    quad_fit = quad_coef @ quad_basis.T
    cols["quadreg_a"] = quad_coef[:, 0]
    cols["quadreg_b"] = quad_coef[:, 1]
    cols["quadreg_c"] = quad_coef[:, 2]
    cols["quadreg_errq"] = ((values - quad_fit) ** 2).mean(axis=1)
    cols["quadreg_erra"] = np.abs(values - quad_fit).mean(axis=1)

    rng = vmax - vmin
    for level in (25, 50, 75, 90):
        thr = vmin + (level / 100.0) * rng
        cols[f"uplevel{level}"] = (values > thr[:, None]).mean(axis=1)

    if n >= 2:
        diff = np.diff(values, axis=1)
        cols["risetime"] = (diff > 0).mean(axis=1)
        cols["falltime"] = (diff < 0).mean(axis=1)
    else:
        cols["risetime"] = np.zeros(m)
        cols["falltime"] = np.zeros(m)

    cols["zcr_contour"] = _contour_zcr(centered)

    peak_mask = np.zeros((m, n), dtype=bool)
    if n >= 3:
        peak_mask[:, 1:-1] = (values[:, 1:-1] > values[:, :-2]) & (
            values[:, 1:-1] > values[:, 2:]
        )
    n_peaks = peak_mask.sum(axis=1)
    duration = n / frame_rate if frame_rate > 0 else 1.0
    cols["peak_rate"] = n_peaks / duration
    peak_sum = np.where(peak_mask, values, 0.0).sum(axis=1)
    cols["peak_meanamp"] = np.where(n_peaks > 0, peak_sum / np.maximum(n_peaks, 1), 0.0)

    return np.stack([cols[name] for name in names], axis=1)


def _contour_zcr(centered: np.ndarray) -> np.ndarray:
    m, n = centered.shape
    if n < 2:
        return np.zeros(m)
    signs = np.sign(centered)
    for j in range(1, n):
        zero = signs[:, j] == 0
        signs[zero, j] = signs[zero, j - 1]
    crossings = (np.abs(np.diff(signs, axis=1)) > 1).sum(axis=1)
    return crossings / (n - 1)


def apply_functionals(t: LldTrajectory, fs: FunctionalSet,
                      voiced_only: bool = False) -> np.ndarray:
    """Evaluate one functional set over a trajectory.

    With voiced_only the trajectory is restricted to its voiced frames; an
    empty restriction yields zeros plus a warning.
    """
    if t.values.size == 0:
        raise EmptyTrajectory(f"trajectory {t.name} is empty")
    values = t.values
    if voiced_only:
        if t.voiced_mask is None:
            raise ValueError("voiced_only requires a voiced_mask")
        values = values[t.voiced_mask]
        if values.size == 0:
            warnings.warn(
                f"trajectory {t.name} has no voiced frames; functionals "
                "are zero",
                NoVoicedFramesWarning,
            )
            return np.zeros(len(fs.functionals))
    return _batch_functionals(values[None, :], fs.functionals,
                              t.frame_rate)[0]


def _f1_trajectories(audio: AudioBuffer) -> list[LldTrajectory]:
    clean = spectral_subtract(audio)
    frames = require_frames(frame_signal(clean))
    pt = pitch_track(clean, frames)
    base = (mfcc(frames) + spectral_llds(frames) + energy_llds(frames)
            + voicing_llds(pt))
    out: list[LldTrajectory] = []
    for traj in base:
        de = deltas(traj)
        dede = deltas(de)
        dede.name = traj.name + "_dede"
        out.extend([traj, de, dede])
    return out


def f1_vector(audio: AudioBuffer) -> FeatureVector:
    """The 6552-dim vector: 56 LLDs + deltas, 39 functionals each."""
    trajectories = _f1_trajectories(audio)
    assert len(trajectories) == N_F1_TRAJECTORIES
    mat = np.stack([traj.values for traj in trajectories])
    frame_rate = trajectories[0].frame_rate
    table = _batch_functionals(mat, LARGE39, frame_rate)
    names = tuple(
        f"{traj.name}_{func}" for traj in trajectories for func in LARGE39
    )
    return FeatureVector("f1", table.reshape(-1), names)


def f1_names() -> tuple[str, ...]:
    base = []
    for i in range(N_CEPSTRAL):
        base.append(f"mfcc{i}")
    base += [f"melband{i}" for i in range(26)]
    base += ["spec_centroid", "spec_flux", "spec_entropy",
             "spec_rolloff25", "spec_rolloff50", "spec_rolloff75",
             "spec_rolloff90", "spec_min_pos", "spec_max_pos"]
    base += ["log_energy", "rms", "zcr", "low_band_ratio", "high_band_ratio"]
    base += ["f0", "voicing_prob", "hnr"]
    names = []
    for b in base:
        for suffix in ("", "_de", "_dede"):
            for func in LARGE39:
                names.append(f"{b}{suffix}_{func}")
    return tuple(names)


def f2_vector(audio: AudioBuffer) -> FeatureVector:
    """The 114-dim jitter/shimmer vector over voiced frames only."""
    clean = spectral_subtract(audio)
    frames = require_frames(frame_signal(clean))
    pt = pitch_track(clean, frames)
    base = jitter_shimmer_llds(pt)
    trajectories: list[LldTrajectory] = []
    for traj in base:
        trajectories.extend([traj, deltas(traj)])
    assert len(trajectories) == N_F2_TRAJECTORIES

    names = tuple(
        f"{traj.name}_{func}" for traj in trajectories for func in VOICED19
    )
    mask = base[0].voiced_mask
    if mask is None or not mask.any():
        warnings.warn("no voiced frames; f2 vector is zero",
                      NoVoicedFramesWarning)
        return FeatureVector("f2", np.zeros(F2_DIM), names)
    mat = np.stack([traj.values[mask] for traj in trajectories])
    table = _batch_functionals(mat, VOICED19, trajectories[0].frame_rate)
    return FeatureVector("f2", table.reshape(-1), names)


def f2_names() -> tuple[str, ...]:
    names = []
    for b in ("jitter_local", "jitter_ddp", "shimmer_local"):
        for suffix in ("", "_de"):
            for func in VOICED19:
                names.append(f"{b}{suffix}_{func}")
    return tuple(names)
