"""Correlation-based feature selection with greedy stepwise forward search.

Features are discretized into 10 equal-frequency bins; correlations are
symmetrical uncertainty SU = 2*I(a;b) / (H(a)+H(b)) in base-2 logs. Subset
quality is Hall's merit k*rcf / sqrt(k + k(k-1)*rff). Feature-feature
correlations are filled lazily, one batch per greedy step, so only pairs
the search actually touches are ever computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLabels, EmptySubset, LengthMismatch

N_BINS = 10
MERIT_EPS = 1e-9


def discretize(column: np.ndarray, n_bins: int = N_BINS) -> np.ndarray:
    """Equal-frequency binning; constant columns collapse to one bin."""
    edges = np.unique(
        np.percentile(column, np.linspace(0, 100, n_bins + 1)[1:-1])
    )
    return np.searchsorted(edges, column, side="right").astype(np.int64)


def _entropy_from_counts(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def symmetrical_uncertainty(a, b) -> float:
    """SU in [0, 1]; 0 when either sequence has zero entropy."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch("sequences must be 1-D and the same length")
    if a.size == 0:
        raise LengthMismatch("sequences must be non-empty")
    ha = _entropy_from_counts(np.bincount(_codes(a)))
    hb = _entropy_from_counts(np.bincount(_codes(b)))
    if ha == 0.0 or hb == 0.0:
        return 0.0
    nb = _codes(b).max() + 1
    joint = _entropy_from_counts(np.bincount(_codes(a) * nb + _codes(b)))
    mi = ha + hb - joint
    return float(np.clip(2.0 * mi / (ha + hb), 0.0, 1.0))


def _codes(x: np.ndarray) -> np.ndarray:
    return x - x.min() if x.size else x


def _su_batch(bins: np.ndarray, entropies: np.ndarray, rows: np.ndarray,
              other: np.ndarray, h_other: float) -> np.ndarray:
    """SU(bins[r], other) for every r in rows, in one bincount."""
    if rows.size == 0:
        return np.zeros(0)
    nb_other = int(other.max()) + 1 if other.size else 1
    block = nb_other * N_BINS
    codes = (bins[rows] * nb_other + other[None, :]
             + block * np.arange(rows.size)[:, None])
    counts = np.bincount(codes.ravel(), minlength=block * rows.size)
    counts = counts.reshape(rows.size, block)
    n = bins.shape[1]
    p = counts / n
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    joint_h = -plogp.sum(axis=1)
    mi = entropies[rows] + h_other - joint_h
    denom = entropies[rows] + h_other
    out = np.zeros(rows.size)
    ok = (entropies[rows] > 0) & (h_other > 0)
    out[ok] = np.clip(2.0 * mi[ok] / denom[ok], 0.0, 1.0)
    return out


@dataclass
class CorrelationCache:
    """Feature-class SU plus a lazily-filled feature-feature SU store."""

    bins: np.ndarray                 # (d, n) discretized features
    class_codes: np.ndarray          # (n,) integer labels
    feat_class: np.ndarray = field(init=False)
    _feat_entropy: np.ndarray = field(init=False)
    _pairs: dict[tuple[int, int], float] = field(default_factory=dict)
    pair_evaluations: int = 0

    def __post_init__(self):
        d, _ = self.bins.shape
        self._feat_entropy = np.array([
            _entropy_from_counts(np.bincount(self.bins[i]))
            for i in range(d)
        ])
        h_cls = _entropy_from_counts(np.bincount(self.class_codes))
        self.feat_class = _su_batch(
            self.bins, self._feat_entropy, np.arange(d),
            self.class_codes, h_cls,
        )

    @classmethod
    def from_matrix(cls, X: np.ndarray, y: np.ndarray) -> "CorrelationCache":
        X = np.asarray(X, dtype=np.float64)
        bins = np.stack([discretize(X[:, j]) for j in range(X.shape[1])])
        _, class_codes = np.unique(np.asarray(y), return_inverse=True)
        return cls(bins=bins, class_codes=class_codes.astype(np.int64))

    def feat_feat(self, i: int, j: int) -> float:
        if i == j:
            return 1.0
        key = (min(i, j), max(i, j))
        if key not in self._pairs:
            self.fill_pairs(np.array([i]), j)
        return self._pairs[key]

    def fill_pairs(self, rows: np.ndarray, member: int) -> None:
        """Batch-compute SU(rows, member) for pairs not yet cached."""
        missing = np.array([
            r for r in rows
            if r != member and (min(r, member), max(r, member)) not in self._pairs
        ], dtype=np.int64)
        if missing.size == 0:
            return
        su = _su_batch(self.bins, self._feat_entropy, missing,
                       self.bins[member], float(self._feat_entropy[member]))
        for r, value in zip(missing, su):
            self._pairs[(min(int(r), member), max(int(r), member))] = float(value)
        self.pair_evaluations += int(missing.size)


@dataclass
class SelectionResult:
    indices: list[int]
    merit: float
    trace: list[tuple[int, float]]
    names: list[str] | None = None

    def to_dict(self) -> dict:
        return {
            "indices": list(self.indices),
            "merit": self.merit,
            "trace": [[i, m] for i, m in self.trace],
            "names": self.names,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionResult":
        return cls(
            indices=list(d["indices"]),
            merit=float(d["merit"]),
            trace=[(int(i), float(m)) for i, m in d["trace"]],
            names=d.get("names"),
        )


def merit(subset, cache: CorrelationCache) -> float:
    """Hall's merit: k*rcf / sqrt(k + k(k-1)*rff)."""
    subset = list(subset)
    k = len(subset)
    if k == 0:
        raise EmptySubset("merit of the empty subset is undefined")
    rcf = float(np.mean(cache.feat_class[subset]))
    if k == 1:
        return rcf
    total = 0.0
    for a in range(k):
        for b in range(a + 1, k):
            total += cache.feat_feat(subset[a], subset[b])
    rff = total / (k * (k - 1) / 2)
    denom = np.sqrt(k + k * (k - 1) * rff)
    return float(k * rcf / denom) if denom > 0 else 0.0


def greedy_stepwise(X: np.ndarray, y,
                    cache: CorrelationCache | None = None,
                    names: list[str] | None = None) -> SelectionResult:
    """Forward selection maximizing merit; ties break to the lowest index."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("X must be a non-empty 2-D matrix")
    if np.unique(y).size < 2:
        raise DegenerateLabels("need at least two classes for selection")
    if cache is None:
        cache = CorrelationCache.from_matrix(X, y)

    d = X.shape[1]
    selected: list[int] = []
    trace: list[tuple[int, float]] = []
    current = 0.0
    rcf_sum = 0.0
    rff_sum = 0.0
    # running per-candidate sum of SU against all current members
    cand_rff = np.zeros(d)
    remaining = np.ones(d, dtype=bool)

    while True:
        rows = np.flatnonzero(remaining)
        if rows.size == 0:
            break
        k = len(selected) + 1
        rcf = (rcf_sum + cache.feat_class[rows]) / k
        if k == 1:
            merits = rcf
        else:
            rff = (rff_sum + cand_rff[rows]) / (k * (k - 1) / 2)
            denom = np.sqrt(k + k * (k - 1) * rff)
            merits = np.where(denom > 0, k * rcf / denom, 0.0)
        best_pos = int(np.argmax(merits))  # argmax takes the lowest index
        best = int(rows[best_pos])
        best_merit = float(merits[best_pos])
        if best_merit <= current + MERIT_EPS:
            break
        selected.append(best)
        trace.append((best, best_merit))
        current = best_merit
        rcf_sum += float(cache.feat_class[best])
        rff_sum += float(cand_rff[best])
        remaining[best] = False
        rows = np.flatnonzero(remaining)
        cache.fill_pairs(rows, best)
        for r in rows:
            cand_rff[r] += cache.feat_feat(int(r), best)

    sel_names = (
        [names[i] for i in sorted(selected)] if names is not None else None
    )
    return SelectionResult(
        indices=sorted(selected), merit=current, trace=trace, names=sel_names
    )
