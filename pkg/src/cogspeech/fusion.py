"""Early (feature-level) and late (score-level) fusion.

Early fusion concatenates feature vectors, optionally composed with CFS
selection before or after the concatenation. Late fusion combines member
posteriors either by unweighted summation (argmax of the summed scores)
or through a second-stage decision classifier trained on stacked
posteriors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .cfs import SelectionResult, greedy_stepwise
from .classifiers import Dataset, Model, predict_proba
from .errors import (
    ClassOrderMismatch,
    DimensionMismatch,
    DuplicateMember,
    EmptySelectionWarning,
    MissingPosterior,
)
from .functionals import FeatureVector

EARLY_MODES = ("concat", "concat_then_select", "select_then_concat")
LATE_MODES = ("late_sum", "late_decision")
FUSION_MODES = EARLY_MODES + LATE_MODES


@dataclass(frozen=True)
class FusionPlan:
    mode: str
    members: tuple[str, ...]
    decision_kind: str | None = None

    def __post_init__(self):
        if self.mode not in FUSION_MODES:
            raise ValueError(f"unknown fusion mode {self.mode!r}")
        if not self.members:
            raise ValueError("fusion plan needs at least one member")
        if (self.decision_kind is not None) != (self.mode == "late_decision"):
            raise ValueError(
                "decision_kind is required exactly when mode=late_decision"
            )

    @property
    def is_late(self) -> bool:
        return self.mode in LATE_MODES


@dataclass
class PosteriorBundle:
    """One SimplexVector per member feature set, shared class order."""

    per_member: list[np.ndarray]
    class_order: list[str]

    def __post_init__(self):
        if not self.per_member:
            raise ValueError("bundle needs at least one member")
        width = len(self.class_order)
        for probs in self.per_member:
            if len(probs) != width:
                raise ClassOrderMismatch(
                    "member posterior width differs from class order"
                )

    def stacked(self) -> np.ndarray:
        return np.concatenate(self.per_member)


def early_concat(vectors: list[FeatureVector]) -> FeatureVector:
    """Concatenate member vectors; names are prefixed with the set id."""
    seen = set()
    for v in vectors:
        if v.set_id in seen:
            raise DuplicateMember(f"feature set {v.set_id} appears twice")
        seen.add(v.set_id)
    values = np.concatenate([v.values for v in vectors])
    names = tuple(
        f"{v.set_id}.{name}" for v in vectors for name in v.names
    )
    return FeatureVector("fused", values, names)


def concat_matrices(
    matrices: list[np.ndarray], name_lists: list[list[str]],
    set_ids: list[str]
) -> tuple[np.ndarray, list[str]]:
    """Column-wise concatenation of per-set matrices with prefixed names."""
    if len(set(set_ids)) != len(set_ids):
        raise DuplicateMember("duplicate feature-set id in fusion members")
    X = np.hstack(matrices)
    names = [
        f"{sid}.{n}" for sid, nl in zip(set_ids, name_lists) for n in nl
    ]
    return X, names


def concat_then_select(
    matrices: list[np.ndarray], name_lists: list[list[str]],
    set_ids: list[str], labels,
) -> tuple[SelectionResult, np.ndarray, list[str]]:
    """CFS over the concatenated matrix; returns the reduced matrix."""
    X, names = concat_matrices(matrices, name_lists, set_ids)
    result = greedy_stepwise(X, labels, names=names)
    return result, X[:, result.indices], [names[i] for i in result.indices]


def select_then_concat(
    matrices: list[np.ndarray], name_lists: list[list[str]],
    set_ids: list[str], labels,
) -> tuple[dict[str, SelectionResult], np.ndarray, list[str]]:
    """CFS per member set, then concatenation of the survivors."""
    selections: dict[str, SelectionResult] = {}
    kept_mats, kept_names = [], []
    for X, names, sid in zip(matrices, name_lists, set_ids):
        result = greedy_stepwise(X, labels, names=list(names))
        selections[sid] = result
        if not result.indices:
            warnings.warn(
                f"selection kept no features from {sid}; it contributes "
                "zero columns",
                EmptySelectionWarning,
            )
            continue
        kept_mats.append(X[:, result.indices])
        kept_names.extend(f"{sid}.{names[i]}" for i in result.indices)
    if kept_mats:
        reduced = np.hstack(kept_mats)
    else:
        reduced = np.zeros((matrices[0].shape[0], 0))
    return selections, reduced, kept_names


def late_sum(bundle: PosteriorBundle) -> int:
    """Eq.-style sum rule: argmax over summed member posteriors."""
    total = np.sum(bundle.per_member, axis=0)
    return int(np.argmax(total))  # first max wins ties


def build_decision_dataset(
    stacked_rows: list[np.ndarray | None], labels, class_order,
    member_ids,
) -> Dataset:
    """Assemble the stacked-posterior training table for Eq. 2."""
    for i, row in enumerate(stacked_rows):
        if row is None:
            raise MissingPosterior(f"utterance {i} lacks a stacked posterior")
    X = np.vstack(stacked_rows)
    names = [
        f"{sid}.p({cls})" for sid in member_ids for cls in class_order
    ]
    return Dataset.from_labels(X, labels, class_order, names)


def late_decision(bundle: PosteriorBundle, decision_model: Model) -> int:
    stacked = bundle.stacked()
    if len(stacked) != decision_model.n_features:
        raise DimensionMismatch(
            f"decision model expects {decision_model.n_features} scores, "
            f"got {len(stacked)}"
        )
    return int(np.argmax(predict_proba(decision_model, stacked)))
