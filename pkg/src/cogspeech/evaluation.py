"""Stratified cross-validation, class balancing, metrics, and the driver.

``run_experiment`` reproduces the evaluation protocol end to end: per-fold
training with optional spread-subsampling of the training split, CFS
selection scoped globally or per fold, the five classifier kinds, early-
and late-fusion plans, and out-of-fold stacking for the decision
classifier. An optional :class:`AccessAudit` records every utterance-id
access per phase so leakage is checkable, not assumed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .cfs import greedy_stepwise
from .classifiers import Dataset, Model, predict_proba, train
from .config import ExperimentConfig
from .dataio import FeatureCorpus
from .errors import (
    ConfigError,
    TooFewSamples,
    UndefinedMetricWarning,
)
from .fusion import (
    PosteriorBundle,
    build_decision_dataset,
    concat_matrices,
    concat_then_select,
    late_decision,
    late_sum,
    select_then_concat,
)

# fixed offsets keep every RNG purpose on its own stream for one base seed
_SEED_FOLDS = 1
_SEED_BALANCE = 2
_SEED_TRAIN = 3
_SEED_INNER = 4


def _derived_seed(base: int, purpose: int, fold: int = 0) -> int:
    return (base * 1_000_003 + purpose * 10_007 + fold) % (2 ** 31 - 1)


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def stratified_kfold(labels, k: int, seed: int,
                     class_order=None) -> FoldPlan:
    """Seeded shuffle within each class, then round-robin assignment."""
    labels = list(labels)
    if class_order is None:
        class_order = list(dict.fromkeys(labels))
    counts = {c: labels.count(c) for c in class_order}
    if any(n == 0 for n in counts.values()):
        raise TooFewSamples("every class needs at least one sample")
    min_count = min(counts.values())
    if min_count < k:
        warnings.warn(
            f"smallest class has {min_count} members; k reduced from {k}",
            UserWarning,
        )
        k = min_count
    rng = np.random.default_rng(seed)
    assignments = np.empty(len(labels), dtype=np.int64)
    for c in class_order:
        idx = np.array([i for i, l in enumerate(labels) if l == c])
        rng.shuffle(idx)
        for pos, i in enumerate(idx):
            assignments[i] = pos % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def spread_subsample(labels, seed: int, class_order=None) -> np.ndarray:
    """Indices of a uniform-spread subsample (minority-class count each)."""
    labels = list(labels)
    if class_order is None:
        class_order = list(dict.fromkeys(labels))
    groups = {c: np.array([i for i, l in enumerate(labels) if l == c])
              for c in class_order}
    if any(g.size == 0 for g in groups.values()):
        raise TooFewSamples("every class needs at least one instance")
    m = min(g.size for g in groups.values())
    rng = np.random.default_rng(seed)
    picked = [rng.choice(g, size=m, replace=False) for g in groups.values()]
    out = np.concatenate(picked)
    rng.shuffle(out)
    return out


@dataclass
class ExperimentReport:
    config_hash: str
    class_order: list[str]
    confusion: np.ndarray
    per_class: dict[str, dict[str, float]]
    overall: dict[str, dict[str, float]]
    warnings: list[str] = field(default_factory=list)
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "class_order": list(self.class_order),
            "confusion": [[int(v) for v in row] for row in self.confusion],
            "per_class": self.per_class,
            "overall": self.overall,
            "warnings": sorted(self.warnings),
        }

    def human_table(self) -> str:
        lines = []
        header = f"{'Class':<10}{'Pr':>8}{'Re':>8}{'F-Score':>9}"
        lines.append(header)
        lines.append("-" * len(header))
        for cls in self.class_order:
            m = self.per_class[cls]
            lines.append(
                f"{cls:<10}{100 * m['precision']:>8.1f}"
                f"{100 * m['recall']:>8.1f}{100 * m['f_score']:>9.1f}"
            )
        lines.append("-" * len(header))
        w = self.overall["weighted"]
        lines.append(
            f"{'Overall':<10}{100 * w['precision']:>8.1f}"
            f"{100 * w['recall']:>8.1f}{100 * w['f_score']:>9.1f}"
        )
        return "\n".join(lines) + "\n"


def metrics(confusion: np.ndarray, class_order) -> ExperimentReport:
    """Per-class and overall precision/recall/F from a confusion matrix.

    Rows are true classes, columns predictions. Undefined ratios are 0 by
    convention, with a warning.
    """
    confusion = np.asarray(confusion, dtype=np.int64)
    n = len(class_order)
    if confusion.shape != (n, n):
        raise ValueError("confusion matrix shape must match class count")
    notes = []
    per_class = {}
    support = confusion.sum(axis=1)
    predicted = confusion.sum(axis=0)
    for i, cls in enumerate(class_order):
        tp = confusion[i, i]
        if predicted[i] == 0:
            warnings.warn(f"no predictions for class {cls}; precision 0",
                          UndefinedMetricWarning)
            notes.append(f"undefined precision for {cls} set to 0")
        precision = tp / predicted[i] if predicted[i] else 0.0
        recall = tp / support[i] if support[i] else 0.0
        f = (2 * precision * recall / (precision + recall)
             if precision + recall else 0.0)
        per_class[cls] = {
            "precision": float(precision),
            "recall": float(recall),
            "f_score": float(f),
            "support": int(support[i]),
        }
    total = max(int(support.sum()), 1)
    weighted = {
        key: float(sum(per_class[c][key] * per_class[c]["support"]
                       for c in class_order) / total)
        for key in ("precision", "recall", "f_score")
    }
    macro = {
        key: float(np.mean([per_class[c][key] for c in class_order]))
        for key in ("precision", "recall", "f_score")
    }
    return ExperimentReport(
        config_hash="",
        class_order=list(class_order),
        confusion=confusion,
        per_class=per_class,
        overall={"weighted": weighted, "macro": macro},
        warnings=notes,
    )


class AccessAudit:
    """Records which utterance ids each phase touched, per fold."""

    def __init__(self):
        self.records: list[tuple[str, int, tuple[str, ...]]] = []

    def record(self, phase: str, fold: int, ids) -> None:
        self.records.append((phase, fold, tuple(ids)))

    def ids_for(self, phase_prefix: str, fold: int | None = None) -> set[str]:
        out: set[str] = set()
        for phase, f, ids in self.records:
            if phase.startswith(phase_prefix) and (fold is None or f == fold):
                out.update(ids)
        return out


def _member_matrices(corpus: FeatureCorpus, members):
    mats = [corpus.matrix(m) for m in members]
    names = [corpus.names(m) for m in members]
    return mats, names


def _reduce_early(config: ExperimentConfig, corpus: FeatureCorpus,
                  rows: np.ndarray, labels_rows, report_warnings,
                  precomputed=None):
    """Design matrix for early plans on the given training rows.

    Returns (Xtr, column picker) where the picker maps any full-corpus
    row set to the same columns.
    """
    members = list(config.fusion.members)
    mats, names = _member_matrices(corpus, members)
    tr_mats = [m[rows] for m in mats]
    mode = config.fusion.mode

    if mode == "concat" or config.selection_scope == "none":
        X, colnames = concat_matrices(tr_mats, names, members)

        def pick(all_rows):
            full, _ = concat_matrices([m[all_rows] for m in mats], names,
                                      members)
            return full
        return X, colnames, pick

    if precomputed is not None:
        # global scope: selection already done on the full corpus
        return precomputed(rows)

    if mode == "concat_then_select":
        sel, X, colnames = concat_then_select(tr_mats, names, members,
                                              labels_rows)

        def pick(all_rows):
            full, _ = concat_matrices([m[all_rows] for m in mats], names,
                                      members)
            return full[:, sel.indices]
        return X, colnames, pick

    if mode == "select_then_concat":
        sels, X, colnames = select_then_concat(tr_mats, names, members,
                                               labels_rows)
        if X.shape[1] == 0:
            report_warnings.append("selection kept no columns at all")

        def pick(all_rows):
            kept = []
            for m, sid in zip(mats, members):
                idx = sels[sid].indices
                if idx:
                    kept.append(m[all_rows][:, idx])
            if kept:
                return np.hstack(kept)
            return np.zeros((len(all_rows), 0))
        return X, colnames, pick

    raise ConfigError(f"fusion.mode: {mode} is not an early mode")


def _member_selection(config, corpus, rows, labels_rows):
    """Per-member CFS column indices for late fusion (or identity)."""
    members = list(config.fusion.members)
    selection: dict[str, list[int]] = {}
    for m in members:
        X = corpus.matrix(m)
        if config.selection_scope == "none":
            selection[m] = list(range(X.shape[1]))
        else:
            res = greedy_stepwise(X[rows], labels_rows)
            # an empty selection would leave the member modelless; keep
            # the single best-correlated column instead
            selection[m] = res.indices or [0]
    return selection


def run_experiment(config: ExperimentConfig, corpus: FeatureCorpus,
                   audit: AccessAudit | None = None) -> ExperimentReport:
    """Cross-validated evaluation of one experiment configuration."""
    config.validate(check_paths=False)
    for m in config.fusion.members:
        if m not in corpus.sets:
            raise ConfigError(f"fusion.members: no features loaded for {m}")
    report_warnings: list[str] = []
    class_order = list(corpus.class_order)
    seed = config.seed

    working = corpus
    if config.balance_scope == "whole_dataset":
        keep = spread_subsample(corpus.labels,
                                _derived_seed(seed, _SEED_BALANCE),
                                class_order)
        keep = np.sort(keep)
        working = corpus.subset(keep)
        report_warnings.append(
            "whole-dataset balancing altered the evaluation distribution"
        )
        if audit:
            audit.record("balance_whole", -1,
                         [working.ids[i] for i in range(len(working.ids))])

    labels = list(working.labels)
    ids = list(working.ids)
    n = len(labels)

    global_reduce = None
    if (config.selection_scope == "global"
            and config.fusion.mode in ("concat_then_select",
                                       "select_then_concat")):
        all_rows = np.arange(n)
        _, _, pick = _reduce_early(config, working, all_rows, labels,
                                   report_warnings)
        if audit:
            audit.record("selection_global", -1, ids)

        def global_reduce(rows):
            X = pick(rows)
            return X, None, pick

    global_member_sel = None
    if (config.selection_scope == "global" and config.fusion.is_late):
        global_member_sel = _member_selection(
            config, working, np.arange(n), labels
        )
        if audit:
            audit.record("selection_global", -1, ids)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        plan = stratified_kfold(labels, config.k_folds,
                                _derived_seed(seed, _SEED_FOLDS),
                                class_order)
    if plan.k < config.k_folds:
        report_warnings.append(
            f"k reduced to {plan.k} (smallest class too small)"
        )

    confusion = np.zeros((len(class_order), len(class_order)), dtype=np.int64)
    cls_index = {c: i for i, c in enumerate(class_order)}

    for fold in range(plan.k):
        test_rows = plan.test_indices(fold)
        train_rows = plan.train_indices(fold)
        if audit:
            audit.record("test", fold, [ids[i] for i in test_rows])

        if config.balance_scope == "train_only":
            sub = spread_subsample(
                [labels[i] for i in train_rows],
                _derived_seed(seed, _SEED_BALANCE, fold),
                class_order,
            )
            train_rows = train_rows[sub]
        if audit:
            audit.record("balance", fold, [ids[i] for i in train_rows])
        train_labels = [labels[i] for i in train_rows]

        if config.fusion.is_late:
            preds = _run_late_fold(config, working, train_rows, test_rows,
                                   train_labels, class_order, seed, fold,
                                   audit, ids, global_member_sel)
        else:
            preds = _run_early_fold(config, working, train_rows, test_rows,
                                    train_labels, class_order, seed, fold,
                                    audit, ids, global_reduce,
                                    report_warnings)

        for row, pred in zip(test_rows, preds):
            confusion[cls_index[labels[row]], pred] += 1

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = metrics(confusion, class_order)
    report_warnings.extend(str(w.message) for w in caught)
    report.config_hash = config.config_hash()
    report.seed = seed
    report.warnings = sorted(set(report.warnings + report_warnings))
    return report


def _run_early_fold(config, corpus, train_rows, test_rows, train_labels,
                    class_order, seed, fold, audit, ids, global_reduce,
                    report_warnings):
    Xtr, _, pick = _reduce_early(
        config, corpus, train_rows, train_labels, report_warnings,
        precomputed=global_reduce,
    )
    if audit and config.selection_scope == "per_fold" \
            and config.fusion.mode != "concat":
        audit.record("selection", fold, [ids[i] for i in train_rows])
    if Xtr.shape[1] == 0:
        # nothing selected anywhere: predict the majority training class
        counts = np.bincount(
            [class_order.index(l) for l in train_labels],
            minlength=len(class_order),
        )
        majority = int(np.argmax(counts))
        return [majority] * len(test_rows)
    data = Dataset.from_labels(Xtr, train_labels, class_order)
    model = train(config.classifier, data,
                  _derived_seed(seed, _SEED_TRAIN, fold))
    if audit:
        audit.record("train", fold, [ids[i] for i in train_rows])
    Xte = pick(test_rows)
    probs = predict_proba(model, Xte)
    return list(np.argmax(probs, axis=1))


def _run_late_fold(config, corpus, train_rows, test_rows, train_labels,
                   class_order, seed, fold, audit, ids, global_member_sel):
    members = list(config.fusion.members)
    if global_member_sel is not None:
        member_cols = global_member_sel
    else:
        member_cols = _member_selection(config, corpus, train_rows,
                                        train_labels)
        if audit and config.selection_scope == "per_fold":
            audit.record("selection", fold, [ids[i] for i in train_rows])

    def member_X(m, rows):
        return corpus.matrix(m)[rows][:, member_cols[m]]

    # member models on the full (possibly balanced) training split
    member_models: dict[str, Model] = {}
    for j, m in enumerate(members):
        data = Dataset.from_labels(member_X(m, train_rows), train_labels,
                                   class_order)
        member_models[m] = train(
            config.classifier, data,
            _derived_seed(seed, _SEED_TRAIN, fold * 31 + j),
        )
    if audit:
        audit.record("train", fold, [ids[i] for i in train_rows])

    def bundle_for(rows):
        per_member = [predict_proba(member_models[m], member_X(m, rows))
                      for m in members]
        return per_member

    if config.fusion.mode == "late_sum":
        per_member = bundle_for(test_rows)
        out = []
        for i in range(len(test_rows)):
            bundle = PosteriorBundle(
                [pm[i] for pm in per_member], class_order
            )
            out.append(late_sum(bundle))
        return out

    # late_decision: build the stacked training table
    if config.stacking == "resubstitution":
        per_member_tr = bundle_for(train_rows)
        stacked_rows = [
            np.concatenate([pm[i] for pm in per_member_tr])
            for i in range(len(train_rows))
        ]
        if audit:
            audit.record(f"stack_producer_train[{fold}]", fold,
                         [ids[i] for i in train_rows])
            audit.record(f"stack_rows[{fold}]", fold,
                         [ids[i] for i in train_rows])
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            inner = stratified_kfold(
                train_labels, config.inner_folds,
                _derived_seed(seed, _SEED_INNER, fold), class_order,
            )
        stacked_rows: list[np.ndarray | None] = [None] * len(train_rows)
        for ifold in range(inner.k):
            it = inner.test_indices(ifold)
            itr = inner.train_indices(ifold)
            inner_train_rows = train_rows[itr]
            inner_test_rows = train_rows[it]
            inner_labels = [train_labels[i] for i in itr]
            inner_models = {}
            for j, m in enumerate(members):
                data = Dataset.from_labels(
                    member_X(m, inner_train_rows), inner_labels, class_order
                )
                inner_models[m] = train(
                    config.classifier, data,
                    _derived_seed(seed, _SEED_INNER,
                                  (fold * 101 + ifold) * 31 + j + 1),
                )
            per_member_it = [
                predict_proba(inner_models[m], member_X(m, inner_test_rows))
                for m in members
            ]
            for local, global_pos in enumerate(it):
                stacked_rows[global_pos] = np.concatenate(
                    [pm[local] for pm in per_member_it]
                )
            if audit:
                audit.record(f"stack_producer_train[{fold}.{ifold}]", fold,
                             [ids[i] for i in inner_train_rows])
                audit.record(f"stack_rows[{fold}.{ifold}]", fold,
                             [ids[i] for i in inner_test_rows])

    decision_data = build_decision_dataset(
        stacked_rows, train_labels, class_order, members
    )
    decision_model = train(
        config.fusion.decision_kind, decision_data,
        _derived_seed(seed, _SEED_TRAIN, fold * 977 + 13),
    )

    per_member_te = bundle_for(test_rows)
    out = []
    for i in range(len(test_rows)):
        bundle = PosteriorBundle([pm[i] for pm in per_member_te],
                                 class_order)
        out.append(late_decision(bundle, decision_model))
    return out
