"""Experiment configuration: INI-style file, validation, and hashing."""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

from .classifiers import KINDS
from .errors import ConfigError
from .fusion import FUSION_MODES, FusionPlan

FEATURE_SETS = ("f1", "f2", "f3", "f4")
SELECTION_SCOPES = ("none", "global", "per_fold")
BALANCE_SCOPES = ("none", "train_only", "whole_dataset")
STACKING_MODES = ("out_of_fold", "resubstitution")


@dataclass
class ExperimentConfig:
    manifest_path: Path
    output_dir: Path
    seed: int
    feature_sets: tuple[str, ...] = ("f3",)
    fusion: FusionPlan = field(
        default_factory=lambda: FusionPlan("concat", ("f3",))
    )
    classifier: str = "random_forest"
    selection_scope: str = "per_fold"
    balance_scope: str = "train_only"
    stacking: str = "out_of_fold"
    k_folds: int = 10
    inner_folds: int = 5
    emotion_model_path: Path | None = None
    jobs: int = 1

    def validate(self, check_paths: bool = True) -> None:
        if self.seed is None:
            raise ConfigError("seed: required (no wall-clock default)")
        if self.k_folds < 2:
            raise ConfigError("k_folds: must be >= 2")
        if self.inner_folds < 2:
            raise ConfigError("inner_folds: must be >= 2")
        if self.classifier not in KINDS:
            raise ConfigError(
                f"classifier: {self.classifier!r} not in {KINDS}"
            )
        for s in self.feature_sets:
            if s not in FEATURE_SETS:
                raise ConfigError(f"feature_sets: unknown set {s!r}")
        if not self.feature_sets:
            raise ConfigError("feature_sets: at least one set required")
        if self.fusion.mode not in FUSION_MODES:
            raise ConfigError(f"fusion.mode: unknown mode {self.fusion.mode!r}")
        for m in self.fusion.members:
            if m not in self.feature_sets:
                raise ConfigError(
                    f"fusion.members: {m!r} not in feature_sets"
                )
        if self.selection_scope not in SELECTION_SCOPES:
            raise ConfigError(
                f"selection_scope: {self.selection_scope!r} not in "
                f"{SELECTION_SCOPES}"
            )
        if self.balance_scope not in BALANCE_SCOPES:
            raise ConfigError(
                f"balance_scope: {self.balance_scope!r} not in "
                f"{BALANCE_SCOPES}"
            )
        if self.stacking not in STACKING_MODES:
            raise ConfigError(
                f"stacking: {self.stacking!r} not in {STACKING_MODES}"
            )
        if self.fusion.mode in ("concat_then_select", "select_then_concat") \
                and self.selection_scope == "none":
            raise ConfigError(
                "selection_scope: selection fusion modes require scope "
                "'global' or 'per_fold'"
            )
        if "f4" in self.feature_sets and self.emotion_model_path is None:
            raise ConfigError(
                "emotion_model_path: required when feature_sets includes f4"
            )
        if check_paths:
            if not Path(self.manifest_path).exists():
                raise ConfigError(
                    f"manifest_path: {self.manifest_path} does not exist"
                )
            if self.emotion_model_path is not None \
                    and not Path(self.emotion_model_path).exists():
                raise ConfigError(
                    f"emotion_model_path: {self.emotion_model_path} "
                    "does not exist"
                )

    def canonical_text(self) -> str:
        """Resolved key = value form; also what gets hashed."""
        lines = [
            "[experiment]",
            f"manifest = {self.manifest_path}",
            f"output_dir = {self.output_dir}",
            f"seed = {self.seed}",
            f"k_folds = {self.k_folds}",
            f"inner_folds = {self.inner_folds}",
            f"jobs = {self.jobs}",
            "",
            "[features]",
            f"sets = {','.join(self.feature_sets)}",
            f"emotion_model = {self.emotion_model_path or ''}",
            "",
            "[fusion]",
            f"mode = {self.fusion.mode}",
            f"members = {','.join(self.fusion.members)}",
            f"decision_classifier = {self.fusion.decision_kind or ''}",
            "",
            "[training]",
            f"classifier = {self.classifier}",
            f"selection_scope = {self.selection_scope}",
            f"balance_scope = {self.balance_scope}",
            f"stacking = {self.stacking}",
        ]
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def _split_csv(value: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Load an INI config file; overrides (CLI flags) win over the file."""
    parser = configparser.ConfigParser()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    def get(section, option, fallback=None):
        return parser.get(section, option, fallback=fallback)

    base = path.parent
    values: dict = {}
    manifest = get("experiment", "manifest")
    if manifest:
        values["manifest_path"] = (base / manifest).resolve()
    out = get("experiment", "output_dir")
    if out:
        values["output_dir"] = (base / out).resolve()
    seed = get("experiment", "seed")
    if seed is not None:
        values["seed"] = _to_int("seed", seed)
    for opt, key in (("k_folds", "k_folds"), ("inner_folds", "inner_folds"),
                     ("jobs", "jobs")):
        raw = get("experiment", opt)
        if raw is not None:
            values[key] = _to_int(opt, raw)
    sets = get("features", "sets")
    if sets:
        values["feature_sets"] = _split_csv(sets)
    emo = get("features", "emotion_model")
    if emo:
        values["emotion_model_path"] = (base / emo).resolve()
    mode = get("fusion", "mode")
    members = get("fusion", "members")
    decision = get("fusion", "decision_classifier") or None
    clf = get("training", "classifier")
    if clf:
        values["classifier"] = clf
    for opt in ("selection_scope", "balance_scope", "stacking"):
        raw = get("training", opt)
        if raw:
            values[opt] = raw

    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
        mode = overrides.get("fusion_mode") or mode
        members = overrides.get("fusion_members") or members
        decision = overrides.get("decision_classifier") or decision
    values.pop("fusion_mode", None)
    values.pop("fusion_members", None)
    values.pop("decision_classifier", None)

    if "manifest_path" not in values:
        raise ConfigError("manifest: required in [experiment]")
    if "output_dir" not in values:
        raise ConfigError("output_dir: required in [experiment]")
    if "seed" not in values:
        raise ConfigError("seed: required in [experiment]")

    mode = mode or "concat"
    member_tuple = (_split_csv(members) if isinstance(members, str)
                    else tuple(members) if members
                    else values.get("feature_sets", ("f3",)))
    try:
        values["fusion"] = FusionPlan(
            mode, member_tuple,
            decision if mode == "late_decision" else None,
        )
    except ValueError as exc:
        raise ConfigError(f"fusion: {exc}") from exc

    config = ExperimentConfig(**values)
    return config


def _to_int(name: str, raw) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected an integer, got {raw!r}") from exc
