"""Command-line surface: extract, evaluate, train-emotion, synth-corpus,
select.

Exit codes: 0 ok, 1 partial failure (some utterances failed), 2 invalid
configuration or arguments.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cfs import SelectionResult, greedy_stepwise
from .config import ExperimentConfig, load_config
from .dataio import (
    load_feature_corpus,
    read_manifest,
    read_matrix,
    save_json,
    write_matrix,
)
from .emotion import train_emotion_model
from .errors import CogspeechError, ConfigError
from .evaluation import run_experiment
from .pipeline import ALL_SETS, extract_corpus
from .synth import generate_corpus, generate_emotion_corpus

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cogspeech",
        description="Acoustic biomarkers and classifier fusion for "
                    "dementia-stage identification from speech.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract feature matrices from a "
                                       "corpus manifest")
    p.add_argument("--manifest", required=True, type=Path,
                   help="corpus manifest (utterance_id,wav,cha,label)")
    p.add_argument("--sets", default="f1,f2,f3",
                   help="comma list from f1,f2,f3,f4 (default: f1,f2,f3)")
    p.add_argument("--out-dir", required=True, type=Path,
                   help="directory for features_<set>.csv files")
    p.add_argument("--emotion-model", type=Path, default=None,
                   help="trained emotion model (required for f4)")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel extraction workers (default: 1)")
    p.add_argument("--no-cache", action="store_true",
                   help="disable the content-keyed feature cache")

    p = sub.add_parser("evaluate", help="run a cross-validated experiment")
    p.add_argument("--config", required=True, type=Path,
                   help="INI experiment config; flags below override it")
    p.add_argument("--seed", type=int, default=None, help="override seed")
    p.add_argument("--classifier", default=None,
                   help="override training classifier kind")
    p.add_argument("--k-folds", type=int, default=None, dest="k_folds",
                   help="override fold count")
    p.add_argument("--fusion-mode", default=None, dest="fusion_mode",
                   help="override fusion mode")
    p.add_argument("--balance-scope", default=None, dest="balance_scope",
                   help="override balance scope")
    p.add_argument("--selection-scope", default=None, dest="selection_scope",
                   help="override selection scope")
    p.add_argument("--output-dir", type=Path, default=None, dest="output_dir",
                   help="override output directory")

    p = sub.add_parser("train-emotion", help="train the 7-class emotion "
                                             "model used for f4")
    p.add_argument("--manifest", required=True, type=Path,
                   help="manifest of (utterance_id,wav,-,emotion label)")
    p.add_argument("--out", required=True, type=Path,
                   help="output model file")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--classifier", default="random_forest")

    p = sub.add_parser("synth-corpus", help="generate the synthetic "
                                            "3-class test corpus")
    p.add_argument("--n-per-class", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--emotions", action="store_true",
                   help="generate the 7-class emotional corpus instead")

    p = sub.add_parser("select", help="standalone CFS on a feature matrix "
                                      "file")
    p.add_argument("--matrix", required=True, type=Path,
                   help="features_<set>.csv produced by extract")
    p.add_argument("--out", required=True, type=Path,
                   help="selection result (JSON)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags already; keep help/version at 0
        return int(exc.code or 0)
    try:
        handler = {
            "extract": cmd_extract,
            "evaluate": cmd_evaluate,
            "train-emotion": cmd_train_emotion,
            "synth-corpus": cmd_synth_corpus,
            "select": cmd_select,
        }[args.command]
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CogspeechError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


def cmd_extract(args) -> int:
    sets = [s.strip() for s in args.sets.split(",") if s.strip()]
    unknown = [s for s in sets if s not in ALL_SETS]
    if unknown:
        raise ConfigError(f"sets: unknown feature set(s) {unknown}")
    if "f4" in sets and args.emotion_model is None:
        raise ConfigError("emotion-model: required when extracting f4")
    entries = read_manifest(args.manifest)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = None if args.no_cache else args.out_dir / "cache"
    corpus, stats = extract_corpus(
        entries, sets,
        emotion_model_path=args.emotion_model,
        cache_dir=cache_dir,
        jobs=args.jobs,
    )
    for s in sets:
        X, names = corpus.sets[s]
        write_matrix(args.out_dir / f"features_{s}.csv",
                     corpus.ids, corpus.labels, X, names)
    print(f"extracted {stats.computed} utterance(s), "
          f"{stats.cached} from cache, {len(stats.failures)} failed")
    for utt, err in stats.failures:
        print(f"  FAILED {utt}: {err}", file=sys.stderr)
    return EXIT_PARTIAL if stats.failures else EXIT_OK


def cmd_evaluate(args) -> int:
    overrides = {
        "seed": args.seed,
        "classifier": args.classifier,
        "k_folds": args.k_folds,
        "fusion_mode": args.fusion_mode,
        "balance_scope": args.balance_scope,
        "selection_scope": args.selection_scope,
        "output_dir": args.output_dir,
    }
    config = load_config(args.config, overrides)
    config.validate(check_paths=True)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    entries = read_manifest(config.manifest_path)
    feature_dir = out / "features"
    needed = list(config.feature_sets)
    missing = [
        s for s in needed
        if not (feature_dir / f"features_{s}.csv").exists()
    ]
    if missing:
        feature_dir.mkdir(parents=True, exist_ok=True)
        corpus, stats = extract_corpus(
            entries, needed,
            emotion_model_path=config.emotion_model_path,
            cache_dir=feature_dir / "cache",
            jobs=config.jobs,
        )
        if stats.failures:
            for utt, err in stats.failures:
                print(f"  FAILED {utt}: {err}", file=sys.stderr)
            return EXIT_PARTIAL
        for s in needed:
            X, names = corpus.sets[s]
            write_matrix(feature_dir / f"features_{s}.csv",
                         corpus.ids, corpus.labels, X, names)
    corpus = load_feature_corpus(feature_dir, needed, entries)

    report = run_experiment(config, corpus)
    (out / "config_resolved.ini").write_text(config.canonical_text())
    save_json(out / "report.json", report.to_dict())
    (out / "report.txt").write_text(report.human_table())
    print(report.human_table())
    return EXIT_OK


def cmd_train_emotion(args) -> int:
    entries = read_manifest(args.manifest)
    model = train_emotion_model(entries, seed=args.seed,
                                classifier_kind=args.classifier)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    model.save(args.out)
    print(f"emotion model written to {args.out}")
    return EXIT_OK


def cmd_synth_corpus(args) -> int:
    if args.n_per_class < 1:
        raise ConfigError("n-per-class: must be >= 1")
    if args.emotions:
        manifest = generate_emotion_corpus(args.out_dir, args.n_per_class,
                                           args.seed)
    else:
        manifest = generate_corpus(args.out_dir, args.n_per_class, args.seed)
    print(f"manifest written to {manifest}")
    return EXIT_OK


def cmd_select(args) -> int:
    ids, labels, X, names = read_matrix(args.matrix)
    result = greedy_stepwise(X, np.asarray(labels), names=list(names))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_json(args.out, result.to_dict())
    print(f"selected {len(result.indices)} feature(s), "
          f"merit {result.merit:.4f}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
