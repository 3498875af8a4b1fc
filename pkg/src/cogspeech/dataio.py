"""Corpus manifests, feature-matrix files, and report serialization.

The manifest is the ingestion contract: a comma-separated text file with
columns ``utterance_id, wav_path, cha_path, label`` (header optional, paths
relative to the manifest). Feature matrices are CSV with a header row of
dimension names and ``utterance_id,label`` as the first two columns.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ManifestError

MANIFEST_COLUMNS = ("utterance_id", "wav_path", "cha_path", "label")


@dataclass
class ManifestEntry:
    utterance_id: str
    wav_path: Path
    cha_path: Path | None
    label: str


def read_manifest(path) -> list[ManifestEntry]:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    base = path.parent
    entries: list[ManifestEntry] = []
    with open(path, newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            cells = [c.strip() for c in row]
            if row_no == 1 and cells[0] == "utterance_id":
                continue
            if len(cells) != 4:
                raise ManifestError(
                    f"{path}:{row_no}: expected 4 columns "
                    f"{MANIFEST_COLUMNS}, got {len(cells)}"
                )
            utt, wav, cha, label = cells
            if not utt or not wav or not label:
                raise ManifestError(
                    f"{path}:{row_no}: utterance_id, wav_path and label "
                    "are required"
                )
            entries.append(ManifestEntry(
                utterance_id=utt,
                wav_path=base / wav,
                cha_path=base / cha if cha else None,
                label=label,
            ))
    if not entries:
        raise ManifestError(f"{path}: no entries")
    ids = [e.utterance_id for e in entries]
    if len(set(ids)) != len(ids):
        raise ManifestError(f"{path}: duplicate utterance ids")
    return entries


def write_manifest(path, entries: list[ManifestEntry]) -> None:
    path = Path(path)
    base = path.parent
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for e in entries:
            writer.writerow([
                e.utterance_id,
                _relative(e.wav_path, base),
                _relative(e.cha_path, base) if e.cha_path else "",
                e.label,
            ])


def _relative(p: Path, base: Path) -> str:
    try:
        return str(Path(p).relative_to(base))
    except ValueError:
        return str(p)


def class_order_of(entries: list[ManifestEntry]) -> list[str]:
    """Frozen class order: first appearance in the manifest."""
    return list(dict.fromkeys(e.label for e in entries))


@dataclass
class FeatureCorpus:
    """Aligned per-set feature matrices for one corpus."""

    ids: list[str]
    labels: list[str]
    class_order: list[str]
    sets: dict[str, tuple[np.ndarray, list[str]]] = field(default_factory=dict)

    def matrix(self, set_id: str) -> np.ndarray:
        return self.sets[set_id][0]

    def names(self, set_id: str) -> list[str]:
        return self.sets[set_id][1]

    def subset(self, rows: np.ndarray) -> "FeatureCorpus":
        rows = np.asarray(rows)
        return FeatureCorpus(
            ids=[self.ids[i] for i in rows],
            labels=[self.labels[i] for i in rows],
            class_order=list(self.class_order),
            sets={
                sid: (X[rows], list(names))
                for sid, (X, names) in self.sets.items()
            },
        )


def write_matrix(path, ids, labels, X: np.ndarray, names) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["utterance_id", "label", *names])
        for utt, label, row in zip(ids, labels, np.asarray(X)):
            writer.writerow([utt, label, *[repr(float(v)) for v in row]])


def read_matrix(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["utterance_id", "label"]:
            raise ManifestError(
                f"{path}: not a feature matrix (bad header)"
            )
        names = header[2:]
        ids, labels, rows = [], [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            labels.append(row[1])
            rows.append([float(v) for v in row[2:]])
    X = np.asarray(rows, dtype=np.float64).reshape(len(ids), len(names))
    return ids, labels, X, names


def load_feature_corpus(matrix_dir, set_ids, manifest_entries=None
                        ) -> FeatureCorpus:
    """Assemble a FeatureCorpus from per-set matrix files.

    Row order and labels must agree across sets; the manifest (when given)
    fixes the utterance order and the class order.
    """
    matrix_dir = Path(matrix_dir)
    sets = {}
    ids = labels = None
    for sid in set_ids:
        path = matrix_dir / f"features_{sid}.csv"
        if not path.exists():
            raise ManifestError(f"missing feature matrix {path}")
        mids, mlabels, X, names = read_matrix(path)
        if ids is None:
            ids, labels = mids, mlabels
        elif mids != ids:
            raise ManifestError(
                f"{path}: utterance order disagrees with other sets"
            )
        sets[sid] = (X, names)
    if manifest_entries is not None:
        order = {e.utterance_id: i for i, e in enumerate(manifest_entries)}
        missing = [u for u in order if u not in set(ids)]
        if missing:
            raise ManifestError(
                f"feature matrices lack manifest utterances: {missing[:5]}"
            )
        class_order = class_order_of(manifest_entries)
    else:
        class_order = list(dict.fromkeys(labels))
    return FeatureCorpus(ids=ids, labels=labels, class_order=class_order,
                         sets=sets)


def save_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
