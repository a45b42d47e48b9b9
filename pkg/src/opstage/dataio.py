"""CSV helpers for labels and feature tables."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .glcm import FEATURE_NAMES

FEATURE_HEADER = ["id", "label"] + [f"f{i}" for i in range(1, len(FEATURE_NAMES) + 1)]


def natural_key(label: str):
    """Sort integer-like labels numerically, everything else after, lexically."""
    try:
        return (0, int(label), "")
    except ValueError:
        return (1, 0, label)


def read_labels_csv(path) -> dict[str, str]:
    """Read an ``id,label`` table into an ordered ``{id: label}`` dict."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read labels {path}: {exc.strerror}") from None
    if not rows or [c.strip() for c in rows[0][:2]] != ["id", "label"]:
        raise ValidationError(f"{path}: expected header 'id,label'")
    out = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) < 2:
            raise ValidationError(f"{path}:{lineno}: expected two columns")
        if row[0] in out:
            raise ValidationError(f"{path}:{lineno}: duplicate id {row[0]!r}")
        out[row[0]] = row[1]
    return out


def write_labels_csv(path, ids, labels) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label"])
        w.writerows(zip(ids, labels))


def write_features_csv(path, ids, labels, X) -> None:
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURE_HEADER)
        for ident, label, row in zip(ids, labels, X):
            w.writerow([ident, label] + [f"{v:.17g}" for v in row])


def read_features_csv(path):
    """Return ``(ids, labels, X)`` from a feature table."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read features {path}: {exc.strerror}") from None
    if not rows or rows[0] != FEATURE_HEADER:
        raise ValidationError(f"{path}: expected header {','.join(FEATURE_HEADER)}")
    ids, labels, feats = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(FEATURE_HEADER):
            raise ValidationError(f"{path}:{lineno}: expected {len(FEATURE_HEADER)} columns")
        try:
            feats.append([float(v) for v in row[2:]])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: non-numeric feature") from None
        ids.append(row[0])
        labels.append(row[1])
    X = np.array(feats, dtype=np.float64).reshape(len(feats), len(FEATURE_HEADER) - 2)
    return ids, labels, X


def encode_labels(labels, class_names=None):
    """Map string labels to indices; returns ``(indices, class_names)``."""
    if class_names is None:
        class_names = tuple(sorted(set(labels), key=natural_key))
    index = {name: i for i, name in enumerate(class_names)}
    try:
        return np.array([index[lbl] for lbl in labels], dtype=np.int64), tuple(class_names)
    except KeyError as exc:
        raise ValidationError(f"unknown class label {exc.args[0]!r}") from None
