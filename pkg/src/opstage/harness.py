"""Synthetic texture corpora and the repeated split/balance/evaluate protocol.

A synthetic class is a ramp texture ``(a*row + b*col) mod N`` with each pixel
independently replaced by a uniform random level with probability ``noise``.
``(a, b) = (1, 1)``, ``N = 4``, ``S = 7`` and no noise reproduces the 7x7
worked GLCM example.

Each experiment repeat ``r`` (1-based) draws all of its randomness (split,
test balancing, model maps) from ``master_seed * 1_000_003 + r``. The weighted
model and the unweighted ablation are trained on the same split with the same
random maps, so they differ only in the sample weighting.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import wbls
from .dataio import encode_labels, read_features_csv
from .errors import (
    DegenerateLabels,
    DegenerateSpec,
    EmptyClass,
    MissingClass,
    ShapeError,
    SplitError,
    ValidationError,
)
from .glcm import GrayImage, feature_matrix

SEED_MULTIPLIER = 1_000_003


@dataclass(frozen=True)
class SyntheticClassSpec:
    row_step: int
    col_step: int
    noise: float
    count: int
    image_size: int
    levels: int
    label: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.noise <= 1.0:
            raise DegenerateSpec(f"noise must lie in [0, 1], got {self.noise}")
        if self.count < 1:
            raise DegenerateSpec(f"count must be >= 1, got {self.count}")
        if self.image_size < 1:
            raise DegenerateSpec("image_size must be >= 1")
        if self.levels < 2:
            raise DegenerateSpec("levels must be >= 2")

    @classmethod
    def from_dict(cls, doc):
        known = {"row_step", "col_step", "noise", "count", "image_size", "levels", "label"}
        if not isinstance(doc, dict):
            raise DegenerateSpec("class spec must be an object")
        if set(doc) - known:
            raise DegenerateSpec(f"unknown class spec keys {sorted(set(doc) - known)}")
        try:
            return cls(
                row_step=_int(doc["row_step"]),
                col_step=_int(doc["col_step"]),
                noise=float(doc["noise"]),
                count=_int(doc["count"]),
                image_size=_int(doc["image_size"]),
                levels=_int(doc["levels"]),
                label=None if doc.get("label") is None else str(doc["label"]),
            )
        except KeyError as exc:
            raise DegenerateSpec(f"class spec missing {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise DegenerateSpec(f"bad class spec value: {exc}") from None


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError(f"expected an integer, got {v!r}")
    return v


def parse_class_specs(doc) -> list[SyntheticClassSpec]:
    """Accept either a list of class specs or ``{"classes": [...]}``."""
    if isinstance(doc, dict):
        doc = doc.get("classes")
    if not isinstance(doc, list):
        raise DegenerateSpec("expected a list of class specs")
    specs = [SyntheticClassSpec.from_dict(d) for d in doc]
    if len(specs) < 2:
        raise DegenerateSpec("at least two classes are required")
    return specs


def class_names_of(specs: Sequence[SyntheticClassSpec]) -> tuple[str, ...]:
    names = tuple(s.label if s.label is not None else str(k) for k, s in enumerate(specs))
    if len(set(names)) != len(names):
        raise DegenerateSpec("class labels must be unique")
    return names


def ramp_pattern(row_step, col_step, size, levels):
    r, c = np.indices((size, size))
    return (row_step * r + col_step * c) % levels


def generate_synthetic(specs: Sequence[SyntheticClassSpec], seed: int):
    """Return a list of ``(GrayImage, class_index)`` in spec order."""
    if len(specs) < 2:
        raise DegenerateSpec("at least two classes are required")
    rng = np.random.default_rng(seed)
    out = []
    for k, spec in enumerate(specs):
        base = ramp_pattern(spec.row_step, spec.col_step, spec.image_size, spec.levels)
        shape = base.shape
        for _ in range(spec.count):
            mask = rng.random(shape) < spec.noise
            repl = rng.integers(0, spec.levels, size=shape)
            out.append((GrayImage(np.where(mask, repl, base), spec.levels), k))
    return out


@dataclass(frozen=True, eq=False)
class LabeledSample:
    id: str
    features: np.ndarray
    label: int


def split_dataset(samples: Sequence, train_fraction: float, seed):
    """Shuffle by ``seed``; the first ``ceil(train_fraction * n)`` go to train."""
    if not 0.0 < train_fraction < 1.0:
        raise SplitError("train_fraction must lie strictly between 0 and 1")
    n = len(samples)
    n_train = math.ceil(train_fraction * n)
    if n_train < 1 or n_train >= n:
        raise SplitError(f"split of {n} samples at {train_fraction} leaves an empty side")
    order = np.random.default_rng(seed).permutation(n)
    return [samples[i] for i in order[:n_train]], [samples[i] for i in order[n_train:]]


def balance_test_set(test: Sequence, seed, classes: Sequence[int] | None = None):
    """Randomly drop samples so every class keeps the minimum class count.

    ``classes`` lists the classes that must be present; defaults to those
    seen in ``test``. Surviving samples keep their input order.
    """
    labels = np.array([s.label for s in test], dtype=np.int64)
    classes = sorted(set(labels.tolist())) if classes is None else list(classes)
    by_class = {k: np.flatnonzero(labels == k) for k in classes}
    absent = [k for k, idx in by_class.items() if idx.size == 0]
    if absent or not classes:
        raise MissingClass(f"classes {absent} absent from the test set")
    target = min(idx.size for idx in by_class.values())
    rng = np.random.default_rng(seed)
    keep = []
    for k in classes:
        idx = by_class[k]
        keep.extend(idx if idx.size == target else rng.choice(idx, size=target, replace=False))
    return [test[i] for i in sorted(int(i) for i in keep)]


def accuracy(predictions, truth) -> float:
    p, t = np.asarray(predictions), np.asarray(truth)
    if p.shape != t.shape or p.ndim != 1 or p.size == 0:
        raise ShapeError("predictions and truth must be equal-length non-empty vectors")
    return float(np.count_nonzero(p == t) / p.size)


def confusion_and_recall(predictions, truth, m: int):
    """``confusion[t, p]`` counts; recall is NaN-free (0.0 for empty rows),
    with the empty rows reported in the third return value."""
    p, t = np.asarray(predictions, dtype=np.int64), np.asarray(truth, dtype=np.int64)
    if p.shape != t.shape or p.ndim != 1:
        raise ShapeError("predictions and truth must be equal-length vectors")
    if p.size and (min(p.min(), t.min()) < 0 or max(p.max(), t.max()) >= m):
        raise ValidationError(f"labels must lie in [0, {m})")
    confusion = np.zeros((m, m), dtype=np.int64)
    np.add.at(confusion, (t, p), 1)
    support = confusion.sum(axis=1)
    empty = support == 0
    recall = np.where(empty, 0.0, np.diag(confusion) / np.where(empty, 1, support))
    return confusion, recall, np.flatnonzero(empty).tolist()


@dataclass(frozen=True)
class ExperimentConfig:
    synthetic: tuple[SyntheticClassSpec, ...] | None = None
    synthetic_seed: int | None = None
    features_csv: str | None = None
    train_fraction: float = 0.75
    repeats: int = 10
    master_seed: int = 0
    hyper: wbls.WblsHyperParams = field(default_factory=wbls.WblsHyperParams)
    run_unweighted_baseline: bool = True

    def __post_init__(self):
        if (self.synthetic is None) == (self.features_csv is None):
            raise ValidationError("exactly one of synthetic / features_csv must be given")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("train_fraction must lie strictly between 0 and 1")
        if self.repeats < 1:
            raise ValidationError("repeats must be >= 1")
        if self.master_seed < 0:
            raise ValidationError("master_seed must be non-negative")

    @classmethod
    def from_dict(cls, doc, base_dir=None):
        if not isinstance(doc, dict):
            raise ValidationError("experiment config must be a JSON object")
        known = {"dataset", "train_fraction", "repeats", "master_seed", "hyper", "run_unweighted_baseline"}
        if set(doc) - known:
            raise ValidationError(f"unknown config keys {sorted(set(doc) - known)}")
        ds = doc.get("dataset")
        if not isinstance(ds, dict) or len(ds) != 1:
            raise ValidationError("dataset must be {'synthetic': ...} or {'features_csv': ...}")
        synthetic = synthetic_seed = features_csv = None
        if "synthetic" in ds:
            synthetic = tuple(parse_class_specs(ds["synthetic"]))
            if isinstance(ds["synthetic"], dict) and "seed" in ds["synthetic"]:
                synthetic_seed = int(ds["synthetic"]["seed"])
        elif "features_csv" in ds:
            features_csv = str(ds["features_csv"])
            if base_dir is not None:
                features_csv = str(Path(base_dir) / features_csv)
        else:
            raise ValidationError(f"unknown dataset source {sorted(ds)}")
        h = doc.get("hyper", {})
        unknown_h = set(h) - {"feature_nodes", "enhancement_nodes", "lambda"}
        if unknown_h:
            raise ValidationError(f"unknown hyper keys {sorted(unknown_h)}")
        hyper = wbls.WblsHyperParams(
            feature_nodes=int(h.get("feature_nodes", 10)),
            enhancement_nodes=int(h.get("enhancement_nodes", 10)),
            lam=float(h.get("lambda", 1e-3)),
        )
        return cls(
            synthetic=synthetic,
            synthetic_seed=synthetic_seed,
            features_csv=features_csv,
            train_fraction=float(doc.get("train_fraction", 0.75)),
            repeats=int(doc.get("repeats", 10)),
            master_seed=int(doc.get("master_seed", 0)),
            hyper=hyper,
            run_unweighted_baseline=bool(doc.get("run_unweighted_baseline", True)),
        )


def load_samples(config: ExperimentConfig):
    """Materialize the dataset as ``(samples, class_names)``."""
    if config.synthetic is not None:
        seed = config.master_seed if config.synthetic_seed is None else config.synthetic_seed
        corpus = generate_synthetic(config.synthetic, seed)
        X = feature_matrix(img for img, _ in corpus)
        samples = [LabeledSample(f"s{i:05d}", X[i], k) for i, (_, k) in enumerate(corpus)]
        return samples, class_names_of(config.synthetic)
    ids, labels, X = read_features_csv(config.features_csv)
    idx, names = encode_labels(labels)
    if len(names) < 2:
        raise DegenerateSpec("feature table must contain at least two classes")
    return [LabeledSample(i, x, int(k)) for i, x, k in zip(ids, X, idx)], names


def repeat_seed(master_seed: int, r: int) -> int:
    return master_seed * SEED_MULTIPLIER + r


def repeat_streams(seed: int):
    """Independent ``(split, balance, model)`` seeds derived from one repeat seed."""
    split_ss, balance_ss, model_ss = np.random.SeedSequence(seed).spawn(3)
    return split_ss, balance_ss, int(model_ss.generate_state(1, dtype=np.uint64)[0])


def repeat_splits(config: ExperimentConfig, samples, m: int):
    """Yield ``(r, seed, train, test, balanced_test)`` per repeat; ``balanced_test``
    is a :class:`MissingClass` instance when a class is absent from the test side."""
    for r in range(1, config.repeats + 1):
        seed = repeat_seed(config.master_seed, r)
        split_ss, balance_ss, _ = repeat_streams(seed)
        train, test = split_dataset(samples, config.train_fraction, split_ss)
        try:
            balanced = balance_test_set(test, balance_ss, classes=range(m))
        except MissingClass as exc:
            balanced = exc
        yield r, seed, train, test, balanced


def _counts(samples, m):
    return np.bincount([s.label for s in samples], minlength=m).tolist()


def _evaluate(train, test, m, hyper, names):
    X = np.vstack([s.features for s in train])
    y = np.array([s.label for s in train])
    model = wbls.train(X, y, hyper, class_names=names)
    pred, _ = wbls.predict(model, np.vstack([s.features for s in test]))
    truth = np.array([s.label for s in test])
    confusion, recall, _ = confusion_and_recall(pred, truth, m)
    return {
        "accuracy": accuracy(pred, truth),
        "recall": recall.tolist(),
        "confusion": confusion.tolist(),
    }


def _summary(values):
    if not values:
        return {"mean": None, "std": None, "n": 0}
    arr = np.array(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else None
    return {"mean": float(arr.mean()), "std": std, "n": int(arr.size)}


def run_experiment(config: ExperimentConfig) -> dict:
    """Run all repeats and return a JSON-ready report dict."""
    samples, names = load_samples(config)
    m = len(names)
    class_sizes = _counts(samples, m)
    minority = int(np.argmin(class_sizes))
    variants = {"weighted": True}
    if config.run_unweighted_baseline:
        variants["unweighted"] = False

    records = []
    for r, seed, train, test, balanced in repeat_splits(config, samples, m):
        _, _, model_seed = repeat_streams(seed)
        rec = {
            "repeat": r,
            "seed": seed,
            "model_seed": model_seed,
            "train_counts": _counts(train, m),
            "test_counts": _counts(test, m),
        }
        if isinstance(balanced, MissingClass):
            rec["error"] = f"MissingClass: {balanced}"
            records.append(rec)
            continue
        rec["balanced_test_counts"] = _counts(balanced, m)
        try:
            rec["variants"] = {
                name: _evaluate(
                    train, balanced, m, replace(config.hyper, seed=model_seed, weighted=w), names
                )
                for name, w in variants.items()
            }
        except (EmptyClass, DegenerateLabels) as exc:  # training side lacks a class
            rec["error"] = f"{type(exc).__name__}: {exc}"
        records.append(rec)

    ok = [rec for rec in records if "variants" in rec]
    aggregates = {}
    for name in variants:
        acc = [rec["variants"][name]["accuracy"] for rec in ok]
        mrec = [rec["variants"][name]["recall"][minority] for rec in ok]
        aggregates[name] = {"accuracy": _summary(acc), "minority_recall": _summary(mrec)}
    if "unweighted" in aggregates and ok:
        aggregates["minority_recall_margin"] = (
            aggregates["weighted"]["minority_recall"]["mean"]
            - aggregates["unweighted"]["minority_recall"]["mean"]
        )

    return {
        "config": config_to_dict(config),
        "class_names": list(names),
        "class_sizes": class_sizes,
        "minority_class": minority,
        "records": records,
        "failed_repeats": [rec["repeat"] for rec in records if "error" in rec],
        "aggregates": aggregates,
    }


def config_to_dict(config: ExperimentConfig) -> dict:
    if config.synthetic is not None:
        dataset = {
            "synthetic": {
                "seed": config.synthetic_seed,
                "classes": [asdict(s) for s in config.synthetic],
            }
        }
    else:
        dataset = {"features_csv": config.features_csv}
    h = config.hyper
    return {
        "dataset": dataset,
        "train_fraction": config.train_fraction,
        "repeats": config.repeats,
        "master_seed": config.master_seed,
        "hyper": {"feature_nodes": h.feature_nodes, "enhancement_nodes": h.enhancement_nodes, "lambda": h.lam},
        "run_unweighted_baseline": config.run_unweighted_baseline,
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["repeat", "variant", "seed", "n_train", "n_test", "accuracy", "minority_recall", "error"])
    minority = report["minority_class"]
    for rec in report["records"]:
        n_train = sum(rec["train_counts"])
        n_test = sum(rec.get("balanced_test_counts", rec["test_counts"]))
        if "variants" not in rec:
            w.writerow([rec["repeat"], "", rec["seed"], n_train, n_test, "", "", rec["error"]])
            continue
        for name, res in rec["variants"].items():
            w.writerow([rec["repeat"], name, rec["seed"], n_train, n_test,
                        repr(res["accuracy"]), repr(res["recall"][minority]), ""])
    return buf.getvalue()
