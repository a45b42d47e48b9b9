"""Weighted broad learning system (WBLS).

A flat network: a random ``tanh`` feature layer ``Z``, a random ``sigmoid``
enhancement layer ``H`` fed by ``Z``, and output weights ``W`` solved in
closed form from the class-weighted ridge problem

    min_W  sum_i c_i * ||A_i W - L_i||^2 + lam * ||W||_F^2,   A = [Z | H]

whose normal equations are ``(lam*I + A^T C A) W = A^T C L``. With
``c_i = 1 / (size of sample i's class)`` every class carries unit total
weight; ``weighted=False`` gives the plain BLS ablation (``c_i = 1``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import DegenerateLabels, EmptyClass, NumericError, ShapeError, ValidationError

RESIDUAL_TOL = 1e-8
FORMAT_VERSION = 1


@dataclass(frozen=True)
class WblsHyperParams:
    feature_nodes: int = 10
    enhancement_nodes: int = 10
    lam: float = 1e-3
    seed: int = 0
    weighted: bool = True

    def __post_init__(self):
        if self.feature_nodes < 1 or self.enhancement_nodes < 1:
            raise ValidationError("feature_nodes and enhancement_nodes must be >= 1")
        if not self.lam > 0:
            raise ValidationError("lambda must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class RandomMaps:
    """Columns of ``feature_weights`` (d x p) and ``enhancement_weights``
    (p x q) are the per-node weight vectors."""

    feature_weights: np.ndarray
    feature_biases: np.ndarray
    enhancement_weights: np.ndarray
    enhancement_biases: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.feature_weights.shape[0]


@dataclass(frozen=True, eq=False)
class Standardizer:
    means: np.ndarray
    scales: np.ndarray

    @classmethod
    def fit(cls, X):
        means = X.mean(axis=0)
        std = X.std(axis=0)
        # constant columns can leave float dust in std; treat as zero variance
        flat = std <= 1e-12 * np.maximum(1.0, np.abs(means))
        return cls(means, np.where(flat, 1.0, std))

    def transform(self, X):
        return (X - self.means) / self.scales


@dataclass(frozen=True, eq=False)
class ClassWeights:
    diag: np.ndarray
    class_counts: np.ndarray


@dataclass(frozen=True, eq=False)
class WblsModel:
    hyper: WblsHyperParams
    standardizer: Standardizer
    maps: RandomMaps
    output_weights: np.ndarray
    class_names: tuple = field(default=())

    def predict(self, X_raw):
        return predict(self, X_raw)

    def to_dict(self) -> dict:
        h = self.hyper
        return {
            "format": "opstage-wbls",
            "version": FORMAT_VERSION,
            "hyper": {
                "feature_nodes": h.feature_nodes,
                "enhancement_nodes": h.enhancement_nodes,
                "lambda": h.lam,
                "seed": h.seed,
                "weighted": h.weighted,
            },
            "class_names": list(self.class_names),
            "standardizer": {
                "means": self.standardizer.means,
                "scales": self.standardizer.scales,
            },
            "maps": {
                "feature_weights": self.maps.feature_weights,
                "feature_biases": self.maps.feature_biases,
                "enhancement_weights": self.maps.enhancement_weights,
                "enhancement_biases": self.maps.enhancement_biases,
            },
            "output_weights": self.output_weights,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WblsModel":
        if doc.get("format") != "opstage-wbls":
            raise ValidationError("not an opstage WBLS model document")
        h = doc["hyper"]
        hyper = WblsHyperParams(
            feature_nodes=int(h["feature_nodes"]),
            enhancement_nodes=int(h["enhancement_nodes"]),
            lam=float(h["lambda"]),
            seed=int(h["seed"]),
            weighted=bool(h["weighted"]),
        )

        def arr(x, ndim):
            a = np.array(x, dtype=np.float64)
            return a.reshape((0,) * ndim) if a.size == 0 else a

        st, mp = doc["standardizer"], doc["maps"]
        model = cls(
            hyper=hyper,
            standardizer=Standardizer(arr(st["means"], 1), arr(st["scales"], 1)),
            maps=RandomMaps(
                arr(mp["feature_weights"], 2),
                arr(mp["feature_biases"], 1),
                arr(mp["enhancement_weights"], 2),
                arr(mp["enhancement_biases"], 1),
            ),
            output_weights=arr(doc["output_weights"], 2),
            class_names=tuple(doc["class_names"]),
        )
        p, q = hyper.feature_nodes, hyper.enhancement_nodes
        d = model.maps.input_dim
        if (
            model.maps.feature_weights.shape != (d, p)
            or model.maps.enhancement_weights.shape != (p, q)
            or model.output_weights.shape != (p + q, len(model.class_names))
            or model.standardizer.means.shape != (d,)
        ):
            raise ShapeError("model document has inconsistent array shapes")
        return model


def init_random_maps(input_dim: int, hyper: WblsHyperParams) -> RandomMaps:
    """Draw all weights and biases i.i.d. uniform on [-1, 1] from ``hyper.seed``."""
    if input_dim < 1:
        raise ValidationError("input_dim must be >= 1")
    rng = np.random.default_rng(hyper.seed)
    p, q = hyper.feature_nodes, hyper.enhancement_nodes
    return RandomMaps(
        feature_weights=rng.uniform(-1.0, 1.0, size=(input_dim, p)),
        feature_biases=rng.uniform(-1.0, 1.0, size=p),
        enhancement_weights=rng.uniform(-1.0, 1.0, size=(p, q)),
        enhancement_biases=rng.uniform(-1.0, 1.0, size=q),
    )


def _as_matrix(X, ncols, what):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != ncols:
        raise ShapeError(f"{what} must have shape (n, {ncols}), got {X.shape}")
    return X


def build_feature_layer(X, maps: RandomMaps):
    X = _as_matrix(X, maps.input_dim, "X")
    return np.tanh(X @ maps.feature_weights + maps.feature_biases)


def _sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def build_enhancement_layer(Z, maps: RandomMaps):
    Z = _as_matrix(Z, maps.enhancement_weights.shape[0], "Z")
    return _sigmoid(Z @ maps.enhancement_weights + maps.enhancement_biases)


def assemble_hidden(Z, H):
    Z, H = np.asarray(Z), np.asarray(H)
    if Z.ndim != 2 or H.ndim != 2 or Z.shape[0] != H.shape[0]:
        raise ShapeError(f"cannot concatenate Z {Z.shape} and H {H.shape}")
    return np.hstack([Z, H])


def compute_class_weights(labels, m: int, weighted: bool = True) -> ClassWeights:
    labels = np.asarray(labels)
    if labels.ndim != 1 or (labels.size and (labels.min() < 0 or labels.max() >= m)):
        raise ValidationError(f"labels must be class indices in [0, {m})")
    counts = np.bincount(labels, minlength=m)
    if not weighted:
        return ClassWeights(np.ones(labels.size), counts)
    if np.any(counts == 0):
        empty = np.flatnonzero(counts == 0).tolist()
        raise EmptyClass(f"classes {empty} have no samples")
    return ClassWeights(1.0 / counts[labels], counts)


def one_hot(labels, m: int):
    labels = np.asarray(labels)
    L = np.zeros((labels.size, m))
    L[np.arange(labels.size), labels] = 1.0
    return L


def normal_equation_residual(A, diag, L, lam, W) -> float:
    """Relative Frobenius residual of ``(lam I + A^T C A) W = A^T C L``."""
    AtC = A.T * diag
    rhs = AtC @ L
    lhs = lam * W + AtC @ (A @ W)
    scale = np.linalg.norm(rhs)
    return float(np.linalg.norm(lhs - rhs) / (scale if scale > 0 else 1.0))


def solve_output_weights(A, diag, L, lam: float):
    """Solve the weighted ridge normal equations by Cholesky factorization.

    One round of iterative refinement is applied when the first solve misses
    the relative residual bound of 1e-8.
    """
    A = np.asarray(A, dtype=np.float64)
    diag = np.asarray(diag, dtype=np.float64)
    L = np.asarray(L, dtype=np.float64)
    if A.ndim != 2 or L.ndim != 2 or diag.shape != (A.shape[0],) or L.shape[0] != A.shape[0]:
        raise ShapeError(f"incompatible shapes A {A.shape}, diag {diag.shape}, L {L.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(diag)) and np.all(np.isfinite(L))):
        raise NumericError("non-finite values in solver inputs")
    if not lam > 0 or not np.isfinite(lam):
        raise ValidationError("lambda must be a positive finite number")
    if np.any(diag <= 0):
        raise ValidationError("sample weights must be > 0")

    AtC = A.T * diag
    G = AtC @ A
    G[np.diag_indices_from(G)] += lam
    rhs = AtC @ L
    try:
        factor = scipy.linalg.cho_factor(G, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"normal matrix not positive definite: {exc}") from None
    W = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    if normal_equation_residual(A, diag, L, lam, W) > RESIDUAL_TOL:
        W = W + scipy.linalg.cho_solve(factor, rhs - G @ W, check_finite=False)
    if not np.all(np.isfinite(W)):
        raise NumericError("solve produced non-finite output weights")
    if normal_equation_residual(A, diag, L, lam, W) > RESIDUAL_TOL:
        raise NumericError("normal-equation residual above tolerance")
    return W


def hidden_layer(X_std, maps: RandomMaps):
    Z = build_feature_layer(X_std, maps)
    return assemble_hidden(Z, build_enhancement_layer(Z, maps))


def train(X_raw, labels, hyper: WblsHyperParams = WblsHyperParams(), class_names=None) -> WblsModel:
    """Fit a WBLS model on raw features and integer class indices.

    ``class_names`` defaults to ``range(m)`` where ``m = max(label) + 1``.
    """
    X_raw = np.asarray(X_raw, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if X_raw.ndim != 2 or X_raw.shape[1] < 1 or X_raw.shape[0] != labels.shape[0]:
        raise ShapeError(f"X {X_raw.shape} and labels {labels.shape} do not match")
    if not np.all(np.isfinite(X_raw)):
        raise NumericError("non-finite values in training features")
    if class_names is None:
        m = int(labels.max()) + 1 if labels.size else 0
        class_names = tuple(range(m))
    m = len(class_names)
    if labels.size == 0 or np.unique(labels).size < 2 or m < 2:
        raise DegenerateLabels("training labels must span at least two classes")

    weights = compute_class_weights(labels, m, hyper.weighted)
    standardizer = Standardizer.fit(X_raw)
    maps = init_random_maps(X_raw.shape[1], hyper)
    A = hidden_layer(standardizer.transform(X_raw), maps)
    W = solve_output_weights(A, weights.diag, one_hot(labels, m), hyper.lam)
    return WblsModel(hyper, standardizer, maps, W, tuple(class_names))


def decision_scores(model: WblsModel, X_raw):
    X_raw = _as_matrix(X_raw, model.maps.input_dim, "X")
    return hidden_layer(model.standardizer.transform(X_raw), model.maps) @ model.output_weights


def predict(model: WblsModel, X_raw):
    """Return ``(class_indices, scores)``; ties go to the lowest index."""
    scores = decision_scores(model, X_raw)
    return np.argmax(scores, axis=1), scores


def _format_number(x: float) -> str:
    if not np.isfinite(x):
        raise NumericError("cannot serialize non-finite value")
    return f"{x:.16e}"


def _dump(obj, indent=0) -> str:
    pad = "  " * (indent + 1)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        items = [f"{pad}{json.dumps(k)}: {_dump(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, (list, tuple)):
        if obj and isinstance(obj[0], list):
            rows = [pad + _dump(v, indent + 1) for v in obj]
            return "[\n" + ",\n".join(rows) + "\n" + "  " * indent + "]"
        return "[" + ", ".join(_dump(v, indent) for v in obj) + "]"
    if isinstance(obj, float):
        return _format_number(obj)
    return json.dumps(obj)


def dumps_model(model: WblsModel) -> str:
    """JSON text with every float written as 17 significant digits."""
    return _dump(model.to_dict()) + "\n"


def save_model(model: WblsModel, path) -> None:
    Path(path).write_text(dumps_model(model))


def load_model(path) -> WblsModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read model {path}: {exc}") from None
    return WblsModel.from_dict(doc)
