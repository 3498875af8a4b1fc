"""Five classifier families behind one train/predict_proba contract.

All models are deterministic given their training seed, emit proper
posterior distributions, and serialize to JSON losslessly (Python floats
round-trip exactly through repr-based JSON encoding).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLabels, DimensionMismatch, NonFiniteFeature

KINDS = ("random_forest", "naive_bayes", "logistic", "linear_svm", "mlp")

FOREST_TREES = 100
NB_VAR_FLOOR = 1e-6
LOGISTIC_L2 = 1e-4
LOGISTIC_TOL = 1e-6
LOGISTIC_MAX_ITER = 5000
SVM_C = 1.0
SVM_EPOCHS = 2000
MLP_EPOCHS = 500
MLP_LEARNING_RATE = 0.3
MLP_MOMENTUM = 0.2

MODEL_FORMAT_VERSION = 1


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray                  # integer codes into class_order
    class_order: list[str]
    feature_names: list[str] | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X must be (n, d) aligned with y")

    @classmethod
    def from_labels(cls, X, labels, class_order=None, feature_names=None):
        labels = list(labels)
        if class_order is None:
            class_order = list(dict.fromkeys(labels))  # first-appearance order
        lookup = {c: i for i, c in enumerate(class_order)}
        y = np.array([lookup[l] for l in labels], dtype=np.int64)
        return cls(np.asarray(X, dtype=np.float64), y, list(class_order),
                   feature_names)

    @property
    def n_classes(self) -> int:
        return len(self.class_order)


@dataclass
class Model:
    kind: str
    class_order: list[str]
    train_seed: int
    n_features: int
    params: dict = field(default_factory=dict)
    standardization: dict | None = None

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "class_order": list(self.class_order),
            "train_seed": self.train_seed,
            "n_features": self.n_features,
            "standardization": self.standardization,
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Model":
        return cls(
            kind=d["kind"],
            class_order=list(d["class_order"]),
            train_seed=int(d["train_seed"]),
            n_features=int(d["n_features"]),
            params=d["params"],
            standardization=d.get("standardization"),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "Model":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _validate(data: Dataset) -> None:
    if not np.all(np.isfinite(data.X)):
        raise NonFiniteFeature("training matrix contains NaN or infinity")
    if np.unique(data.y).size < 2:
        raise DegenerateLabels("training data has fewer than two classes")
    if data.X.shape[1] < 1:
        raise ValueError("need at least one feature")


def _standardize_fit(X: np.ndarray) -> dict:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    return {"mean": mean.tolist(), "std": std.tolist()}


def _standardize_apply(X: np.ndarray, stats: dict) -> np.ndarray:
    return (X - np.asarray(stats["mean"])) / np.asarray(stats["std"])


def train(kind: str, data: Dataset, seed: int) -> Model:
    """Train one classifier; deterministic given (kind, data, seed)."""
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}")
    _validate(data)
    trainer = {
        "random_forest": _train_forest,
        "naive_bayes": _train_naive_bayes,
        "logistic": _train_logistic,
        "linear_svm": _train_svm,
        "mlp": _train_mlp,
    }[kind]
    standardization = None
    X = data.X
    if kind in ("logistic", "linear_svm", "mlp"):
        standardization = _standardize_fit(X)
        X = _standardize_apply(X, standardization)
    params = trainer(X, data.y, data.n_classes, seed)
    return Model(
        kind=kind,
        class_order=list(data.class_order),
        train_seed=seed,
        n_features=data.X.shape[1],
        params=params,
        standardization=standardization,
    )


def predict_proba(model: Model, x) -> np.ndarray:
    """Posterior distribution over model.class_order; sums to 1."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"model expects {model.n_features} features, got {X.shape[1]}"
        )
    if model.standardization is not None:
        X = _standardize_apply(X, model.standardization)
    scorer = {
        "random_forest": _proba_forest,
        "naive_bayes": _proba_naive_bayes,
        "logistic": _proba_logistic,
        "linear_svm": _proba_svm,
        "mlp": _proba_mlp,
    }[model.kind]
    probs = scorer(model.params, X, len(model.class_order))
    return probs[0] if single else probs


def predict(model: Model, x) -> int | np.ndarray:
    """Argmax class code; ties resolve to the earliest class."""
    probs = predict_proba(model, x)
    if probs.ndim == 1:
        return int(np.argmax(probs))
    return np.argmax(probs, axis=1)


def predict_label(model: Model, x) -> str:
    return model.class_order[predict(model, x)]


# --- random forest ---------------------------------------------------------

def _gini_best_split(Xcol: np.ndarray, y: np.ndarray, n_classes: int):
    """Best threshold for one feature column, or None when nothing splits."""
    order = np.argsort(Xcol, kind="stable")
    xs = Xcol[order]
    ys = y[order]
    n = xs.size
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), ys] = 1.0
    left = np.cumsum(onehot, axis=0)
    total = left[-1]
    boundaries = np.flatnonzero(xs[1:] > xs[:-1])
    if boundaries.size == 0:
        return None
    nl = (boundaries + 1).astype(np.float64)
    nr = n - nl
    lc = left[boundaries]
    rc = total[None, :] - lc
    gini_l = 1.0 - ((lc / nl[:, None]) ** 2).sum(axis=1)
    gini_r = 1.0 - ((rc / nr[:, None]) ** 2).sum(axis=1)
    weighted = (nl * gini_l + nr * gini_r) / n
    best = int(np.argmin(weighted))
    threshold = 0.5 * (xs[boundaries[best]] + xs[boundaries[best] + 1])
    parent = 1.0 - ((total / n) ** 2).sum()
    gain = parent - weighted[best]
    return gain, threshold


def _build_tree(X: np.ndarray, y: np.ndarray, n_classes: int,
                m_features: int, rng: np.random.Generator) -> dict:
    features: list[int] = []
    thresholds: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    leaf_class: list[int] = []

    def grow(idx: np.ndarray) -> int:
        node = len(features)
        features.append(-1)
        thresholds.append(0.0)
        lefts.append(-1)
        rights.append(-1)
        leaf_class.append(-1)
        counts = np.bincount(y[idx], minlength=n_classes)
        if idx.size < 2 or np.count_nonzero(counts) == 1:
            leaf_class[node] = int(np.argmax(counts))
            return node
        cols = rng.choice(X.shape[1], size=m_features, replace=False)
        best = None
        for col in sorted(int(c) for c in cols):
            found = _gini_best_split(X[idx, col], y[idx], n_classes)
            if found is None:
                continue
            gain, threshold = found
            if best is None or gain > best[0] + 1e-15:
                best = (gain, col, threshold)
        if best is None or best[0] <= 1e-15:
            leaf_class[node] = int(np.argmax(counts))
            return node
        _, col, threshold = best
        go_left = X[idx, col] <= threshold
        features[node] = col
        thresholds[node] = float(threshold)
        lefts[node] = grow(idx[go_left])
        rights[node] = grow(idx[~go_left])
        return node

    grow(np.arange(X.shape[0]))
    return {
        "feature": features,
        "threshold": thresholds,
        "left": lefts,
        "right": rights,
        "leaf": leaf_class,
    }


def _tree_predict(tree: dict, X: np.ndarray) -> np.ndarray:
    feature = np.asarray(tree["feature"])
    threshold = np.asarray(tree["threshold"])
    left = np.asarray(tree["left"])
    right = np.asarray(tree["right"])
    leaf = np.asarray(tree["leaf"])
    out = np.zeros(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while leaf[node] < 0:
            node = left[node] if X[i, feature[node]] <= threshold[node] \
                else right[node]
        out[i] = leaf[node]
    return out


def _train_forest(X, y, n_classes, seed) -> dict:
    n, d = X.shape
    m_features = min(d, int(np.log2(d)) + 1)
    trees = []
    for t in range(FOREST_TREES):
        rng = np.random.default_rng(seed + t)  # schedule-independent seeding
        sample = rng.integers(0, n, size=n)
        trees.append(_build_tree(X[sample], y[sample], n_classes,
                                 m_features, rng))
    return {"trees": trees, "n_trees": FOREST_TREES}


def _proba_forest(params, X, n_classes) -> np.ndarray:
    votes = np.zeros((X.shape[0], n_classes))
    for tree in params["trees"]:
        pred = _tree_predict(tree, X)
        votes[np.arange(X.shape[0]), pred] += 1.0
    # Laplace-smoothed vote fractions
    return (votes + 1.0) / (params["n_trees"] + n_classes)


# --- Gaussian naive Bayes ---------------------------------------------------

def _train_naive_bayes(X, y, n_classes, seed) -> dict:
    means, variances, priors = [], [], []
    n = X.shape[0]
    for c in range(n_classes):
        rows = X[y == c]
        if rows.size == 0:
            means.append(np.zeros(X.shape[1]).tolist())
            variances.append(np.full(X.shape[1], NB_VAR_FLOOR).tolist())
            priors.append(0.0)
            continue
        means.append(rows.mean(axis=0).tolist())
        variances.append(
            np.maximum(rows.var(axis=0), NB_VAR_FLOOR).tolist()
        )
        priors.append(rows.shape[0] / n)
    return {"means": means, "variances": variances, "priors": priors}


def _proba_naive_bayes(params, X, n_classes) -> np.ndarray:
    means = np.asarray(params["means"])
    variances = np.asarray(params["variances"])
    priors = np.asarray(params["priors"])
    log_post = np.full((X.shape[0], n_classes), -np.inf)
    for c in range(n_classes):
        if priors[c] <= 0:
            continue
        diff = X - means[c]
        ll = -0.5 * (np.log(2 * np.pi * variances[c])
                     + diff * diff / variances[c]).sum(axis=1)
        log_post[:, c] = ll + np.log(priors[c])
    return _softmax(log_post)


# --- multinomial logistic regression ----------------------------------------

def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _train_logistic(X, y, n_classes, seed) -> dict:
    n, d = X.shape
    W = np.zeros((n_classes, d))
    b = np.zeros(n_classes)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0

    def loss_grad(W, b):
        probs = _softmax(X @ W.T + b)
        err = probs - onehot
        gW = err.T @ X / n + LOGISTIC_L2 * W
        gb = err.mean(axis=0)
        nll = -np.log(np.maximum(probs[np.arange(n), y], 1e-300)).mean()
        return nll + 0.5 * LOGISTIC_L2 * (W * W).sum(), gW, gb

    step = 1.0
    loss, gW, gb = loss_grad(W, b)
    for _ in range(LOGISTIC_MAX_ITER):
        gnorm = np.sqrt((gW * gW).sum() + (gb * gb).sum())
        if gnorm < LOGISTIC_TOL:
            break
        W_new, b_new = W - step * gW, b - step * gb
        loss_new, gW_new, gb_new = loss_grad(W_new, b_new)
        if loss_new <= loss:
            W, b, loss, gW, gb = W_new, b_new, loss_new, gW_new, gb_new
            step *= 1.1
        else:
            step *= 0.5
            if step < 1e-12:
                break
    return {"weights": W.tolist(), "bias": b.tolist()}


def _proba_logistic(params, X, n_classes) -> np.ndarray:
    W = np.asarray(params["weights"])
    b = np.asarray(params["bias"])
    return _softmax(X @ W.T + b)


# --- one-vs-rest linear SVM --------------------------------------------------

def _train_svm(X, y, n_classes, seed) -> dict:
    n, d = X.shape
    lam = 1.0 / (SVM_C * n)
    W = np.zeros((n_classes, d))
    b = np.zeros(n_classes)
    for c in range(n_classes):
        target = np.where(y == c, 1.0, -1.0)
        w = np.zeros(d)
        bias = 0.0
        for t in range(1, SVM_EPOCHS + 1):
            margins = target * (X @ w + bias)
            active = margins < 1.0
            step = 1.0 / (lam * t)
            grad_w = lam * w - (target[active, None] * X[active]).sum(axis=0) / n
            grad_b = -target[active].sum() / n
            w = w - step * grad_w
            bias = bias - step * grad_b
        W[c] = w
        b[c] = bias
    return {"weights": W.tolist(), "bias": b.tolist()}


def _proba_svm(params, X, n_classes) -> np.ndarray:
    W = np.asarray(params["weights"])
    b = np.asarray(params["bias"])
    return _softmax(X @ W.T + b)  # softmax over margins, temperature 1


# --- single-hidden-layer MLP --------------------------------------------------

def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def _train_mlp(X, y, n_classes, seed) -> dict:
    n, d = X.shape
    hidden = max((d + n_classes) // 2, 2)
    rng = np.random.default_rng(seed)
    W1 = rng.uniform(-0.5, 0.5, size=(d, hidden))
    b1 = rng.uniform(-0.5, 0.5, size=hidden)
    W2 = rng.uniform(-0.5, 0.5, size=(hidden, n_classes))
    b2 = rng.uniform(-0.5, 0.5, size=n_classes)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    vW1 = np.zeros_like(W1)
    vb1 = np.zeros_like(b1)
    vW2 = np.zeros_like(W2)
    vb2 = np.zeros_like(b2)

    for _ in range(MLP_EPOCHS):
        h = _sigmoid(X @ W1 + b1)
        probs = _softmax(h @ W2 + b2)
        err = (probs - onehot) / n
        gW2 = h.T @ err
        gb2 = err.sum(axis=0)
        back = (err @ W2.T) * h * (1.0 - h)
        gW1 = X.T @ back
        gb1 = back.sum(axis=0)
        vW1 = MLP_MOMENTUM * vW1 - MLP_LEARNING_RATE * gW1
        vb1 = MLP_MOMENTUM * vb1 - MLP_LEARNING_RATE * gb1
        vW2 = MLP_MOMENTUM * vW2 - MLP_LEARNING_RATE * gW2
        vb2 = MLP_MOMENTUM * vb2 - MLP_LEARNING_RATE * gb2
        W1 += vW1
        b1 += vb1
        W2 += vW2
        b2 += vb2
    return {
        "w_hidden": W1.tolist(), "b_hidden": b1.tolist(),
        "w_out": W2.tolist(), "b_out": b2.tolist(),
    }


def _proba_mlp(params, X, n_classes) -> np.ndarray:
    W1 = np.asarray(params["w_hidden"])
    b1 = np.asarray(params["b_hidden"])
    W2 = np.asarray(params["w_out"])
    b2 = np.asarray(params["b_out"])
    h = _sigmoid(X @ W1 + b1)
    return _softmax(h @ W2 + b2)
