"""From-scratch multi-class models: k-NN, nearest centroid, and a small MLP.

All three train from (features, given_label) pairs and predict hard class
indices. Numpy is the only numerical dependency; there is no hidden global
state, and every source of randomness is an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LabeledInstance

MODEL_KINDS = ("knn", "centroid", "mlp")


@dataclass(frozen=True)
class ClassifierSpec:
    """Everything needed to train one model, minus the data and the rng."""

    kind: str
    num_classes: int
    knn_k: int = 5
    mlp_hidden: tuple[int, ...] = (28, 28)
    mlp_epochs: int = 50
    mlp_learning_rate: float = 0.01
    mlp_batch_size: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.knn_k < 1:
            raise ValueError(f"knn_k must be >= 1, got {self.knn_k}")
        if not self.mlp_hidden or any(w < 1 for w in self.mlp_hidden):
            raise ValueError(f"mlp_hidden widths must be >= 1, got {self.mlp_hidden}")
        if self.mlp_epochs < 1:
            raise ValueError(f"mlp_epochs must be >= 1, got {self.mlp_epochs}")
        if self.mlp_learning_rate <= 0:
            raise ValueError(
                f"mlp_learning_rate must be > 0, got {self.mlp_learning_rate}"
            )
        if self.mlp_batch_size < 1:
            raise ValueError(f"mlp_batch_size must be >= 1, got {self.mlp_batch_size}")


def features_matrix(instances: list[LabeledInstance]) -> np.ndarray:
    return np.stack([inst.features for inst in instances]).astype(np.float64)


def given_labels(instances: list[LabeledInstance]) -> np.ndarray:
    return np.array([inst.given_label for inst in instances], dtype=np.int64)


def _squared_distances(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clamped at 0 against float error."""
    qq = np.einsum("ij,ij->i", queries, queries)
    pp = np.einsum("ij,ij->i", points, points)
    d2 = qq[:, None] + pp[None, :] - 2.0 * (queries @ points.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


class KnnModel:
    """Exact k-nearest-neighbour voting under Euclidean distance.

    Neighbours are the k smallest by (distance, training index); votes tie on
    the lowest class index. k collapses to the training-set size when the set
    is smaller than requested.
    """

    def __init__(self, spec: ClassifierSpec, X: np.ndarray, y: np.ndarray):
        self.spec = spec
        self.X = X
        self.y = y
        self.k = min(spec.knn_k, len(y))
        self.num_features = X.shape[1]
        self.trained_on_count = len(y)

    def predict_many(self, queries: np.ndarray) -> np.ndarray:
        out = np.empty(len(queries), dtype=np.int64)
        # chunked so the distance matrix stays bounded on large training sets
        chunk = max(1, int(4_000_000 // max(1, len(self.y))))
        for start in range(0, len(queries), chunk):
            block = queries[start : start + chunk]
            d2 = _squared_distances(block, self.X)
            kth = np.partition(d2, self.k - 1, axis=1)[:, self.k - 1]
            for r in range(len(block)):
                cand = np.flatnonzero(d2[r] <= kth[r])
                order = np.argsort(d2[r, cand], kind="stable")
                votes = np.bincount(self.y[cand[order[: self.k]]])
                out[start + r] = votes.argmax()
        return out


class CentroidModel:
    """Nearest-centroid: exact per-class feature means, Euclidean assignment."""

    def __init__(self, spec: ClassifierSpec, X: np.ndarray, y: np.ndarray):
        self.spec = spec
        self.classes = np.unique(y)
        self.means = np.stack([X[y == c].mean(axis=0) for c in self.classes])
        self.num_features = X.shape[1]
        self.trained_on_count = len(y)

    def predict_many(self, queries: np.ndarray) -> np.ndarray:
        d2 = _squared_distances(queries, self.means)
        # argmin breaks distance ties toward the lower class index
        return self.classes[d2.argmin(axis=1)]


class MlpModel:
    """Fully connected net: ReLU hidden layers, softmax output, mean CE loss.

    Trained by minibatch SGD. ``fit`` continues from the current weights, so
    calling it again warm-starts rather than reinitialising. The output layer
    is always ``num_classes`` wide, even when the training data is missing
    some classes.
    """

    def __init__(self, spec: ClassifierSpec, num_features: int, rng):
        self.spec = spec
        self.num_features = num_features
        self.trained_on_count = 0
        dims = [num_features, *spec.mlp_hidden, spec.num_classes]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def _forward(self, X: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        activations = [X]
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            activations.append(np.maximum(activations[-1] @ W + b, 0.0))
        logits = activations[-1] @ self.weights[-1] + self.biases[-1]
        shifted = logits - logits.max(axis=1, keepdims=True)
        exps = np.exp(shifted)
        probs = exps / exps.sum(axis=1, keepdims=True)
        return activations, probs

    def predict_proba(self, queries: np.ndarray) -> np.ndarray:
        return self._forward(queries)[1]

    def predict_many(self, queries: np.ndarray) -> np.ndarray:
        return self.predict_proba(queries).argmax(axis=1)

    def loss_and_grads(
        self, X: np.ndarray, y: np.ndarray
    ) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
        """Mean cross-entropy and its analytic gradients for one batch."""
        activations, probs = self._forward(X)
        n = len(X)
        loss = float(-np.log(probs[np.arange(n), y] + 1e-300).mean())
        delta = probs.copy()
        delta[np.arange(n), y] -= 1.0
        delta /= n
        grads_w: list[np.ndarray] = [np.empty(0)] * len(self.weights)
        grads_b: list[np.ndarray] = [np.empty(0)] * len(self.biases)
        for layer in range(len(self.weights) - 1, -1, -1):
            grads_w[layer] = activations[layer].T @ delta
            grads_b[layer] = delta.sum(axis=0)
            if layer:
                delta = (delta @ self.weights[layer].T) * (activations[layer] > 0.0)
        return loss, grads_w, grads_b

    def fit(self, X: np.ndarray, y: np.ndarray, rng) -> None:
        spec = self.spec
        for _ in range(spec.mlp_epochs):
            order = rng.permutation(len(X))
            for start in range(0, len(X), spec.mlp_batch_size):
                idx = order[start : start + spec.mlp_batch_size]
                _, grads_w, grads_b = self.loss_and_grads(X[idx], y[idx])
                for layer in range(len(self.weights)):
                    self.weights[layer] -= spec.mlp_learning_rate * grads_w[layer]
                    self.biases[layer] -= spec.mlp_learning_rate * grads_b[layer]
        self.trained_on_count += len(y)


ClassifierModel = KnnModel | CentroidModel | MlpModel


def train(spec: ClassifierSpec, instances: list[LabeledInstance], rng) -> ClassifierModel:
    """Train a fresh model of ``spec.kind`` on the given instances."""
    if not instances:
        raise ValueError("training set is empty")
    X = features_matrix(instances)
    y = given_labels(instances)
    if y.min() < 0 or y.max() >= spec.num_classes:
        raise ValueError(
            f"labels outside 0..{spec.num_classes - 1}: range {y.min()}..{y.max()}"
        )
    if spec.kind == "knn":
        return KnnModel(spec, X, y)
    if spec.kind == "centroid":
        return CentroidModel(spec, X, y)
    model = MlpModel(spec, X.shape[1], rng)
    model.fit(X, y, rng)
    return model


def predict(model: ClassifierModel, features: np.ndarray) -> int:
    """Predict one instance; rejects feature vectors of the wrong length."""
    arr = np.asarray(features, dtype=np.float64)
    if arr.shape != (model.num_features,):
        raise ValueError(
            f"expected {model.num_features} features, got shape {arr.shape}"
        )
    return int(model.predict_many(arr[None, :])[0])


def predict_batch(model: ClassifierModel, instances: list[LabeledInstance]) -> list[int]:
    """Predict classes for many instances at once (order preserved)."""
    if not instances:
        return []
    X = features_matrix(instances)
    if X.shape[1] != model.num_features:
        raise ValueError(
            f"expected {model.num_features} features, got {X.shape[1]}"
        )
    return [int(p) for p in model.predict_many(X)]


def evaluate_accuracy(model: ClassifierModel, test: list[LabeledInstance]) -> float:
    """Fraction of test instances whose prediction equals the *true* label."""
    if not test:
        raise ValueError("test set is empty")
    preds = predict_batch(model, test)
    hits = sum(1 for p, inst in zip(preds, test) if p == inst.true_label)
    return hits / len(test)
