"""Degree-histogram base classifier.

The vertex histogram kernel with node degree as the label,
``k(G1, G2) = sum_d c(G1, d) c(G2, d)``, has the degree histogram as an
explicit finite feature map, so the SVM is trained in the primal: hinge
loss plus an L2 penalty, minimised by stochastic subgradient descent.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .graph import GraphBits, InvalidInputError, pair_endpoints

log = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def _incidence(num_nodes: int) -> np.ndarray:
    ends = pair_endpoints(num_nodes)
    inc = np.zeros((len(ends), num_nodes), dtype=np.float32)
    rows = np.arange(len(ends))
    inc[rows, ends[:, 0]] = 1
    inc[rows, ends[:, 1]] = 1
    return inc


def nodes_from_pairs(n_pairs: int) -> int:
    n = int(round((1 + math.sqrt(1 + 8 * n_pairs)) / 2))
    if n * (n - 1) // 2 != n_pairs:
        raise InvalidInputError(f"{n_pairs} is not a triangular number of node pairs")
    return n


def degree_histograms(bits: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Degree histograms of a ``(m, n_pairs)`` batch; degrees >= dim go to the top bin."""
    bits = np.atleast_2d(bits)
    n = nodes_from_pairs(bits.shape[1])
    dim = n if dim is None else dim
    degrees = (bits.astype(np.float32) @ _incidence(n)).astype(np.int64)
    if degrees.size and degrees.max() >= dim:
        log.warning("degree %d beyond feature dimension %d; clamped to top bin",
                    degrees.max(), dim)
        np.minimum(degrees, dim - 1, out=degrees)
    flat = degrees + dim * np.arange(len(bits))[:, None]
    return np.bincount(flat.ravel(), minlength=len(bits) * dim).reshape(len(bits), dim)


def degree_histogram(g: GraphBits) -> np.ndarray:
    """``c[d]`` = number of nodes of degree ``d``, for ``d`` in ``0..n-1``."""
    return degree_histograms(g.bits[None, :])[0]


def kernel(g1: GraphBits, g2: GraphBits) -> int:
    h1, h2 = degree_histogram(g1), degree_histogram(g2)
    d = min(len(h1), len(h2))  # padding the shorter histogram with zeros adds nothing
    return int(np.dot(h1[:d], h2[:d]))


@dataclass(eq=False)
class LinearModel:
    weights: np.ndarray
    bias: float
    positive_label: int = 1
    negative_label: int = 0
    train_accuracy: float | None = None

    @property
    def feature_dim(self) -> int:
        return len(self.weights)

    def decision_function(self, bits: np.ndarray) -> np.ndarray:
        return degree_histograms(bits, self.feature_dim) @ self.weights + self.bias

    def predict_batch(self, bits: np.ndarray) -> np.ndarray:
        """Label oracle over a batch of bit vectors; a zero score maps to the negative label."""
        score = self.decision_function(bits)
        return np.where(score > 0, self.positive_label, self.negative_label)

    __call__ = predict_batch

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias,
                "labels": [self.negative_label, self.positive_label],
                "feature_dim": self.feature_dim}

    @classmethod
    def from_json(cls, record: dict) -> LinearModel:
        weights = np.asarray(record["weights"], dtype=float)
        if len(weights) != record["feature_dim"]:
            raise InvalidInputError("weights length disagrees with feature_dim")
        neg, pos = record["labels"]
        return cls(weights, float(record["bias"]), int(pos), int(neg))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> LinearModel:
        return cls.from_json(json.loads(Path(path).read_text()))


def predict(model: LinearModel, g: GraphBits) -> int:
    return int(model.predict_batch(g.bits[None, :])[0])


def train(graphs: list[GraphBits], labels, *, epochs: int = 50, learning_rate: float = 0.1,
          regularization: float = 1e-3, batch_size: int = 32, seed: int = 0,
          positive_label: int = 1, negative_label: int = 0) -> LinearModel:
    """Fit a soft-margin linear SVM on degree histograms.

    Features are divided by the feature dimension for conditioning; the
    returned weights act on raw counts.  The bias is not penalised.
    """
    labels = np.asarray(labels)
    if set(np.unique(labels)) - {positive_label, negative_label}:
        raise InvalidInputError("labels must be the positive or negative label")
    if len(np.unique(labels)) < 2:
        raise InvalidInputError("training needs examples of both classes")
    dim = max(g.num_nodes for g in graphs)
    X = np.concatenate([degree_histograms(g.bits[None, :], dim) for g in graphs]) / dim
    y = np.where(labels == positive_label, 1.0, -1.0)
    rng = np.random.default_rng(seed)
    w = np.zeros(dim)
    b = 0.0
    t = 0
    for _ in range(epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), batch_size):
            t += 1
            idx = order[start:start + batch_size]
            eta = learning_rate / (1.0 + learning_rate * regularization * t)
            active = y[idx] * (X[idx] @ w + b) < 1.0
            grad_w = regularization * w - (y[idx, None] * X[idx])[active].sum(0) / len(idx)
            grad_b = -y[idx][active].sum() / len(idx)
            w -= eta * grad_w
            b -= eta * grad_b
    model = LinearModel(w / dim, float(b), positive_label, negative_label)
    bits = np.stack([g.bits for g in graphs]) if len({g.num_nodes for g in graphs}) == 1 else None
    if bits is not None:
        pred = model.predict_batch(bits)
    else:
        pred = np.array([predict(model, g) for g in graphs])
    model.train_accuracy = float(np.mean(pred == labels))
    log.info("trained on %d graphs, accuracy %.4f", len(y), model.train_accuracy)
    return model


def accuracy(model: LinearModel, graphs: list[GraphBits], labels) -> float:
    return float(np.mean([predict(model, g) == y for g, y in zip(graphs, labels)]))
