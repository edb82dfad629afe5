"""Small differentiable predictors with explicit forward/backward passes.

Parameters live in a single flat float64 vector per model so the training
loop can treat SGD generically. forward/backward accept a single feature
vector or a (batch, d_in) matrix; backward is linear in the upstream
gradient and returns the parameter gradient summed over the batch.
"""

from __future__ import annotations

import numpy as np


def _as_batch(x, d_in: int):
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != d_in:
        raise ValueError(f"expected features of dimension {d_in}, got shape {arr.shape}")
    return arr, single


def _init_uniform(rng, fan_in: int, size: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=size)


class LinearSoftmax:
    """Linear logits over C classes: logits = x W + b."""

    def __init__(self, d_in: int, n_classes: int, seed: int = 0):
        if d_in < 1 or n_classes < 2:
            raise ValueError("need d_in >= 1 and n_classes >= 2")
        self.d_in = d_in
        self.n_classes = n_classes
        rng = np.random.default_rng(seed)
        self.params = _init_uniform(rng, d_in, d_in * n_classes + n_classes)

    @property
    def n_params(self) -> int:
        return self.d_in * self.n_classes + self.n_classes

    def _views(self):
        d, c = self.d_in, self.n_classes
        return self.params[: d * c].reshape(d, c), self.params[d * c :]

    def forward(self, x):
        X, single = _as_batch(x, self.d_in)
        W, b = self._views()
        logits = X @ W + b
        return logits[0] if single else logits

    def backward(self, x, upstream):
        X, single = _as_batch(x, self.d_in)
        G = np.asarray(upstream, dtype=float)
        if single:
            G = G[None, :]
        if G.shape != (X.shape[0], self.n_classes):
            raise ValueError(f"upstream gradient shape {G.shape} does not match logits")
        gW = X.T @ G
        gb = G.sum(axis=0)
        return np.concatenate([gW.ravel(), gb])


class LinearRegressor:
    """Scalar linear prediction: y = x . w + b."""

    def __init__(self, d_in: int, seed: int = 0):
        if d_in < 1:
            raise ValueError("need d_in >= 1")
        self.d_in = d_in
        rng = np.random.default_rng(seed)
        self.params = _init_uniform(rng, d_in, d_in + 1)

    @property
    def n_params(self) -> int:
        return self.d_in + 1

    def forward(self, x):
        X, single = _as_batch(x, self.d_in)
        pred = X @ self.params[: self.d_in] + self.params[self.d_in]
        return float(pred[0]) if single else pred

    def backward(self, x, upstream):
        X, single = _as_batch(x, self.d_in)
        G = np.asarray(upstream, dtype=float).reshape(-1)
        if G.shape[0] != X.shape[0]:
            raise ValueError("upstream gradient length does not match batch")
        gw = X.T @ G
        gb = G.sum()
        return np.concatenate([gw, [gb]])


class Mlp:
    """Fully connected rectifier network; n_out > 1 yields logits, n_out == 1 a scalar."""

    def __init__(self, d_in: int, hidden, n_out: int, seed: int = 0):
        hidden = tuple(int(h) for h in hidden)
        if d_in < 1 or n_out < 1 or any(h < 1 for h in hidden):
            raise ValueError("all layer widths must be >= 1")
        self.d_in = d_in
        self.hidden = hidden
        self.n_out = n_out
        self.sizes = (d_in, *hidden, n_out)
        rng = np.random.default_rng(seed)
        chunks = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            chunks.append(_init_uniform(rng, fan_in, fan_in * fan_out + fan_out))
        self.params = np.concatenate(chunks)

    @property
    def n_params(self) -> int:
        return sum(i * o + o for i, o in zip(self.sizes[:-1], self.sizes[1:]))

    def _views(self):
        layers = []
        offset = 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            W = self.params[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out)
            offset += fan_in * fan_out
            b = self.params[offset : offset + fan_out]
            offset += fan_out
            layers.append((W, b))
        return layers

    def _forward_cached(self, X):
        layers = self._views()
        acts = [X]  # post-activation input of each layer
        H = X
        for i, (W, b) in enumerate(layers):
            Z = H @ W + b
            H = Z if i == len(layers) - 1 else np.maximum(Z, 0.0)
            acts.append(H)
        return acts

    def forward(self, x):
        X, single = _as_batch(x, self.d_in)
        out = self._forward_cached(X)[-1]
        if self.n_out == 1:
            out = out[:, 0]
            return float(out[0]) if single else out
        return out[0] if single else out

    def backward(self, x, upstream):
        X, single = _as_batch(x, self.d_in)
        G = np.asarray(upstream, dtype=float)
        if self.n_out == 1:
            G = G.reshape(-1, 1)
        elif single:
            G = G[None, :]
        if G.shape != (X.shape[0], self.n_out):
            raise ValueError(f"upstream gradient shape {G.shape} does not match output")
        layers = self._views()
        acts = self._forward_cached(X)
        grads = [None] * len(layers)
        D = G
        for i in range(len(layers) - 1, -1, -1):
            W, _ = layers[i]
            H_in = acts[i]
            grads[i] = (H_in.T @ D, D.sum(axis=0))
            if i > 0:
                D = (D @ W.T) * (acts[i] > 0.0)
        return np.concatenate([np.concatenate([gW.ravel(), gb]) for gW, gb in grads])


def softmax(logits):
    """Row-wise softmax with max subtraction for stability."""
    Z = np.asarray(logits, dtype=float)
    single = Z.ndim == 1
    if single:
        Z = Z[None, :]
    shifted = Z - Z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    P = e / e.sum(axis=1, keepdims=True)
    return P[0] if single else P


class CrossEntropy:
    """Softmax cross-entropy over logits; targets are class indices."""

    def loss_and_grad(self, prediction, target):
        Z = np.asarray(prediction, dtype=float)
        single = Z.ndim == 1
        if single:
            Z = Z[None, :]
        y = np.atleast_1d(np.asarray(target))
        if y.shape[0] != Z.shape[0]:
            raise ValueError("target count does not match prediction count")
        if not np.all(y == y.astype(int)):
            raise ValueError("class targets must be integers")
        y = y.astype(int)
        C = Z.shape[1]
        if np.any(y < 0) or np.any(y >= C):
            raise ValueError(f"class index out of range [0, {C})")
        shifted = Z - Z.max(axis=1, keepdims=True)
        logsumexp = np.log(np.exp(shifted).sum(axis=1))
        rows = np.arange(Z.shape[0])
        losses = logsumexp - shifted[rows, y]
        grad = softmax(Z).copy()
        grad[rows, y] -= 1.0
        if single:
            return float(losses[0]), grad[0]
        return losses, grad


class L2:
    """Squared error (pred - target)^2 on scalar predictions."""

    def loss_and_grad(self, prediction, target):
        pred = np.asarray(prediction, dtype=float)
        t = np.asarray(target, dtype=float)
        e = pred - t
        losses = e**2
        grad = 2.0 * e
        if losses.ndim == 0:
            return float(losses), float(grad)
        return losses, grad


class SmoothL1:
    """Huber-style loss: 0.5 e^2 / beta inside |e| < beta, |e| - 0.5 beta outside."""

    def __init__(self, beta: float = 1.0):
        if beta <= 0:
            raise ValueError("beta must be > 0")
        self.beta = beta

    def loss_and_grad(self, prediction, target):
        pred = np.asarray(prediction, dtype=float)
        t = np.asarray(target, dtype=float)
        e = pred - t
        inside = np.abs(e) < self.beta
        losses = np.where(inside, 0.5 * e**2 / self.beta, np.abs(e) - 0.5 * self.beta)
        grad = np.where(inside, e / self.beta, np.sign(e))
        if losses.ndim == 0:
            return float(losses), float(grad)
        return losses, grad
