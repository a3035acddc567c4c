"""Minimal dense networks on numpy float64 with hand-written backprop.

Everything here is deliberately explicit: affine layers stored as (W, b)
pairs, tanh hidden activations, linear output, an Adam optimizer, and flat
parameter views so analytic gradients can be checked against central finite
differences. All arithmetic stays in 64-bit so those checks are clean.
"""

from __future__ import annotations

import numpy as np


def orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float = 1.0) -> np.ndarray:
    """Orthogonal weight init via SVD of a Gaussian draw."""
    a = rng.standard_normal((rows, cols))
    u, _, vt = np.linalg.svd(a, full_matrices=False)
    q = u if u.shape == (rows, cols) else vt
    return gain * q


class Mlp:
    """Fully connected net: alternating affine + tanh, final affine linear.

    Weights are W[i] of shape (out, in); forward maps a (batch, in) array to
    (batch, out).
    """

    def __init__(self, sizes: list[int], rng: np.random.Generator | None = None,
                 final_gain: float = 1.0):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = list(sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        n_layers = len(sizes) - 1
        for i in range(n_layers):
            rows, cols = sizes[i + 1], sizes[i]
            if rng is None:
                w = np.zeros((rows, cols))
            else:
                gain = final_gain if i == n_layers - 1 else np.sqrt(2.0)
                w = orthogonal(rng, rows, cols, gain)
            self.weights.append(w)
            self.biases.append(np.zeros(rows))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.forward_cached(x)
        return out

    def forward1(self, x: np.ndarray) -> np.ndarray:
        """Single-vector forward without caching; the per-tick hot path."""
        h = x
        last = self.n_layers - 1
        for i in range(self.n_layers):
            h = self.weights[i] @ h + self.biases[i]
            if i < last:
                h = np.tanh(h)
        return h

    def forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Returns (output, cache of layer inputs) for use by ``backward``."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.sizes[0]:
            raise ValueError(f"expected input dim {self.sizes[0]}, got {x.shape[1]}")
        cache = [x]
        h = x
        for i in range(self.n_layers):
            z = h @ self.weights[i].T + self.biases[i]
            if i < self.n_layers - 1:
                h = np.tanh(z)
                cache.append(h)
            else:
                h = z
        return h, cache

    def backward(
        self, cache: list[np.ndarray], grad_out: np.ndarray
    ) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """Backprop a (batch, out) output gradient; returns (dW list, db list).

        Gradients are summed over the batch; divide upstream if a mean is
        wanted.
        """
        grads_w = [None] * self.n_layers
        grads_b = [None] * self.n_layers
        g = np.atleast_2d(grad_out)
        for i in range(self.n_layers - 1, -1, -1):
            h_in = cache[i]
            grads_w[i] = g.T @ h_in
            grads_b[i] = g.sum(axis=0)
            if i > 0:
                g = (g @ self.weights[i]) * (1.0 - cache[i] ** 2)
        return grads_w, grads_b

    # --- flat parameter views (finite-difference checks, serialization) ---

    def param_arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.param_arrays()])

    def set_flat(self, flat: np.ndarray) -> None:
        i = 0
        for p in self.param_arrays():
            n = p.size
            p[...] = flat[i : i + n].reshape(p.shape)
            i += n
        if i != flat.size:
            raise ValueError(f"flat vector length {flat.size} != parameter count {i}")

    def copy(self) -> "Mlp":
        m = Mlp(self.sizes)
        m.weights = [w.copy() for w in self.weights]
        m.biases = [b.copy() for b in self.biases]
        return m

    def check_finite(self) -> None:
        for p in self.param_arrays():
            if not np.all(np.isfinite(p)):
                raise ValueError("non-finite network parameter")


class Adam:
    """Adam over an explicit list of parameter arrays, updated in place."""

    def __init__(self, params: list[np.ndarray], lr: float = 3e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError("gradient list length mismatch")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** self.t
        bias2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def global_grad_norm(grads: list[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_grad_norm(grads: list[np.ndarray], max_norm: float) -> float:
    """Scale gradients in place so their global norm is at most max_norm.

    Returns the pre-clip norm.
    """
    norm = global_grad_norm(grads)
    if norm > max_norm and norm > 0.0:
        k = max_norm / norm
        for g in grads:
            g *= k
    return norm
