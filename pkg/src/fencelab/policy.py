"""Diagonal-Gaussian stochastic policy over a dense mean network.

The mean comes from an MLP; the log standard deviation is a free
state-independent vector. Action layout matches the environment command:
three translation components then three rotation-vector components.
"""

from __future__ import annotations

import math

import numpy as np

from .game import ACTION_DIM, OBS_DIM
from .nets import Mlp

LOG_2PI = math.log(2.0 * math.pi)
DEFAULT_HIDDEN = (64, 64)
DEFAULT_LOG_STD = -0.7


class GaussianPolicy:
    def __init__(
        self,
        obs_dim: int = OBS_DIM,
        action_dim: int = ACTION_DIM,
        hidden: tuple[int, ...] = DEFAULT_HIDDEN,
        log_std_init: float = DEFAULT_LOG_STD,
        rng: np.random.Generator | None = None,
    ):
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        # small final gain keeps early actions near zero mean
        self.mean_net = Mlp([obs_dim, *hidden, action_dim], rng=rng, final_gain=0.01)
        self.log_std = np.full(action_dim, float(log_std_init))

    def mean(self, obs: np.ndarray) -> np.ndarray:
        return self.mean_net.forward(obs)

    def sample(
        self, obs: np.ndarray, rng: np.random.Generator, deterministic: bool = False
    ) -> tuple[np.ndarray, float]:
        """Draw one action for a single observation; returns (action, log_prob)."""
        mean = self.mean_net.forward1(obs)
        if deterministic:
            z = np.zeros(self.action_dim)
            action = mean
        else:
            z = rng.standard_normal(self.action_dim)
            action = mean + np.exp(self.log_std) * z
        log_prob = -0.5 * float(np.sum(z * z + 2.0 * self.log_std + LOG_2PI))
        return action, log_prob

    def log_prob(self, obs: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Per-sample log density of ``actions`` under the current policy."""
        mean = self.mean_net.forward(obs)
        return self.log_prob_given_mean(mean, actions)

    def log_prob_given_mean(self, mean: np.ndarray, actions: np.ndarray) -> np.ndarray:
        std = np.exp(self.log_std)
        z = (actions - mean) / std
        return -0.5 * np.sum(z * z + 2.0 * self.log_std + LOG_2PI, axis=1)

    def entropy(self) -> float:
        """Differential entropy; depends only on log_std for a fixed-covariance Gaussian."""
        return float(np.sum(self.log_std + 0.5 * (LOG_2PI + 1.0)))

    def param_arrays(self) -> list[np.ndarray]:
        return self.mean_net.param_arrays() + [self.log_std]

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

    def copy(self) -> "GaussianPolicy":
        p = GaussianPolicy(self.obs_dim, self.action_dim,
                           tuple(self.mean_net.sizes[1:-1]))
        p.mean_net = self.mean_net.copy()
        p.log_std = self.log_std.copy()
        return p

    def check_finite(self) -> None:
        self.mean_net.check_finite()
        if not np.all(np.isfinite(self.log_std)):
            raise ValueError("non-finite log_std")


def make_value_net(obs_dim: int = OBS_DIM, hidden: tuple[int, ...] = DEFAULT_HIDDEN,
                   rng: np.random.Generator | None = None) -> Mlp:
    return Mlp([obs_dim, *hidden, 1], rng=rng, final_gain=1.0)


# ---------------------------------------------------------------------------
# JSON forms (row-major flat arrays, shapes validated on load)

def mlp_to_json(net: Mlp) -> dict:
    return {
        "sizes": list(net.sizes),
        "weights": [w.ravel().tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def mlp_from_json(d: dict) -> Mlp:
    sizes = [int(s) for s in d["sizes"]]
    net = Mlp(sizes)
    if len(d["weights"]) != net.n_layers or len(d["biases"]) != net.n_layers:
        raise ValueError("layer count mismatch in serialized network")
    for i in range(net.n_layers):
        rows, cols = sizes[i + 1], sizes[i]
        w = np.asarray(d["weights"][i], dtype=np.float64)
        b = np.asarray(d["biases"][i], dtype=np.float64)
        if w.size != rows * cols:
            raise ValueError(
                f"layer {i}: expected {rows * cols} weights, got {w.size}"
            )
        if b.size != rows:
            raise ValueError(f"layer {i}: expected {rows} biases, got {b.size}")
        net.weights[i] = w.reshape(rows, cols)
        net.biases[i] = b
    net.check_finite()
    return net


def policy_to_json(policy: GaussianPolicy) -> dict:
    out = mlp_to_json(policy.mean_net)
    out["log_std"] = policy.log_std.tolist()
    return out


def policy_from_json(d: dict) -> GaussianPolicy:
    net = mlp_from_json(d)
    sizes = net.sizes
    policy = GaussianPolicy(sizes[0], sizes[-1], tuple(sizes[1:-1]))
    policy.mean_net = net
    log_std = np.asarray(d["log_std"], dtype=np.float64)
    if log_std.shape != (sizes[-1],):
        raise ValueError(f"log_std length {log_std.size} != action dim {sizes[-1]}")
    if not np.all(np.isfinite(log_std)):
        raise ValueError("non-finite log_std")
    policy.log_std = log_std
    return policy
