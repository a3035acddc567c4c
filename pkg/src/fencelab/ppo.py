"""Clipped-surrogate policy optimization with GAE, backprop by hand.

The loss is -mean(min(rho*A, clip(rho, 1-eps, 1+eps)*A)) + c_v * value MSE
- c_e * entropy, with rho the likelihood ratio against the sampling policy.
Gradients flow through the policy mean network, the state-independent
log_std, and the value network; all are finite-difference checkable through
``ppo_loss``. Updates are functional: the input policy/value are untouched
and fresh optimizer state is used for each update call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import Adam, Mlp, clip_grad_norm
from .policy import GaussianPolicy


@dataclass(slots=True)
class RolloutBatch:
    obs: np.ndarray        # (T, obs_dim)
    actions: np.ndarray    # (T, action_dim)
    log_probs: np.ndarray  # (T,)
    rewards: np.ndarray    # (T,)
    values: np.ndarray     # (T,)
    terminals: np.ndarray  # (T,) bool, True on the last tick of an episode

    def __len__(self) -> int:
        return self.obs.shape[0]

    def validate(self) -> None:
        n = len(self)
        for name in ("actions", "log_probs", "rewards", "values", "terminals"):
            arr = getattr(self, name)
            if arr.shape[0] != n:
                raise ValueError(f"{name} length {arr.shape[0]} != obs length {n}")
        if n == 0:
            raise ValueError("empty rollout batch")


@dataclass(slots=True)
class PpoConfig:
    clip_eps: float = 0.2
    gamma: float = 0.995
    lam: float = 0.95
    lr: float = 3e-4
    epochs: int = 4
    minibatch_size: int = 512
    entropy_coef: float = 0.0
    value_coef: float = 0.5
    max_grad_norm: float = 0.5

    def validate(self) -> None:
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError(f"clip_eps must be in (0, 1), got {self.clip_eps}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must be in [0, 1], got {self.lam}")
        if self.epochs < 1 or self.minibatch_size < 1:
            raise ValueError("epochs and minibatch_size must be positive")


@dataclass(slots=True)
class UpdateStats:
    loss: float
    approx_kl: float
    clip_fraction: float
    entropy: float
    value_loss: float
    surrogate_before: float
    surrogate_after: float
    grad_norm: float


def gae_advantages(
    batch: RolloutBatch, gamma: float, lam: float, bootstrap_value: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimates and value targets.

    delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t, with V after the last
    tick taken from ``bootstrap_value``; A_t accumulates deltas with decay
    gamma * lam, cut at terminals; returns = A + V.
    """
    batch.validate()
    n = len(batch)
    adv = np.empty(n)
    next_value = bootstrap_value
    next_adv = 0.0
    r, v, done = batch.rewards, batch.values, batch.terminals
    for t in range(n - 1, -1, -1):
        live = 0.0 if done[t] else 1.0
        delta = r[t] + gamma * next_value * live - v[t]
        next_adv = delta + gamma * lam * live * next_adv
        adv[t] = next_adv
        next_value = v[t]
    return adv, adv + v


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    return (adv - adv.mean()) / (adv.std() + 1e-8)


def _ratio_terms(
    policy: GaussianPolicy, obs: np.ndarray, actions: np.ndarray, log_probs_old: np.ndarray
):
    mean, cache = policy.mean_net.forward_cached(obs)
    std = np.exp(policy.log_std)
    z = (actions - mean) / std
    logp_new = -0.5 * np.sum(z * z + 2.0 * policy.log_std + np.log(2.0 * np.pi), axis=1)
    rho = np.exp(logp_new - log_probs_old)
    return mean, cache, z, std, logp_new, rho


def surrogate_objective(
    policy: GaussianPolicy,
    obs: np.ndarray,
    actions: np.ndarray,
    log_probs_old: np.ndarray,
    advantages: np.ndarray,
    clip_eps: float,
) -> float:
    """mean(min(rho*A, clip(rho)*A)); the quantity PPO ascends."""
    *_, rho = _ratio_terms(policy, obs, actions, log_probs_old)
    clipped = np.clip(rho, 1.0 - clip_eps, 1.0 + clip_eps)
    return float(np.mean(np.minimum(rho * advantages, clipped * advantages)))


def ppo_loss(
    policy: GaussianPolicy,
    value_net: Mlp,
    batch: RolloutBatch,
    advantages: np.ndarray,
    returns: np.ndarray,
    config: PpoConfig,
) -> float:
    """Scalar loss only; the pure function the gradient check differentiates."""
    loss, *_ = ppo_loss_and_grad(policy, value_net, batch, advantages, returns, config)
    return loss


def ppo_loss_and_grad(
    policy: GaussianPolicy,
    value_net: Mlp,
    batch: RolloutBatch,
    advantages: np.ndarray,
    returns: np.ndarray,
    config: PpoConfig,
) -> tuple[float, list[np.ndarray], list[np.ndarray], dict]:
    """Loss plus analytic gradients.

    Returns (loss, policy gradients in param_arrays order with log_std last,
    value-net gradients, diagnostics dict).
    """
    obs, actions = batch.obs, batch.actions
    n = obs.shape[0]
    eps = config.clip_eps

    mean, cache, z, std, logp_new, rho = _ratio_terms(
        policy, obs, actions, batch.log_probs
    )
    surr1 = rho * advantages
    clipped = np.clip(rho, 1.0 - eps, 1.0 + eps)
    surr2 = clipped * advantages
    surrogate = np.minimum(surr1, surr2)
    entropy = policy.entropy()

    v_pred, v_cache = value_net.forward_cached(obs)
    v_pred = v_pred[:, 0]
    v_err = v_pred - returns
    value_loss = float(np.mean(v_err * v_err))

    loss = -float(np.mean(surrogate)) + config.value_coef * value_loss \
        - config.entropy_coef * entropy
    if not np.isfinite(loss):
        raise ValueError(
            "non-finite loss: "
            f"surrogate={np.mean(surrogate)}, value_loss={value_loss}, "
            f"max|rho|={np.max(np.abs(rho))}, entropy={entropy}"
        )

    # d loss / d logp_new: the min picks surr1 wherever surr1 <= surr2
    active = surr1 <= surr2
    dlogp = np.where(active, -rho * advantages / n, 0.0)
    # chain into the Gaussian: dlogp/dmean = z/std, dlogp/dlog_std = z^2 - 1
    gmean = dlogp[:, None] * (z / std)
    gw, gb = policy.mean_net.backward(cache, gmean)
    glog_std = np.sum(dlogp[:, None] * (z * z - 1.0), axis=0) - config.entropy_coef
    policy_grads = []
    for w, b in zip(gw, gb):
        policy_grads.append(w)
        policy_grads.append(b)
    policy_grads.append(glog_std)

    gv_out = (config.value_coef * 2.0 / n) * v_err[:, None]
    gvw, gvb = value_net.backward(v_cache, gv_out)
    value_grads = []
    for w, b in zip(gvw, gvb):
        value_grads.append(w)
        value_grads.append(b)

    diag = {
        "surrogate": float(np.mean(surrogate)),
        "value_loss": value_loss,
        "entropy": entropy,
        "approx_kl": float(np.mean(rho - 1.0 - np.log(rho))),
        "clip_fraction": float(np.mean(np.abs(rho - 1.0) > eps)),
    }
    return loss, policy_grads, value_grads, diag


def ppo_update(
    policy: GaussianPolicy,
    value_net: Mlp,
    batch: RolloutBatch,
    config: PpoConfig,
    rng: np.random.Generator,
) -> tuple[GaussianPolicy, Mlp, UpdateStats]:
    """Run the configured epochs of minibatch steps; returns new parameters.

    Advantages are computed from the batch with GAE and normalized once over
    the whole batch. The input policy and value net are not modified.
    """
    config.validate()
    batch.validate()
    adv_raw, returns = gae_advantages(batch, config.gamma, config.lam)
    advantages = normalize_advantages(adv_raw)

    new_policy = policy.copy()
    new_value = value_net.copy()
    params = new_policy.param_arrays() + new_value.param_arrays()
    opt = Adam(params, lr=config.lr)

    surr_before = surrogate_objective(
        new_policy, batch.obs, batch.actions, batch.log_probs, advantages, config.clip_eps
    )

    n = len(batch)
    mb = min(config.minibatch_size, n)
    grad_norm = 0.0
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, mb):
            idx = order[start : start + mb]
            sub = RolloutBatch(
                batch.obs[idx], batch.actions[idx], batch.log_probs[idx],
                batch.rewards[idx], batch.values[idx], batch.terminals[idx],
            )
            _, pg, vg, _ = ppo_loss_and_grad(
                new_policy, new_value, sub, advantages[idx], returns[idx], config
            )
            grads = pg + vg
            grad_norm = clip_grad_norm(grads, config.max_grad_norm)
            opt.step(grads)

    # final diagnostics on the full batch
    loss, _, _, diag = ppo_loss_and_grad(
        new_policy, new_value, batch, advantages, returns, config
    )
    surr_after = diag["surrogate"]
    stats = UpdateStats(
        loss=loss,
        approx_kl=diag["approx_kl"],
        clip_fraction=diag["clip_fraction"],
        entropy=diag["entropy"],
        value_loss=diag["value_loss"],
        surrogate_before=surr_before,
        surrogate_after=surr_after,
        grad_norm=grad_norm,
    )
    return new_policy, new_value, stats
