"""Covariance matrix adaptation evolution strategy, written out in full.

Standard weighted-recombination form: rank-based parent weights, cumulative
step-size adaptation, and rank-1 plus rank-mu covariance updates. Box
bounds are handled by evaluating the objective at the projection into the
box and adding a quadratic penalty on the violation. The best-ever point is
tracked monotonically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(slots=True)
class CmaConfig:
    population: int = 0        # 0 -> 4 + floor(3 ln n)
    parents: int = 0           # 0 -> population // 2
    sigma0: float = 0.3
    max_generations: int = 500
    target_objective: float | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    penalty_weight: float = 1e6

    def resolved(self, n: int) -> tuple[int, int]:
        lam = self.population if self.population > 0 else 4 + int(3 * math.log(n))
        mu = self.parents if self.parents > 0 else lam // 2
        if lam < 4:
            raise ValueError(f"population must be at least 4, got {lam}")
        if not 1 <= mu < lam:
            raise ValueError(f"parents must be in [1, population), got {mu}")
        if self.sigma0 <= 0.0:
            raise ValueError("sigma0 must be positive")
        return lam, mu

    def validate_bounds(self, n: int) -> None:
        if (self.lower is None) != (self.upper is None):
            raise ValueError("both or neither of lower/upper bounds must be given")
        if self.lower is not None:
            lo = np.asarray(self.lower, dtype=np.float64)
            hi = np.asarray(self.upper, dtype=np.float64)
            if lo.shape != (n,) or hi.shape != (n,):
                raise ValueError("bounds must match the search dimension")
            if np.any(lo >= hi):
                raise ValueError("lower bounds must be strictly below upper bounds")


@dataclass(slots=True)
class CmaResult:
    x_best: np.ndarray
    f_best: float
    generations: int
    evaluations: int
    history: list[float] = field(default_factory=list)  # best-ever per generation


def cmaes_minimize(
    objective,
    x0: np.ndarray,
    config: CmaConfig,
    seed: int | None = None,
    objective_batch=None,
) -> CmaResult:
    """Minimize a black-box function from x0 with initial step config.sigma0.

    ``objective`` maps an (n,) vector to a float. If ``objective_batch`` is
    given it maps an (m, n) matrix to an (m,) vector and is used for whole
    populations (must agree with ``objective``); evaluations inside one
    generation are independent, so batching changes nothing but speed.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    n = x0.size
    lam, mu = config.resolved(n)
    config.validate_bounds(n)
    rng = np.random.default_rng(seed)

    lo = None if config.lower is None else np.asarray(config.lower, dtype=np.float64)
    hi = None if config.upper is None else np.asarray(config.upper, dtype=np.float64)

    def evaluate(xs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Evaluate a population (m, n); returns (ranking fitness with the
        out-of-box penalty, pure objective at the projected points, projected
        points). Ranking drives the search; best-ever tracking uses the pure
        value so the reported optimum re-evaluates exactly."""
        if lo is None:
            proj = xs
            pen = np.zeros(xs.shape[0])
        else:
            proj = np.clip(xs, lo, hi)
            viol = xs - proj
            pen = config.penalty_weight * np.sum(viol * viol, axis=1)
        if objective_batch is not None:
            fs = np.asarray(objective_batch(proj), dtype=np.float64)
        else:
            fs = np.array([float(objective(p)) for p in proj], dtype=np.float64)
        return fs + pen, fs, proj

    _, f0_pure, x0_proj = evaluate(x0[None, :])
    if not np.isfinite(f0_pure[0]):
        raise ValueError(f"objective is not finite at the start point: {f0_pure[0]}")

    # recombination weights and effective parent count
    raw = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mu_eff = 1.0 / np.sum(weights**2)

    # adaptation constants
    cc = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n)
    cs = (mu_eff + 2.0) / (n + mu_eff + 5.0)
    c1 = 2.0 / ((n + 1.3) ** 2 + mu_eff)
    cmu = min(1.0 - c1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) ** 2 + mu_eff))
    damps = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) + cs
    chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))

    mean = x0.copy()
    sigma = float(config.sigma0)
    cov = np.eye(n)
    pc = np.zeros(n)
    ps = np.zeros(n)

    x_best = x0_proj[0].copy()
    f_best = float(f0_pure[0])
    evaluations = 1
    history: list[float] = []

    for gen in range(1, config.max_generations + 1):
        cov = 0.5 * (cov + cov.T)
        eigvals, eigvecs = np.linalg.eigh(cov)
        eigvals = np.maximum(eigvals, 1e-30)
        d = np.sqrt(eigvals)

        z = rng.standard_normal((lam, n))
        y = (z * d) @ eigvecs.T           # rows: B D z
        xs = mean + sigma * y
        fs, pure, proj = evaluate(xs)
        evaluations += lam
        order = np.argsort(fs, kind="stable")

        gen_best = int(np.argmin(pure))
        if pure[gen_best] < f_best:
            f_best = float(pure[gen_best])
            x_best = proj[gen_best].copy()
        history.append(f_best)

        sel = order[:mu]
        y_w = weights @ y[sel]
        mean = mean + sigma * y_w

        # cumulative step-size adaptation in the whitened frame
        c_inv_half_yw = eigvecs @ ((eigvecs.T @ y_w) / d)
        ps = (1.0 - cs) * ps + math.sqrt(cs * (2.0 - cs) * mu_eff) * c_inv_half_yw
        ps_norm = float(np.linalg.norm(ps))
        hsig = ps_norm / math.sqrt(1.0 - (1.0 - cs) ** (2 * gen)) / chi_n < 1.4 + 2.0 / (n + 1.0)
        pc = (1.0 - cc) * pc + (math.sqrt(cc * (2.0 - cc) * mu_eff) * y_w if hsig else 0.0)

        rank1 = np.outer(pc, pc)
        if not hsig:
            rank1 = rank1 + cc * (2.0 - cc) * cov
        rank_mu = (y[sel] * weights[:, None]).T @ y[sel]
        cov = (1.0 - c1 - cmu) * cov + c1 * rank1 + cmu * rank_mu

        sigma *= math.exp((cs / damps) * (ps_norm / chi_n - 1.0))

        if config.target_objective is not None and f_best <= config.target_objective:
            break
        if sigma < 1e-16 or not np.isfinite(sigma):
            break

    return CmaResult(x_best, f_best, len(history), evaluations, history)
