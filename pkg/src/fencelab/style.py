"""Gameplay-style quantification: tournament, eight features, PCA, selection.

Every characterized defender plays a block of games against every
characterized attacker; each game's defender end-effector trajectory is
summarized by eight features (per-axis path length, average velocity /
acceleration / jerk magnitudes, total kinetic energy at unit mass, and a
bounded smoothness score). Per-defender feature means are standardized,
projected onto the top principal components, and the most mutually distant
subset is selected.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .agents import PolicyAgent, play_game
from .game import PROTAGONIST, GameConfig
from .records import GameRecord, GameRecorder
from .selfplay import PolicyLibrary

FEATURE_NAMES = (
    "disp_x", "disp_y", "disp_z", "avg_vel", "avg_acc", "avg_jerk",
    "total_ke", "smoothness",
)
N_FEATURES = len(FEATURE_NAMES)


@dataclass(slots=True)
class TrajectoryLog:
    positions: np.ndarray   # (T, 3) bat center per tick
    velocities: np.ndarray  # (T, 3) logged bat velocity per tick
    dt: float

    def validate(self) -> None:
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise ValueError("positions must be (T, 3)")
        if self.velocities.shape != self.positions.shape:
            raise ValueError("velocities must match positions shape")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.positions.shape[0] < 4:
            raise ValueError(
                f"trajectory too short for third differences: {self.positions.shape[0]} < 4"
            )


@dataclass(slots=True)
class StyleFeatures:
    disp_x: float
    disp_y: float
    disp_z: float
    avg_vel: float
    avg_acc: float
    avg_jerk: float
    total_ke: float
    smoothness: float

    def to_array(self) -> np.ndarray:
        return np.array(
            [self.disp_x, self.disp_y, self.disp_z, self.avg_vel, self.avg_acc,
             self.avg_jerk, self.total_ke, self.smoothness]
        )


def trajectory_from_record(record: GameRecord, role: str = PROTAGONIST) -> TrajectoryLog:
    if role == PROTAGONIST:
        bats = [t.bat_p for t in record.ticks]
    else:
        bats = [t.bat_a for t in record.ticks]
    return TrajectoryLog(
        positions=np.array([b.pose.center for b in bats]),
        velocities=np.array([b.lin_vel for b in bats]),
        dt=record.config.dt,
    )


def featurize_game(traj: TrajectoryLog) -> StyleFeatures:
    """Eight-feature summary from finite differences of the positions."""
    traj.validate()
    p = traj.positions
    dt = traj.dt
    d1 = np.diff(p, axis=0)
    v = d1 / dt
    a = np.diff(v, axis=0) / dt
    jerk = np.diff(a, axis=0) / dt
    disp = np.sum(np.abs(d1), axis=0)
    speed = np.linalg.norm(v, axis=1)
    jerk_sq = np.sum(jerk * jerk, axis=1)
    return StyleFeatures(
        disp_x=float(disp[0]),
        disp_y=float(disp[1]),
        disp_z=float(disp[2]),
        avg_vel=float(np.mean(speed)),
        avg_acc=float(np.mean(np.linalg.norm(a, axis=1))),
        avg_jerk=float(np.mean(np.sqrt(jerk_sq))),
        total_ke=float(np.sum(0.5 * speed * speed * dt)),
        smoothness=float(1.0 / (1.0 + np.mean(jerk_sq))),
    )


# ---------------------------------------------------------------------------
# tournament

@dataclass(slots=True)
class GameSummary:
    protagonist_id: str
    antagonist_id: str
    game_index: int
    seed: int
    final_score: int
    features: np.ndarray  # (8,)

    def to_json(self) -> dict:
        return {
            "protagonist_id": self.protagonist_id,
            "antagonist_id": self.antagonist_id,
            "game_index": self.game_index,
            "seed": self.seed,
            "final_score": self.final_score,
            "features": self.features.tolist(),
        }


@dataclass(slots=True)
class FeatureMatrix:
    protagonist_ids: list[str]
    mean: np.ndarray     # (n, 8) per-defender mean features
    std: np.ndarray      # (n, 8) per-defender feature spread
    games_per_row: int

    def to_json(self) -> dict:
        return {
            "feature_names": list(FEATURE_NAMES),
            "protagonist_ids": self.protagonist_ids,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "games_per_row": self.games_per_row,
        }


def run_tournament(
    library: PolicyLibrary,
    games_per_pair: int,
    seed: int,
    game_config: GameConfig,
) -> tuple[list[GameSummary], FeatureMatrix]:
    """Round-robin of every characterized defender vs every attacker.

    Policies act stochastically (seeded); each defender's style row is the
    mean feature vector over all its games.
    """
    if not library.pairs:
        raise ValueError("library has no characterized pairs")
    if games_per_pair < 1:
        raise ValueError("games_per_pair must be positive")
    rounds = sorted(library.pairs)
    ant_ids = [library.pairs[r][0] for r in rounds]
    pro_ids = [library.pairs[r][1] for r in rounds]
    ss = np.random.SeedSequence(seed)
    seed_rng = np.random.default_rng(ss)

    summaries: list[GameSummary] = []
    rows = []
    stds = []
    for pro_id in pro_ids:
        pro_policy = library.get(pro_id).policy
        feats = []
        for ant_id in ant_ids:
            ant_policy = library.get(ant_id).policy
            for g in range(games_per_pair):
                game_seed = int(seed_rng.integers(2**63))
                recorder = GameRecorder(game_config, game_seed, ant_id, pro_id)
                final = play_game(
                    game_config, PolicyAgent(ant_policy), PolicyAgent(pro_policy),
                    seed=game_seed, recorder=recorder,
                )
                record = recorder.finalize()
                f = featurize_game(trajectory_from_record(record)).to_array()
                feats.append(f)
                summaries.append(
                    GameSummary(pro_id, ant_id, g, game_seed, final.score, f)
                )
        feats = np.stack(feats)
        rows.append(feats.mean(axis=0))
        stds.append(feats.std(axis=0))

    matrix = FeatureMatrix(
        protagonist_ids=pro_ids,
        mean=np.stack(rows),
        std=np.stack(stds),
        games_per_row=len(ant_ids) * games_per_pair,
    )
    return summaries, matrix


# ---------------------------------------------------------------------------
# PCA on standardized features

@dataclass(slots=True)
class PcaModel:
    means: np.ndarray        # (8,)
    stds: np.ndarray         # (8,) standardization scales (zero-variance -> 1)
    components: np.ndarray   # (k, 8), orthonormal rows
    ratios: np.ndarray       # (k,) explained-variance ratios, non-increasing
    all_ratios: np.ndarray   # (8,) full spectrum for reporting

    @property
    def retained(self) -> float:
        return float(np.sum(self.ratios))

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.means) / self.stds

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.standardize(x) @ self.components.T

    def to_json(self) -> dict:
        return {
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "components": self.components.tolist(),
            "explained_variance_ratios": self.ratios.tolist(),
            "all_ratios": self.all_ratios.tolist(),
            "retained": self.retained,
        }


def pca_fit(matrix: np.ndarray, k: int = 3) -> tuple[PcaModel, np.ndarray]:
    """Top-k principal components of the z-scored rows.

    Eigendecomposition of the standardized covariance; rank deficiency just
    shows up as zero ratios. Component signs are canonicalized so the entry
    of largest magnitude in each row is positive.
    """
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    n, d = x.shape
    if n < k + 1:
        raise ValueError(f"need at least {k + 1} rows for {k} components, got {n}")
    means = x.mean(axis=0)
    stds = x.std(axis=0, ddof=1)
    stds = np.where(stds > 0.0, stds, 1.0)
    z = (x - means) / stds
    cov = (z.T @ z) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals = np.clip(eigvals[::-1], 0.0, None)
    eigvecs = eigvecs[:, ::-1]
    total = float(np.sum(eigvals))
    all_ratios = eigvals / total if total > 0.0 else np.zeros(d)
    components = eigvecs[:, :k].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0.0:
            row *= -1.0
    model = PcaModel(
        means=means, stds=stds, components=components,
        ratios=all_ratios[:k].copy(), all_ratios=all_ratios,
    )
    return model, z @ components.T


def select_most_separable(projected: np.ndarray, k: int = 3) -> list[int]:
    """Size-k subset of rows maximizing the minimum pairwise distance.

    Ties broken by larger total pairwise distance, then by lowest index
    order. Exhaustive over all C(n, k) subsets.
    """
    pts = np.asarray(projected, dtype=np.float64)
    n = pts.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    if n < k:
        raise ValueError(f"cannot select {k} of {n} rows")
    if k == 1:
        return [0]
    dmat = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    best = None
    best_key = None
    for combo in itertools.combinations(range(n), k):
        ds = [dmat[i, j] for i, j in itertools.combinations(combo, 2)]
        key = (min(ds), sum(ds))
        if best_key is None or key > best_key:
            best, best_key = combo, key
    return list(best)


# ---------------------------------------------------------------------------
# reporting

def style_report_json(
    matrix: FeatureMatrix, model: PcaModel, projected: np.ndarray, selected: list[int]
) -> str:
    doc = {
        "kind": "style_report",
        "schema_version": 1,
        "feature_matrix": matrix.to_json(),
        "pca": model.to_json(),
        "projected": projected.tolist(),
        "selected_indices": selected,
        "selected_ids": [matrix.protagonist_ids[i] for i in selected],
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def style_report_text(matrix: FeatureMatrix, model: PcaModel, selected: list[int]) -> str:
    """Plain-text table: per-policy mean +/- std for each feature."""
    width = max(len(n) for n in FEATURE_NAMES)
    lines = []
    for i, pid in enumerate(matrix.protagonist_ids):
        mark = " *" if i in selected else ""
        lines.append(f"policy {pid} ({matrix.games_per_row} games){mark}")
        for j, name in enumerate(FEATURE_NAMES):
            lines.append(
                f"  {name:<{width}}  {matrix.mean[i, j]: .6g} +/- {matrix.std[i, j]:.6g}"
            )
    lines.append(
        "pca retained variance (top %d): %.6f" % (len(model.ratios), model.retained)
    )
    lines.append("* = selected as most separable")
    return "\n".join(lines) + "\n"
