"""Plant/controller parameter recovery against a synthetic reference run.

A hidden ground-truth parameter set generates the reference trajectory; the
calibrator then searches the 18-dimensional box (six parameters per axis)
for the vector minimizing the squared trajectory error, using the
evolution-strategy optimizer in a unit-cube reparameterization so every
coordinate starts at a comparable scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cmaes import CmaConfig, cmaes_minimize
from .plant import (
    N_PARAMS,
    PARAM_LABELS,
    ControllerParams,
    PlantParams,
    ReferenceRun,
    excitation_sequence,
    pack_params,
    simulate_plant,
    simulate_plant_population,
    unpack_params,
)

DEFAULT_LOAD = np.array([0.4, -0.3, 0.5])
DEFAULT_TICKS = 900
DEFAULT_DT = 0.01
RESULT_SCHEMA_VERSION = 1


def default_bounds() -> tuple[np.ndarray, np.ndarray]:
    """Search box in pack order (damping, armature, friction, kp, kd, bound)."""
    lo = np.concatenate([
        np.full(3, 0.1),    # damping
        np.full(3, 0.01),   # armature
        np.full(3, 0.05),   # friction_loss
        np.full(3, 5.0),    # kp
        np.full(3, 0.5),    # kd
        np.full(3, 0.3),    # bound
    ])
    hi = np.concatenate([
        np.full(3, 5.0),
        np.full(3, 2.0),
        np.full(3, 2.0),
        np.full(3, 150.0),
        np.full(3, 25.0),
        np.full(3, 5.0),
    ])
    return lo, hi


def hidden_truth(seed: int) -> tuple[PlantParams, ControllerParams]:
    """Seeded ground truth, drawn from the comfortable interior of the box."""
    rng = np.random.default_rng(seed)
    plant = PlantParams(
        damping=rng.uniform(0.6, 2.0, 3),
        armature=rng.uniform(0.15, 0.8, 3),
        friction_loss=rng.uniform(0.2, 0.8, 3),
    )
    controller = ControllerParams(
        kp=rng.uniform(30.0, 70.0, 3),
        kd=rng.uniform(4.0, 10.0, 3),
        bound=rng.uniform(1.0, 2.5, 3),
    )
    return plant, controller


def make_reference(
    seed: int,
    n_ticks: int = DEFAULT_TICKS,
    dt: float = DEFAULT_DT,
    load: np.ndarray = DEFAULT_LOAD,
) -> tuple[ReferenceRun, np.ndarray]:
    """Reference run from a seeded hidden truth; returns (run, truth vector).

    The truth vector is for verification only and is not stored in the run.
    """
    plant, controller = hidden_truth(seed)
    seq = excitation_sequence(n_ticks, seed)
    init_pos = np.zeros(3)
    init_vel = np.zeros(3)
    traj = simulate_plant(plant, controller, seq, dt, init_pos, init_vel, load)
    ref = ReferenceRun(
        control_seq=seq, trajectory=traj, dt=dt,
        init_pos=init_pos, init_vel=init_vel, load=np.asarray(load, dtype=np.float64),
        meta={"generator": "synthetic", "seed": seed},
    )
    return ref, pack_params(plant, controller)


@dataclass(slots=True)
class CalibrationResult:
    plant: PlantParams
    controller: ControllerParams
    x: np.ndarray            # (18,) recovered parameters
    residual: float
    generations: int
    evaluations: int
    history: list[float] = field(default_factory=list)


def calibrate(
    reference: ReferenceRun,
    bounds: tuple[np.ndarray, np.ndarray] | None = None,
    seed: int = 0,
    max_generations: int = 4000,
    target_residual: float = 1e-10,
    sigma0: float = 0.25,
    population: int = 0,
) -> CalibrationResult:
    """Fit all 18 parameters to the reference trajectory.

    The search runs in [0, 1]^18 mapped linearly onto the bounds so the
    optimizer sees comparable scales on every coordinate.
    """
    reference.validate()
    lo, hi = default_bounds() if bounds is None else bounds
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if lo.shape != (N_PARAMS,) or hi.shape != (N_PARAMS,):
        raise ValueError(f"bounds must have length {N_PARAMS}")
    span = hi - lo
    ref_traj = reference.trajectory

    def residuals_batch(zs: np.ndarray) -> np.ndarray:
        xs = lo + zs * span
        sims = simulate_plant_population(
            xs, reference.control_seq, reference.dt,
            reference.init_pos, reference.init_vel, reference.load,
        )
        diff = sims - ref_traj[None, :, :]
        return np.sum(diff * diff, axis=(1, 2))

    config = CmaConfig(
        population=population,
        sigma0=sigma0,
        max_generations=max_generations,
        target_objective=target_residual,
        lower=np.zeros(N_PARAMS),
        upper=np.ones(N_PARAMS),
    )
    result = cmaes_minimize(
        lambda z: float(residuals_batch(z[None, :])[0]),
        np.full(N_PARAMS, 0.5),
        config,
        seed=seed,
        objective_batch=residuals_batch,
    )
    x = lo + result.x_best * span
    plant, controller = unpack_params(x)
    return CalibrationResult(
        plant, controller, x, result.f_best,
        result.generations, result.evaluations, result.history,
    )


def calibration_result_to_json(result: CalibrationResult, seed: int) -> str:
    doc = {
        "kind": "calibration_result",
        "schema_version": RESULT_SCHEMA_VERSION,
        "seed": seed,
        "parameters": {label: float(v) for label, v in zip(PARAM_LABELS, result.x)},
        "residual": result.residual,
        "generations": result.generations,
        "evaluations": result.evaluations,
        "best_history": result.history,
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"
