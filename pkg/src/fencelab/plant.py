"""Per-axis point-mass plant with a bounded PD controller, for calibration.

Each Cartesian axis is an independent unit mass plus armature, driven by a
clamped proportional-derivative force toward per-tick commanded offsets,
with linear damping and a tanh-smoothed Coulomb friction loss, integrated
by explicit Euler. A known constant external load per axis can be applied:
without one, scaling all six per-axis parameters by a common factor leaves
trajectories unchanged, so the parameters would only be identifiable up to
that factor. The load is part of the reference run, never of the fit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

FRICTION_EPS = 0.01  # m/s; velocity scale of the smooth Coulomb transition
N_AXES = 3
N_PARAMS = 6 * N_AXES  # damping, armature, friction, kp, kd, bound per axis
REFERENCE_SCHEMA_VERSION = 1


@dataclass(slots=True)
class PlantParams:
    damping: np.ndarray        # (3,) N*s/m
    armature: np.ndarray       # (3,) kg added to the unit mass
    friction_loss: np.ndarray  # (3,) N

    def validate(self) -> None:
        for name in ("damping", "armature", "friction_loss"):
            v = getattr(self, name)
            if np.asarray(v).shape != (N_AXES,):
                raise ValueError(f"{name} must have shape ({N_AXES},)")
            if np.any(np.asarray(v) < 0.0):
                raise ValueError(f"{name} must be non-negative")


@dataclass(slots=True)
class ControllerParams:
    kp: np.ndarray     # (3,) N/m
    kd: np.ndarray     # (3,) N*s/m
    bound: np.ndarray  # (3,) N, force clamp per axis

    def validate(self) -> None:
        for name in ("kp", "kd", "bound"):
            v = np.asarray(getattr(self, name))
            if v.shape != (N_AXES,):
                raise ValueError(f"{name} must have shape ({N_AXES},)")
        if np.any(self.kp < 0.0) or np.any(self.kd < 0.0):
            raise ValueError("kp and kd must be non-negative")
        if np.any(self.bound <= 0.0):
            raise ValueError("bound must be positive")


def pack_params(plant: PlantParams, controller: ControllerParams) -> np.ndarray:
    """Stack into the 18-vector [damping, armature, friction, kp, kd, bound]."""
    return np.concatenate(
        [plant.damping, plant.armature, plant.friction_loss,
         controller.kp, controller.kd, controller.bound]
    ).astype(np.float64)


def unpack_params(x: np.ndarray) -> tuple[PlantParams, ControllerParams]:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (N_PARAMS,):
        raise ValueError(f"parameter vector must have length {N_PARAMS}")
    plant = PlantParams(x[0:3].copy(), x[3:6].copy(), x[6:9].copy())
    controller = ControllerParams(x[9:12].copy(), x[12:15].copy(), x[15:18].copy())
    return plant, controller


PARAM_LABELS = tuple(
    f"{name}_{axis}"
    for name in ("damping", "armature", "friction_loss", "kp", "kd", "bound")
    for axis in "xyz"
)


def simulate_plant(
    plant: PlantParams,
    controller: ControllerParams,
    control_seq: np.ndarray,
    dt: float,
    init_pos: np.ndarray | None = None,
    init_vel: np.ndarray | None = None,
    load: np.ndarray | None = None,
) -> np.ndarray:
    """Integrate the plant; returns positions of shape (T+1, 3) incl. start.

    Per tick: PD force kp*offset - kd*v clamped to +/-bound, minus damping*v
    and friction*tanh(v/eps), plus the constant load, on mass (1+armature);
    explicit Euler (position advances with the pre-update velocity).
    """
    plant.validate()
    controller.validate()
    seq = np.asarray(control_seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[1] != N_AXES:
        raise ValueError("control_seq must be (T, 3)")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    p = np.zeros(N_AXES) if init_pos is None else np.asarray(init_pos, dtype=np.float64).copy()
    v = np.zeros(N_AXES) if init_vel is None else np.asarray(init_vel, dtype=np.float64).copy()
    f_ext = np.zeros(N_AXES) if load is None else np.asarray(load, dtype=np.float64)
    mass = 1.0 + plant.armature
    out = np.empty((seq.shape[0] + 1, N_AXES))
    out[0] = p
    for t in range(seq.shape[0]):
        f_pd = np.clip(controller.kp * seq[t] - controller.kd * v,
                       -controller.bound, controller.bound)
        accel = (
            f_pd - plant.damping * v
            - plant.friction_loss * np.tanh(v / FRICTION_EPS) + f_ext
        ) / mass
        p = p + dt * v
        v = v + dt * accel
        out[t + 1] = p
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
            raise ValueError(f"non-finite plant state at tick {t + 1}")
    return out


def simulate_plant_population(
    xs: np.ndarray,
    control_seq: np.ndarray,
    dt: float,
    init_pos: np.ndarray,
    init_vel: np.ndarray,
    load: np.ndarray,
) -> np.ndarray:
    """Same dynamics as ``simulate_plant`` for m parameter vectors at once.

    xs is (m, 18) in pack_params order; returns (m, T+1, 3). The update uses
    the same expression shapes as the scalar path so results agree bitwise.
    """
    xs = np.asarray(xs, dtype=np.float64)
    m = xs.shape[0]
    damping, armature, friction = xs[:, 0:3], xs[:, 3:6], xs[:, 6:9]
    kp, kd, bound = xs[:, 9:12], xs[:, 12:15], xs[:, 15:18]
    mass = 1.0 + armature
    seq = np.asarray(control_seq, dtype=np.float64)
    p = np.broadcast_to(init_pos, (m, N_AXES)).copy()
    v = np.broadcast_to(init_vel, (m, N_AXES)).copy()
    out = np.empty((m, seq.shape[0] + 1, N_AXES))
    out[:, 0] = p
    for t in range(seq.shape[0]):
        f_pd = np.clip(kp * seq[t] - kd * v, -bound, bound)
        accel = (f_pd - damping * v - friction * np.tanh(v / FRICTION_EPS) + load) / mass
        p = p + dt * v
        v = v + dt * accel
        out[:, t + 1] = p
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite plant state in population simulation")
    return out


# ---------------------------------------------------------------------------
# reference runs

@dataclass(slots=True)
class ReferenceRun:
    control_seq: np.ndarray  # (T, 3) commanded offsets
    trajectory: np.ndarray   # (T+1, 3) reference end-effector positions
    dt: float
    init_pos: np.ndarray
    init_vel: np.ndarray
    load: np.ndarray         # known constant per-axis external force
    meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.control_seq.ndim != 2 or self.control_seq.shape[1] != N_AXES:
            raise ValueError("control_seq must be (T, 3)")
        if self.trajectory.shape != (self.control_seq.shape[0] + 1, N_AXES):
            raise ValueError("trajectory must be (T+1, 3)")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")


def trajectory_error(
    plant: PlantParams, controller: ControllerParams, reference: ReferenceRun
) -> float:
    """Sum of squared per-sample position errors against the reference."""
    reference.validate()
    sim = simulate_plant(
        plant, controller, reference.control_seq, reference.dt,
        reference.init_pos, reference.init_vel, reference.load,
    )
    diff = sim - reference.trajectory
    return float(np.sum(diff * diff))


def reference_to_json(ref: ReferenceRun) -> str:
    doc = {
        "kind": "reference_run",
        "schema_version": REFERENCE_SCHEMA_VERSION,
        "dt": ref.dt,
        "control_seq": ref.control_seq.tolist(),
        "trajectory": ref.trajectory.tolist(),
        "init_pos": ref.init_pos.tolist(),
        "init_vel": ref.init_vel.tolist(),
        "load": ref.load.tolist(),
        "meta": ref.meta,
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def reference_from_json(text: str) -> ReferenceRun:
    doc = json.loads(text)
    if doc.get("kind") != "reference_run":
        raise ValueError(f"not a reference run: kind={doc.get('kind')!r}")
    if doc.get("schema_version") != REFERENCE_SCHEMA_VERSION:
        raise ValueError(
            f"unsupported reference schema: expected {REFERENCE_SCHEMA_VERSION}, "
            f"found {doc.get('schema_version')!r}"
        )
    ref = ReferenceRun(
        control_seq=np.asarray(doc["control_seq"], dtype=np.float64),
        trajectory=np.asarray(doc["trajectory"], dtype=np.float64),
        dt=float(doc["dt"]),
        init_pos=np.asarray(doc["init_pos"], dtype=np.float64),
        init_vel=np.asarray(doc["init_vel"], dtype=np.float64),
        load=np.asarray(doc["load"], dtype=np.float64),
        meta=doc.get("meta", {}),
    )
    ref.validate()
    return ref


def excitation_sequence(n_ticks: int, seed: int) -> np.ndarray:
    """Rich commanded-offset sequence exposing every parameter.

    Three regimes per axis: large square waves that saturate the force bound
    (separates the bound and pins damping there), moderate sinusoids in the
    linear regime (kp/kd), and near-zero coasting with small dither so the
    velocity crosses the friction transition repeatedly.
    """
    if n_ticks < 30:
        raise ValueError("excitation needs at least 30 ticks")
    rng = np.random.default_rng(seed)
    t = np.arange(n_ticks)
    third = n_ticks // 3
    seq = np.zeros((n_ticks, N_AXES))
    freqs = (0.013, 0.017, 0.011)
    for axis in range(N_AXES):
        square = 0.08 * np.sign(np.sin(2.0 * np.pi * (t + 7 * axis) / 80.0))
        sine = 0.012 * np.sin(2.0 * np.pi * freqs[axis] * t + 0.9 * axis)
        dither = 0.004 * rng.standard_normal(n_ticks)
        seq[:third, axis] = square[:third]
        seq[third : 2 * third, axis] = sine[third : 2 * third]
        seq[2 * third :, axis] = dither[2 * third :]
    return seq
