"""Closed-loop rollouts of a plan and metrics for controller comparison.

Two controller conditions are simulated against the same model:

* position + wrench control: the planned wrench feeds forward and Cartesian
  PD feedback on the tooltip position is added on the force part;
* position control: the feed-forward wrench is dropped, feedback only.

Both conditions stabilize the joint block with the same PD loop around the
planned joint path, standing in for the robot's internal position
controller; the comparison isolates the Cartesian wrench condition. Note
the feedback acts on the desired-minus-current offset (a PSD gain then
pushes back toward the reference).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ddp import TrajectoryPair
from .dynamics import SoftContactSystem, euler_rate_matrix, euler_to_rotation
from .errors import DomainError
from .paths import ReferencePath

_DEFAULT_JOINT_KP = 80.0
_DEFAULT_JOINT_KD = 12.0


@dataclass(frozen=True)
class ControllerGains:
    """Cartesian stiffness/damping on the tool position error, plus the
    internal stabilizers: a joint PD around the planned joint path and an
    attitude PD holding the tool orientation (both inertia-scaled, standing
    in for the robot's own position/impedance loops and identical across
    controller conditions)."""

    stiffness: np.ndarray
    damping: np.ndarray | None = None
    joint_kp: np.ndarray = field(default_factory=lambda: np.full(7, _DEFAULT_JOINT_KP))
    joint_kd: np.ndarray = field(default_factory=lambda: np.full(7, _DEFAULT_JOINT_KD))
    rot_kp: float = 100.0
    rot_kd: float = 20.0

    def __post_init__(self):
        K = np.asarray(self.stiffness, dtype=float)
        if K.shape != (3, 3) or not np.allclose(K, K.T, atol=1e-12):
            raise DomainError("stiffness must be a symmetric 3x3 matrix")
        if np.any(np.linalg.eigvalsh(K) < -1e-12):
            raise DomainError("stiffness must be positive semidefinite")
        D = np.zeros((3, 3)) if self.damping is None else np.asarray(self.damping, dtype=float)
        if D.shape != (3, 3) or np.any(np.linalg.eigvalsh(0.5 * (D + D.T)) < -1e-12):
            raise DomainError("damping must be a PSD 3x3 matrix")
        object.__setattr__(self, "stiffness", K)
        object.__setattr__(self, "damping", D)
        object.__setattr__(self, "joint_kp", np.asarray(self.joint_kp, dtype=float))
        object.__setattr__(self, "joint_kd", np.asarray(self.joint_kd, dtype=float))


@dataclass(frozen=True)
class SimTrace:
    """Simulated closed-loop trace: states (N+1, 29), commands (N, 13)."""

    times: np.ndarray
    states: np.ndarray
    commands: np.ndarray


def _closed_loop(system: SoftContactSystem, plan: TrajectoryPair, reference: ReferencePath,
                 gains: ControllerGains, dt: float, feedforward: bool,
                 x0=None) -> SimTrace:
    N = plan.horizon
    xs = np.empty((N + 1, 29))
    us = np.empty((N, 13))
    xs[0] = plan.states[0] if x0 is None else np.asarray(x0, dtype=float)
    # reference velocity for the damping term, by central differences
    ref_vel = np.gradient(reference.positions, dt, axis=0)
    for i in range(N):
        x = xs[i]
        cmd = np.zeros(13)
        if feedforward:
            cmd[:] = plan.controls[i]
        pos_err = reference.positions[i] - x[14:17]
        vel_err = ref_vel[i] - x[20:23]
        feedback_force = gains.stiffness @ pos_err + gains.damping @ vel_err
        cmd[0:3] += feedback_force
        # attitude stabilizer: the contact reaction torque makes the free
        # tool's rotation unstable, which the hardware impedance mode (not
        # part of the planned wrench) holds; the known lever torques of the
        # sensed contact force and of the feedback force are cancelled and a
        # PD holds the orientation. Same loop in both conditions.
        R = euler_to_rotation(x[17:20])
        rot_err = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
        omega = euler_rate_matrix(x[17:20]) @ x[23:26]
        cmd[3:6] += (system.tool.inertia_diag * (-gains.rot_kp * rot_err
                                                 - gains.rot_kd * omega)
                     - np.cross(R @ system.tool.r_ce, x[26:29])
                     - np.cross(R @ system.tool.r_cb, feedback_force))
        # joint-side internal position loop around the planned joint path;
        # computed-torque scaling keeps the light wrist joints stable
        accel_cmd = (gains.joint_kp * (plan.states[i, 0:7] - x[0:7])
                     + gains.joint_kd * (plan.states[i, 7:14] - x[7:14]))
        cmd[6:13] += system.chain.mass_matrix(x[0:7]) @ accel_cmd
        if not feedforward:
            cmd[6:13] += (system.chain.gravity_torque(x[0:7])
                          + system.chain.jacobian(x[0:7]).T @ cmd[0:6])
        us[i] = cmd
        xs[i + 1] = system.step(x, cmd, dt, reference.curvature_radii[i],
                                reference.tangents[i])
    times = dt * np.arange(N + 1)
    return SimTrace(times=times, states=xs, commands=us)


def rollout_wrench_control(system: SoftContactSystem, plan: TrajectoryPair,
                           reference: ReferencePath, gains: ControllerGains,
                           dt: float, x0=None) -> SimTrace:
    """Simulate the planned wrench plus Cartesian PD feedback."""
    return _closed_loop(system, plan, reference, gains, dt, feedforward=True, x0=x0)


def rollout_position_control(system: SoftContactSystem, plan: TrajectoryPair,
                             reference: ReferencePath, gains: ControllerGains,
                             dt: float, x0=None) -> SimTrace:
    """Baseline: the feed-forward wrench is dropped, feedback only.

    The joint loop adds gravity compensation (the robot's own controller
    holds the arm up); the Cartesian wrench channel carries pure feedback.
    """
    return _closed_loop(system, plan, reference, gains, dt, feedforward=False, x0=x0)


def trace_metrics(trace: SimTrace, reference: ReferencePath, cone=None) -> dict:
    """RMS tracking errors of one trace against the reference."""
    n = min(trace.states.shape[0], reference.positions.shape[0])
    pos_err = trace.states[:n, 14:17] - reference.positions[:n]
    force_err = trace.states[:n, 26:29] - reference.forces[:n]
    out = {
        "rms_pose_err_m": float(np.sqrt(np.mean(np.sum(pos_err**2, axis=1)))),
        "rms_force_err_x_n": float(np.sqrt(np.mean(force_err[:, 0] ** 2))),
        "rms_force_err_y_n": float(np.sqrt(np.mean(force_err[:, 1] ** 2))),
        "rms_force_err_z_n": float(np.sqrt(np.mean(force_err[:, 2] ** 2))),
    }
    out["rms_force_err_n"] = float(np.sqrt(np.mean(np.sum(force_err**2, axis=1))))
    if cone is not None:
        v = trace.states[:n, 20:23]
        fz = trace.states[:n, 26:29] @ cone.normal
        rc = np.broadcast_to(cone.curvature_radii, (trace.states.shape[0],))[:n]
        centripetal = np.where(np.isinf(rc), 0.0,
                               cone.mass * np.einsum("ij,ij->i", v, v)
                               / np.where(np.isinf(rc), 1.0, rc))
        out["max_friction_violation_n"] = float(np.max(np.maximum(
            centripetal - (cone.mu * np.maximum(fz, 0.0) + cone.g_offset), 0.0)))
    else:
        out["max_friction_violation_n"] = 0.0
    return out


def compare_traces(trace_a: SimTrace, trace_b: SimTrace, reference: ReferencePath,
                   cone=None, labels=("a", "b")) -> list:
    """Metric rows for two traces plus their difference (a minus b)."""
    row_a = {"trace": labels[0], **trace_metrics(trace_a, reference, cone)}
    row_b = {"trace": labels[1], **trace_metrics(trace_b, reference, cone)}
    delta = {"trace": f"{labels[0]}-{labels[1]}"}
    for key in row_a:
        if key != "trace":
            delta[key] = row_a[key] - row_b[key]
    return [row_a, row_b, delta]
