"""Serial-chain kinematics and joint-space dynamics.

A chain is an ordered list of revolute joints, each with a fixed transform
from its parent frame, a local rotation axis, and the rigid-body parameters
of the link that follows it. Forward kinematics report the tooltip frame
(after a fixed mount transform). The mass matrix comes from the composite
rigid body algorithm, the velocity/gravity bias from a recursive
Newton-Euler sweep, both in 6D spatial-vector form with link coordinates.

Every public method broadcasts over leading batch dimensions of ``q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularityError

GRAVITY = np.array([0.0, 0.0, -9.81])


def _skew(v):
    """Cross-product matrix, batched over leading dims of v (..., 3)."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def _axis_rotation(axis, angle):
    """Rodrigues rotation about a fixed unit axis; angle batched (...,)."""
    angle = np.asarray(angle, dtype=float)
    K = _skew(axis)
    s = np.sin(angle)[..., None, None]
    c = np.cos(angle)[..., None, None]
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


def rpy_rotation(rpy):
    """Fixed-axis roll-pitch-yaw rotation: Rz(yaw) Ry(pitch) Rx(roll)."""
    r, p, y = rpy
    cr, sr = np.cos(r), np.sin(r)
    cp, sp = np.cos(p), np.sin(p)
    cy, sy = np.cos(y), np.sin(y)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


@dataclass(frozen=True)
class Joint:
    """One revolute joint plus the rigid link attached to it.

    ``origin_xyz``/``origin_rpy`` locate the joint frame in the parent frame;
    ``axis`` is the rotation axis in the joint frame; ``com`` and ``inertia``
    describe the link mass distribution about its center of mass, expressed
    in the joint frame.
    """

    axis: np.ndarray
    origin_xyz: np.ndarray
    origin_rpy: np.ndarray
    mass: float
    com: np.ndarray
    inertia: np.ndarray
    lower: float
    upper: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-10:
            raise DomainError("joint axis must be a unit vector")
        inertia = np.asarray(self.inertia, dtype=float)
        if inertia.shape != (3, 3) or not np.allclose(inertia, inertia.T, atol=1e-12):
            raise DomainError("link inertia must be a symmetric 3x3 matrix")
        if np.any(np.linalg.eigvalsh(inertia) <= 0.0):
            raise DomainError("link inertia must be positive definite")
        if self.mass <= 0.0:
            raise DomainError("link mass must be positive")
        if not self.lower < self.upper:
            raise DomainError("joint limits must satisfy lower < upper")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "origin_xyz", np.asarray(self.origin_xyz, dtype=float))
        object.__setattr__(self, "origin_rpy", np.asarray(self.origin_rpy, dtype=float))
        object.__setattr__(self, "com", np.asarray(self.com, dtype=float))
        object.__setattr__(self, "inertia", inertia)


@dataclass(frozen=True)
class KinematicChain:
    """Serial chain of revolute joints with a fixed tooltip mount transform."""

    joints: tuple
    tool_xyz: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tool_rpy: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gravity: np.ndarray = field(default_factory=lambda: GRAVITY.copy())

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "tool_xyz", np.asarray(self.tool_xyz, dtype=float))
        object.__setattr__(self, "tool_rpy", np.asarray(self.tool_rpy, dtype=float))
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float))
        # fixed parent->joint rotations and the per-link 6x6 spatial inertias
        # are configuration independent; precompute once
        object.__setattr__(self, "_fixed_rot", tuple(rpy_rotation(j.origin_rpy) for j in self.joints))
        inertias = []
        for j in self.joints:
            c = _skew(j.com)
            top = j.inertia + j.mass * (c @ c.T)
            I6 = np.zeros((6, 6))
            I6[:3, :3] = top
            I6[:3, 3:] = j.mass * c
            I6[3:, :3] = j.mass * c.T
            I6[3:, 3:] = j.mass * np.eye(3)
            inertias.append(I6)
        object.__setattr__(self, "_spatial_inertia", tuple(inertias))
        object.__setattr__(self, "_tool_rot", rpy_rotation(self.tool_rpy))

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def lower_limits(self) -> np.ndarray:
        return np.array([j.lower for j in self.joints])

    @property
    def upper_limits(self) -> np.ndarray:
        return np.array([j.upper for j in self.joints])

    # -- kinematics ---------------------------------------------------------

    def _q(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape[-1] != self.dof:
            raise DomainError(f"expected {self.dof} joint angles, got shape {q.shape}")
        return q

    def joint_frames(self, q):
        """World rotation and origin of every joint frame plus the tooltip.

        Returns (rotations, origins): lists of length dof+1; entry k < dof is
        the frame of joint k after its rotation, entry dof is the tooltip.
        """
        q = self._q(q)
        batch = q.shape[:-1]
        R = np.broadcast_to(np.eye(3), batch + (3, 3)).copy()
        p = np.zeros(batch + (3,))
        rotations, origins = [], []
        for k, joint in enumerate(self.joints):
            p = p + R @ joint.origin_xyz
            R = R @ self._fixed_rot[k] @ _axis_rotation(joint.axis, q[..., k])
            rotations.append(R)
            origins.append(p)
        p = p + R @ self.tool_xyz
        R = R @ self._tool_rot
        rotations.append(R)
        origins.append(p)
        return rotations, origins

    def fk(self, q):
        """Tooltip pose: (position (..., 3), rotation (..., 3, 3))."""
        rotations, origins = self.joint_frames(q)
        return origins[-1], rotations[-1]

    def jacobian(self, q):
        """Geometric tooltip Jacobian (..., 6, dof), linear rows on top."""
        q = self._q(q)
        rotations, origins = self.joint_frames(q)
        tip = origins[-1]
        J = np.zeros(q.shape[:-1] + (6, self.dof))
        for k, joint in enumerate(self.joints):
            z = rotations[k] @ joint.axis
            J[..., :3, k] = np.cross(z, tip - origins[k])
            J[..., 3:, k] = z
        return J

    # -- spatial-algebra helpers --------------------------------------------

    def _link_transforms(self, q):
        """Per-joint 6x6 motion transforms from parent link frame to link frame."""
        q = self._q(q)
        batch = q.shape[:-1]
        out = []
        for k, joint in enumerate(self.joints):
            E = np.swapaxes(self._fixed_rot[k] @ _axis_rotation(joint.axis, q[..., k]), -1, -2)
            X = np.zeros(batch + (6, 6))
            X[..., :3, :3] = E
            X[..., 3:, 3:] = E
            X[..., 3:, :3] = -E @ _skew(joint.origin_xyz)
            out.append(X)
        return out

    def mass_matrix(self, q):
        """Joint-space mass matrix by the composite rigid body algorithm."""
        q = self._q(q)
        batch = q.shape[:-1]
        n = self.dof
        X = self._link_transforms(q)
        Ic = [np.broadcast_to(self._spatial_inertia[k], batch + (6, 6)).copy() for k in range(n)]
        M = np.zeros(batch + (n, n))
        S = [np.concatenate([j.axis, np.zeros(3)]) for j in self.joints]
        for i in range(n - 1, -1, -1):
            if i > 0:
                Ic[i - 1] = Ic[i - 1] + np.swapaxes(X[i], -1, -2) @ Ic[i] @ X[i]
            F = Ic[i] @ S[i]
            M[..., i, i] = F @ S[i]
            Fj = F
            for j in range(i, 0, -1):
                Fj = np.einsum("...ji,...j->...i", X[j], Fj)
                M[..., i, j - 1] = Fj @ S[j - 1]
                M[..., j - 1, i] = M[..., i, j - 1]
        return M

    def inverse_dynamics(self, q, qdot, qddot):
        """Joint torques for a prescribed motion (recursive Newton-Euler).

        Gravity is included; no external tip wrench (that term enters the
        forward dynamics separately through the Jacobian transpose).
        """
        q = self._q(q)
        qdot = np.broadcast_to(np.asarray(qdot, dtype=float), q.shape)
        qddot = np.broadcast_to(np.asarray(qddot, dtype=float), q.shape)
        batch = q.shape[:-1]
        n = self.dof
        X = self._link_transforms(q)
        S = [np.concatenate([j.axis, np.zeros(3)]) for j in self.joints]

        v = []
        a = []
        f = []
        a_prev = np.zeros(batch + (6,))
        a_prev[..., 3:] = -self.gravity
        v_prev = np.zeros(batch + (6,))
        for i in range(n):
            vi = np.einsum("...ij,...j->...i", X[i], v_prev) + S[i] * qdot[..., i : i + 1]
            ai = (np.einsum("...ij,...j->...i", X[i], a_prev)
                  + S[i] * qddot[..., i : i + 1]
                  + _motion_cross(vi, S[i] * qdot[..., i : i + 1]))
            Ii = self._spatial_inertia[i]
            fi = np.einsum("ij,...j->...i", Ii, ai) + _force_cross(vi, np.einsum("ij,...j->...i", Ii, vi))
            v.append(vi)
            a.append(ai)
            f.append(fi)
            v_prev, a_prev = vi, ai

        tau = np.zeros(batch + (n,))
        for i in range(n - 1, -1, -1):
            tau[..., i] = f[i] @ S[i]
            if i > 0:
                f[i - 1] = f[i - 1] + np.einsum("...ji,...j->...i", X[i], f[i])
        return tau

    def bias(self, q, qdot):
        """Velocity and gravity bias C(q, qdot) qdot + G(q)."""
        return self.inverse_dynamics(q, qdot, np.zeros_like(np.asarray(qdot, dtype=float)))

    def gravity_torque(self, q):
        """Gravity torque G(q)."""
        z = np.zeros_like(self._q(q))
        return self.inverse_dynamics(q, z, z)

    def coriolis_matrix(self, q, qdot, step: float = 1e-6):
        """Coriolis matrix from Christoffel symbols of a finite-differenced M(q).

        Built so that (M_dot - 2 C) is skew-symmetric by construction; used
        for structural checks, not in the forward dynamics hot path.
        """
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        n = self.dof
        probes = np.concatenate([q + step * np.eye(n), q - step * np.eye(n)], axis=0)
        Ms = self.mass_matrix(probes)
        dM = (Ms[:n] - Ms[n:]) / (2.0 * step)  # dM[k] = dM/dq_k
        C = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                C[i, j] = 0.5 * np.sum(
                    (dM[:, i, j] + dM[j, i, :] - dM[i, :, j]) * qdot
                )
        return C

    def mass_matrix_rate(self, q, qdot, step: float = 1e-6):
        """Time derivative of M(q) along qdot, by the same finite differences."""
        q = np.asarray(q, dtype=float)
        n = self.dof
        probes = np.concatenate([q + step * np.eye(n), q - step * np.eye(n)], axis=0)
        Ms = self.mass_matrix(probes)
        dM = (Ms[:n] - Ms[n:]) / (2.0 * step)
        return np.einsum("kij,k->ij", dM, np.asarray(qdot, dtype=float))

    # -- forward dynamics ----------------------------------------------------

    def accel(self, q, qdot, tau, wrench, check_conditioning: bool | None = None):
        """Joint accelerations under applied torques and a tooltip wrench.

        qddot = M(q)^-1 (tau - bias(q, qdot) - J^T wrench), with the wrench
        stacked [force(3), torque(3)] at the tooltip.
        """
        q = self._q(q)
        M = self.mass_matrix(q)
        if check_conditioning is None:
            check_conditioning = q.ndim == 1
        if check_conditioning:
            if np.linalg.cond(M) > 1e12:
                raise SingularityError("mass matrix is numerically singular")
        rhs = (np.asarray(tau, dtype=float)
               - self.bias(q, qdot)
               - np.einsum("...ji,...j->...i", self.jacobian(q), np.asarray(wrench, dtype=float)))
        return np.linalg.solve(M, rhs[..., None])[..., 0]


def _motion_cross(v, m):
    """Spatial motion cross product v x m for [angular; linear] vectors."""
    w, vl = v[..., :3], v[..., 3:]
    mw, mv = m[..., :3], m[..., 3:]
    return np.concatenate([np.cross(w, mw), np.cross(w, mv) + np.cross(vl, mw)], axis=-1)


def _force_cross(v, f):
    """Spatial force cross product v x* f."""
    w, vl = v[..., :3], v[..., 3:]
    n, fl = f[..., :3], f[..., 3:]
    return np.concatenate([np.cross(w, n) + np.cross(vl, fl), np.cross(w, fl)], axis=-1)


def manipulator_accel(q, qdot, tau, wrench, chain: KinematicChain):
    """Functional wrapper over :meth:`KinematicChain.accel`."""
    return chain.accel(q, qdot, tau, wrench)


def forward_kinematics(q, chain: KinematicChain):
    """Tooltip pose (position, rotation) in the world frame."""
    return chain.fk(q)


def jacobian(q, chain: KinematicChain):
    """Geometric tooltip Jacobian, linear rows on top."""
    return chain.jacobian(q)


def ik_position(chain: KinematicChain, target, q0, iters: int = 200,
                damping: float = 1e-4, tol: float = 1e-10):
    """Damped least-squares inverse kinematics for the tooltip position.

    Iterates q += J_v^T (J_v J_v^T + damping I)^-1 e toward ``target`` from
    the seed ``q0``, clamping to the joint limits. Returns (q, error_norm).
    """
    q = np.asarray(q0, dtype=float).copy()
    target = np.asarray(target, dtype=float)
    err = np.inf
    for _ in range(iters):
        p, _ = chain.fk(q)
        e = target - p
        err = np.linalg.norm(e)
        if err < tol:
            break
        Jv = chain.jacobian(q)[:3]
        dq = Jv.T @ np.linalg.solve(Jv @ Jv.T + damping * np.eye(3), e)
        q = np.clip(q + dq, chain.lower_limits, chain.upper_limits)
    return q, err


def default_chain() -> KinematicChain:
    """A 7-DoF example chain with iiwa-class geometry and limits.

    Axes alternate z/y along a mostly vertical stack; link masses and
    inertias are representative, not a calibration of any specific unit.
    """
    z = np.array([0.0, 0.0, 1.0])
    y = np.array([0.0, 1.0, 0.0])
    zero3 = np.zeros(3)

    def link(axis, dz, mass, com_z, inertia_diag, lim):
        return Joint(
            axis=axis,
            origin_xyz=np.array([0.0, 0.0, dz]),
            origin_rpy=zero3,
            mass=mass,
            com=np.array([0.0, 0.03, com_z]),
            inertia=np.diag(inertia_diag),
            lower=-lim,
            upper=lim,
        )

    joints = (
        link(z, 0.1575, 4.0, 0.12, [0.030, 0.030, 0.010], 2.96),
        link(y, 0.2025, 4.0, 0.10, [0.028, 0.028, 0.010], 2.09),
        link(z, 0.2045, 3.0, 0.11, [0.022, 0.022, 0.008], 2.96),
        link(y, 0.2155, 2.7, 0.09, [0.018, 0.018, 0.007], 2.09),
        link(z, 0.1845, 1.7, 0.10, [0.012, 0.012, 0.005], 2.96),
        link(y, 0.2155, 1.8, 0.06, [0.009, 0.009, 0.004], 2.09),
        link(z, 0.0810, 0.3, 0.02, [0.002, 0.002, 0.001], 3.05),
    )
    return KinematicChain(joints=joints, tool_xyz=np.array([0.0, 0.0, 0.145]))
