"""Rigid application-tool dynamics and the assembled 29-state contact system.

The full optimization state stacks the manipulator joint block, the tool
pose block and the contact force:

    x = [q(7), q_dot(7), pose(6), pose_rate(6), F_e(3)]      (29,)
    u = [wrench(6), joint_torques(7)]                        (13,)

with pose = (x, y, z, yaw, pitch, roll) of the tooltip in the world frame and
ZYX Euler angles. The joint block and the tool block share only the control:
consistency between FK(q) and the tool pose is encouraged through the cost,
never enforced kinematically.

Sign conventions follow the contact model: the stored contact force has a
non-negative component along the surface normal while in contact, it enters
the tool's linear dynamics with a minus sign, and the indentation rate is
d_dot = N . pose_rate[:3]. These are one self-consistent set; in the normal
direction the contact then acts as a restoring spring.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import KinematicChain
from .contact import ContactGeometry, MaterialParams, DEFAULT_FORCE_FLOOR
from .errors import DomainError, GimbalLockError

N_STATES = 29
N_CONTROLS = 13

JOINTS = slice(0, 7)
JOINT_RATES = slice(7, 14)
POSE = slice(14, 20)
POSE_RATES = slice(20, 26)
FORCE = slice(26, 29)
WRENCH = slice(0, 6)
TORQUES = slice(6, 13)

_MANIP = slice(0, 14)
_TOOL = slice(14, 29)


@dataclass(frozen=True)
class FullState:
    """Structured view of the 29-dimensional optimization state."""

    joints: np.ndarray
    joint_rates: np.ndarray
    pose: np.ndarray
    pose_rates: np.ndarray
    contact_force: np.ndarray

    def __post_init__(self):
        for name, dim in (("joints", 7), ("joint_rates", 7), ("pose", 6),
                          ("pose_rates", 6), ("contact_force", 3)):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (dim,):
                raise DomainError(f"{name} must have shape ({dim},)")
            object.__setattr__(self, name, arr)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.joints, self.joint_rates, self.pose,
                               self.pose_rates, self.contact_force])

    @classmethod
    def from_vector(cls, x) -> "FullState":
        x = np.asarray(x, dtype=float)
        if x.shape != (N_STATES,):
            raise DomainError(f"state vector must have shape ({N_STATES},)")
        return cls(x[JOINTS], x[JOINT_RATES], x[POSE], x[POSE_RATES], x[FORCE])


@dataclass(frozen=True)
class ControlInput:
    """Structured view of the 13-dimensional control."""

    wrench: np.ndarray
    joint_torques: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.wrench, dtype=float)
        t = np.asarray(self.joint_torques, dtype=float)
        if w.shape != (6,) or t.shape != (7,):
            raise DomainError("wrench must be (6,) and joint torques (7,)")
        object.__setattr__(self, "wrench", w)
        object.__setattr__(self, "joint_torques", t)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.wrench, self.joint_torques])

    @classmethod
    def from_vector(cls, u) -> "ControlInput":
        u = np.asarray(u, dtype=float)
        if u.shape != (N_CONTROLS,):
            raise DomainError(f"control vector must have shape ({N_CONTROLS},)")
        return cls(u[WRENCH], u[TORQUES])


@dataclass(frozen=True)
class ToolBody:
    """Rigid application tool: inertia, lever arms and gravity.

    ``r_cb`` points from the center of mass to the wrench application point,
    ``r_ce`` from the center of mass to the tooltip contact point, both in
    the body frame.
    """

    mass: float
    inertia_diag: np.ndarray
    r_cb: np.ndarray
    r_ce: np.ndarray
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def __post_init__(self):
        if self.mass <= 0.0:
            raise DomainError("tool mass must be positive")
        inertia = np.asarray(self.inertia_diag, dtype=float)
        if inertia.shape != (3,) or np.any(inertia <= 0.0):
            raise DomainError("tool inertia diagonal must be three positive entries")
        object.__setattr__(self, "inertia_diag", inertia)
        object.__setattr__(self, "r_cb", np.asarray(self.r_cb, dtype=float))
        object.__setattr__(self, "r_ce", np.asarray(self.r_ce, dtype=float))
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float))


# ---------------------------------------------------------------------------
# Euler-angle kinematics (ZYX: yaw-pitch-roll)
# ---------------------------------------------------------------------------

def euler_to_rotation(angles):
    """Rotation matrix Rz(yaw) Ry(pitch) Rx(roll); batched over leading dims."""
    a = np.asarray(angles, dtype=float)
    cy, sy = np.cos(a[..., 0]), np.sin(a[..., 0])
    cp, sp = np.cos(a[..., 1]), np.sin(a[..., 1])
    cr, sr = np.cos(a[..., 2]), np.sin(a[..., 2])
    R = np.empty(a.shape[:-1] + (3, 3))
    R[..., 0, 0] = cy * cp
    R[..., 0, 1] = cy * sp * sr - sy * cr
    R[..., 0, 2] = cy * sp * cr + sy * sr
    R[..., 1, 0] = sy * cp
    R[..., 1, 1] = sy * sp * sr + cy * cr
    R[..., 1, 2] = sy * sp * cr - cy * sr
    R[..., 2, 0] = -sp
    R[..., 2, 1] = cp * sr
    R[..., 2, 2] = cp * cr
    return R


def euler_rate_matrix(angles, min_cos_pitch: float = 1e-6):
    """Matrix T mapping (yaw, pitch, roll) rates to the world angular velocity.

    omega = T(angles) @ angle_rates. Raises near the pitch = +-pi/2 gimbal.
    """
    a = np.asarray(angles, dtype=float)
    cy, sy = np.cos(a[..., 0]), np.sin(a[..., 0])
    cp, sp = np.cos(a[..., 1]), np.sin(a[..., 1])
    if np.any(np.abs(cp) < min_cos_pitch):
        raise GimbalLockError("pitch too close to +-pi/2 for the Euler rate map")
    T = np.zeros(a.shape[:-1] + (3, 3))
    T[..., 0, 1] = -sy
    T[..., 0, 2] = cy * cp
    T[..., 1, 1] = cy
    T[..., 1, 2] = sy * cp
    T[..., 2, 0] = 1.0
    T[..., 2, 2] = -sp
    return T


def euler_rate_matrix_dot(angles, rates):
    """Time derivative of :func:`euler_rate_matrix` along the given rates."""
    a = np.asarray(angles, dtype=float)
    r = np.asarray(rates, dtype=float)
    cy, sy = np.cos(a[..., 0]), np.sin(a[..., 0])
    cp, sp = np.cos(a[..., 1]), np.sin(a[..., 1])
    yd, pd = r[..., 0], r[..., 1]
    Td = np.zeros(a.shape[:-1] + (3, 3))
    Td[..., 0, 1] = -cy * yd
    Td[..., 0, 2] = -sy * cp * yd - cy * sp * pd
    Td[..., 1, 1] = -sy * yd
    Td[..., 1, 2] = cy * cp * yd - sy * sp * pd
    Td[..., 2, 2] = -cp * pd
    return Td


def euler_rate_map(angles, rates):
    """Both the Euler-rate matrix and its time derivative."""
    return euler_rate_matrix(angles), euler_rate_matrix_dot(angles, rates)


# ---------------------------------------------------------------------------
# tool rigid-body dynamics
# ---------------------------------------------------------------------------

def tool_accel(pose, rates, wrench, contact_force, tool: ToolBody):
    """Centroidal accelerations of the tool under a wrench and contact force.

    [xdd_c; omdot_c] = H^-1 [W_f + m g - F_e;
                             r_cb x W_f + W_tau + r_ce x F_e]
    with H = diag(m, m, m, I_xx, I_yy, I_zz) and both levers rotated to the
    world frame. The model carries no gyroscopic term; ``rates`` are accepted
    for signature symmetry but do not enter.
    """
    pose = np.asarray(pose, dtype=float)
    w = np.asarray(wrench, dtype=float)
    fe = np.asarray(contact_force, dtype=float)
    R = euler_to_rotation(pose[..., 3:6])
    w_f, w_tau = w[..., :3], w[..., 3:]
    r_cb_w = np.einsum("...ij,j->...i", R, tool.r_cb)
    r_ce_w = np.einsum("...ij,j->...i", R, tool.r_ce)
    xdd_c = (w_f + tool.mass * tool.gravity - fe) / tool.mass
    torque = np.cross(r_cb_w, w_f) + w_tau + np.cross(r_ce_w, fe)
    omdot_c = torque / tool.inertia_diag
    return xdd_c, omdot_c


def tooltip_from_centroid(xd_c, xdd_c, omega, omega_dot, r_ce_world):
    """Project centroidal velocity/acceleration to the tooltip.

    xd_e  = xd_c + omega x r_ce
    xdd_e = xdd_c + omega_dot x r_ce + omega x (omega x r_ce)
    """
    xd_e = xd_c + np.cross(omega, r_ce_world)
    xdd_e = xdd_c + np.cross(omega_dot, r_ce_world) \
        + np.cross(omega, np.cross(omega, r_ce_world))
    return xd_e, xdd_e


# ---------------------------------------------------------------------------
# assembled system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SoftContactSystem:
    """The coupled manipulator + tool + contact model and its discretization.

    ``surface_height`` is the world z of the undeformed surface; contact is
    active while the normal force exceeds ``eps_force`` or the tooltip is
    below the surface. On lift-off the stored force decays with the
    ``liftoff_tau`` time constant. ``gimbal_guard`` aborts integration when
    |cos(pitch)| drops below it.
    """

    chain: KinematicChain
    tool: ToolBody
    material: MaterialParams
    geometry: ContactGeometry
    surface_height: float = 0.0
    eps_force: float = DEFAULT_FORCE_FLOOR
    liftoff_tau: float = 1e-3
    gimbal_guard: float = 1e-3
    rest_speed: float = 1e-6

    def __post_init__(self):
        try:
            from . import _kernels
            object.__setattr__(self, "_engine", _kernels.make_engine(self))
        except ImportError:  # pragma: no cover - numba not installed
            object.__setattr__(self, "_engine", None)

    # -- continuous-time right-hand sides ------------------------------------

    def manipulator_derivative(self, xm, u):
        """d/dt of the (q, q_dot) block; batched."""
        xm = np.asarray(xm, dtype=float)
        u = np.asarray(u, dtype=float)
        qdd = self.chain.accel(xm[..., :7], xm[..., 7:], u[..., TORQUES],
                               u[..., WRENCH], check_conditioning=False)
        return np.concatenate([xm[..., 7:], qdd], axis=-1)

    def tool_derivative(self, xe, wrench, curvature_radius, tangent_hint):
        """d/dt of the (pose, pose_rate, F_e) block; batched.

        ``curvature_radius`` broadcasts over the batch; ``tangent_hint`` is
        the sliding-direction fallback used below the rest-speed threshold.
        """
        xe = np.asarray(xe, dtype=float)
        w = np.asarray(wrench, dtype=float)
        pose = xe[..., 0:6]
        rate = xe[..., 6:12]
        fe = xe[..., 12:15]
        angles = pose[..., 3:6]
        cp = np.cos(angles[..., 1])
        if np.any(np.abs(cp) < self.gimbal_guard):
            raise GimbalLockError(
                f"tool pitch within {self.gimbal_guard} of gimbal lock during integration")

        R = euler_to_rotation(angles)
        T = euler_rate_matrix(angles, min_cos_pitch=self.gimbal_guard)
        Td = euler_rate_matrix_dot(angles, rate[..., 3:6])
        omega = np.einsum("...ij,...j->...i", T, rate[..., 3:6])
        xdd_c, omdot = tool_accel(pose, rate, w, fe, self.tool)
        r_ce_w = np.einsum("...ij,j->...i", R, self.tool.r_ce)
        xdd_e = xdd_c + np.cross(omdot, r_ce_w) + np.cross(omega, np.cross(omega, r_ce_w))
        euler_acc = np.linalg.solve(
            T, (omdot - np.einsum("...ij,...j->...i", Td, rate[..., 3:6]))[..., None])[..., 0]

        fdot = self._contact_rate(pose, rate, xdd_e, fe, curvature_radius, tangent_hint)
        return np.concatenate([rate, xdd_e, euler_acc, fdot], axis=-1)

    def _contact_rate(self, pose, rate, xdd_e, fe, curvature_radius, tangent_hint):
        normal = self.geometry.normal
        E = self.material.reduced_modulus
        R_tool = self.geometry.radius
        nu = self.material.poisson_surface
        mu, k_d = self.material.mu, self.material.k_d

        v_lin = rate[..., :3]
        fz = np.einsum("...i,i->...", fe, normal)
        penetration = self.surface_height - pose[..., 2]
        in_contact = (fz > self.eps_force) | (penetration > 0.0)

        ddot = np.einsum("...i,i->...", v_lin, normal)
        fz_floor = np.maximum(fz, self.eps_force)
        fzdot = np.cbrt(6.0 * E**2 * R_tool * fz_floor) * ddot
        d = np.cbrt(9.0 * np.maximum(fz, 0.0) ** 2 / (16.0 * E**2 * R_tool))

        speed = np.linalg.norm(v_lin, axis=-1)
        vdot = np.einsum("...i,...i->...", v_lin, xdd_e) / np.maximum(speed, 1e-9)

        # sliding direction: tangential velocity, hint below the rest threshold
        v_t = v_lin - ddot[..., None] * normal
        t_speed = np.linalg.norm(v_t, axis=-1)
        hint = np.broadcast_to(np.asarray(tangent_hint, dtype=float), v_t.shape)
        hint_t = hint - np.einsum("...i,i->...", hint, normal)[..., None] * normal
        hint_t = hint_t / np.maximum(np.linalg.norm(hint_t, axis=-1), 1e-12)[..., None]
        use_v = (t_speed >= self.rest_speed)[..., None]
        n_v = np.where(use_v, v_t / np.maximum(t_speed, 1e-30)[..., None], hint_t)
        n_perp = np.cross(n_v, normal)

        tangent_rate = (mu * fzdot
                        + 3.0 * mu * (2.0 * nu - 1.0) / (10.0 * R_tool) * (fzdot * d + fz * ddot)
                        + k_d * vdot)
        rc = np.broadcast_to(np.asarray(curvature_radius, dtype=float), speed.shape)
        radial_rate = np.where(np.isinf(rc), 0.0,
                               2.0 * self.tool.mass * speed * vdot / np.where(np.isinf(rc), 1.0, rc))

        fdot_contact = (fzdot[..., None] * normal
                        + tangent_rate[..., None] * n_v
                        + radial_rate[..., None] * n_perp)
        fdot_free = -fe / self.liftoff_tau
        return np.where(in_contact[..., None], fdot_contact, fdot_free)

    def derivative(self, x, u, curvature_radius=np.inf, tangent_hint=(1.0, 0.0, 0.0)):
        """Continuous-time right-hand side of the full 29-state model; batched."""
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        dm = self.manipulator_derivative(x[..., _MANIP], u)
        de = self.tool_derivative(x[..., _TOOL], u[..., WRENCH], curvature_radius, tangent_hint)
        return np.concatenate([dm, de], axis=-1)

    # -- discretization -------------------------------------------------------

    def _rk4(self, f, x, dt):
        # diverging line-search candidates legitimately overflow here and are
        # rejected by the caller's finiteness check
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = f(x)
            k2 = f(x + 0.5 * dt * k1)
            k3 = f(x + 0.5 * dt * k2)
            k4 = f(x + dt * k3)
            return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def step_manipulator(self, xm, u, dt):
        return self._rk4(lambda s: self.manipulator_derivative(s, u), np.asarray(xm, dtype=float), dt)

    def step_tool(self, xe, wrench, dt, curvature_radius=np.inf, tangent_hint=(1.0, 0.0, 0.0)):
        """RK4 step of the tool block.

        Out of contact the stored force obeys the stiff first-order decay,
        which explicit RK4 cannot integrate stably at the default time step
        (dt/tau = 10); for states that start out of contact the force
        component is therefore held through the substages and updated with
        the exact exponential decay factor instead.
        """
        xe = np.asarray(xe, dtype=float)
        fz = np.einsum("...i,i->...", xe[..., 12:15], self.geometry.normal)
        in_contact = (fz > self.eps_force) | (self.surface_height - xe[..., 2] > 0.0)
        if np.all(in_contact):
            return self._rk4(lambda s: self.tool_derivative(s, wrench, curvature_radius, tangent_hint),
                             xe, dt)

        def frozen_force_rhs(s):
            ds = self.tool_derivative(s, wrench, curvature_radius, tangent_hint)
            ds[..., 12:15] = np.where(in_contact[..., None], ds[..., 12:15], 0.0)
            return ds

        out = self._rk4(frozen_force_rhs, xe, dt)
        decayed = xe[..., 12:15] * np.exp(-dt / self.liftoff_tau)
        out[..., 12:15] = np.where(in_contact[..., None], out[..., 12:15], decayed)
        return out

    def step(self, x, u, dt=0.01, curvature_radius=np.inf, tangent_hint=(1.0, 0.0, 0.0)):
        """One explicit RK4 step of the full model; batched.

        The joint and tool blocks are integrated independently (they share
        only the control), so the stacked step equals the RK4 step of the
        stacked right-hand side exactly.
        """
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if self._engine is not None and x.ndim == 1:
            return self._engine.step(x, u, float(dt), float(curvature_radius),
                                     np.asarray(tangent_hint, dtype=float))
        return np.concatenate(
            [self.step_manipulator(x[..., _MANIP], u, dt),
             self.step_tool(x[..., _TOOL], u[..., WRENCH], dt, curvature_radius, tangent_hint)],
            axis=-1)

    def rollout(self, x0, us, dt=0.01, curvature_radii=None, tangent_hints=None):
        """Integrate a control sequence; returns states (N+1, 29)."""
        us = np.asarray(us, dtype=float)
        N = us.shape[0]
        rcs, hints = self._per_step(N, curvature_radii, tangent_hints)
        if self._engine is not None:
            return self._engine.rollout(np.asarray(x0, dtype=float), us, float(dt), rcs, hints)
        xs = np.empty((N + 1, N_STATES))
        xs[0] = x0
        for i in range(N):
            xs[i + 1] = self.step(xs[i], us[i], dt, rcs[i], hints[i])
        return xs

    def _per_step(self, N, curvature_radii, tangent_hints):
        if curvature_radii is None:
            rcs = np.full(N, np.inf)
        else:
            rcs = np.broadcast_to(np.asarray(curvature_radii, dtype=float), (N,)).copy()
        if tangent_hints is None:
            hints = np.broadcast_to(np.array([1.0, 0.0, 0.0]), (N, 3)).copy()
        else:
            hints = np.broadcast_to(np.asarray(tangent_hints, dtype=float), (N, 3)).copy()
        return rcs, hints

    # -- linearization --------------------------------------------------------

    def linearize(self, x, u, dt=0.01, curvature_radius=np.inf,
                  tangent_hint=(1.0, 0.0, 0.0), eps: float = 1e-6):
        """Central-difference Jacobians (A, B) of :meth:`step` at one point.

        Perturbations are scaled per component as eps * max(1, |value|). The
        joint/tool block decoupling makes the off-diagonal state blocks and
        the torque columns of the tool block exact zeros.
        """
        A, B = self.linearize_trajectory(np.asarray(x, dtype=float)[None, :],
                                         np.asarray(u, dtype=float)[None, :], dt,
                                         np.array([curvature_radius]),
                                         np.asarray(tangent_hint, dtype=float)[None, :], eps)
        return A[0], B[0]

    def linearize_trajectory(self, xs, us, dt=0.01, curvature_radii=None,
                             tangent_hints=None, eps: float = 1e-6):
        """Jacobians along a trajectory: A (N, 29, 29), B (N, 29, 13)."""
        xs = np.asarray(xs, dtype=float)
        us = np.asarray(us, dtype=float)
        N = us.shape[0]
        rcs, hints = self._per_step(N, curvature_radii, tangent_hints)
        if self._engine is not None:
            return self._engine.linearize_trajectory(xs[:N], us, float(dt), rcs, hints, eps)

        A = np.zeros((N, N_STATES, N_STATES))
        B = np.zeros((N, N_STATES, N_CONTROLS))
        xm, xe = xs[:N, _MANIP], xs[:N, _TOOL]

        def probes(base, scale_eps):
            h = scale_eps * np.maximum(1.0, np.abs(base))
            dim = base.shape[-1]
            plus = base[:, None, :] + h[:, None, :] * np.eye(dim)
            minus = base[:, None, :] - h[:, None, :] * np.eye(dim)
            return plus, minus, h

        # manipulator block: d step_m / d xm and d step_m / d u
        plus, minus, h = probes(xm, eps)
        u_rep = np.repeat(us[:, None, :], 14, axis=1)
        sp = self.step_manipulator(plus, u_rep, dt)
        sm = self.step_manipulator(minus, u_rep, dt)
        A[:, _MANIP, _MANIP] = np.swapaxes((sp - sm) / (2.0 * h[:, :, None]), 1, 2)

        plus_u, minus_u, hu = probes(us, eps)
        xm_rep = np.repeat(xm[:, None, :], N_CONTROLS, axis=1)
        sp = self.step_manipulator(xm_rep, plus_u, dt)
        sm = self.step_manipulator(xm_rep, minus_u, dt)
        B[:, _MANIP, :] = np.swapaxes((sp - sm) / (2.0 * hu[:, :, None]), 1, 2)

        # tool block: d step_e / d xe and d step_e / d wrench
        plus, minus, h = probes(xe, eps)
        w_rep = np.repeat(us[:, None, WRENCH], 15, axis=1)
        rc_rep = np.repeat(rcs[:, None], 15, axis=1)
        hint_rep = np.repeat(hints[:, None, :], 15, axis=1)
        sp = self.step_tool(plus, w_rep, dt, rc_rep, hint_rep)
        sm = self.step_tool(minus, w_rep, dt, rc_rep, hint_rep)
        A[:, _TOOL, _TOOL] = np.swapaxes((sp - sm) / (2.0 * h[:, :, None]), 1, 2)

        plus_w, minus_w, hw = probes(us[:, WRENCH], eps)
        xe_rep = np.repeat(xe[:, None, :], 6, axis=1)
        rc_rep = np.repeat(rcs[:, None], 6, axis=1)
        hint_rep = np.repeat(hints[:, None, :], 6, axis=1)
        sp = self.step_tool(xe_rep, plus_w, dt, rc_rep, hint_rep)
        sm = self.step_tool(xe_rep, minus_w, dt, rc_rep, hint_rep)
        B[:, _TOOL, WRENCH] = np.swapaxes((sp - sm) / (2.0 * hw[:, :, None]), 1, 2)
        return A, B


def system_derivative(state: FullState, control: ControlInput, system: SoftContactSystem,
                      curvature_radius=np.inf, tangent_hint=(1.0, 0.0, 0.0)) -> np.ndarray:
    """Continuous-time derivative of the stacked state (functional wrapper)."""
    return system.derivative(state.as_vector(), control.as_vector(),
                             curvature_radius, tangent_hint)
