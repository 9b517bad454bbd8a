"""Constraint splitting around the DDP solver.

Alternates three blocks: a DDP solve of the penalized smooth subproblem,
Euclidean projections of the consensus copies onto the constraint sets
(joint box, control box, sliding-friction set), and scaled dual updates.
Stopping uses both the primal consensus gap and the dual residual built
from the change of the projected copies.

The consensus variables are a slice of the state (joint angles in the
contact problem), the controls, and a second state slice ("lambda": pose
rates and contact force). Passing ``None`` for a constraint set makes the
corresponding projection the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ddp import DdpOptions, DdpSolver, TrajectoryPair
from .errors import DomainError

JOINT_SLICE = slice(0, 7)
LAMBDA_SLICE = slice(20, 29)


@dataclass(frozen=True)
class FrictionCone:
    """Sliding-friction constraint m v^2 / R_c <= mu (N . F_e) + g_offset.

    ``curvature_radii`` is a scalar or per-timestep array; ``inf`` encodes a
    straight path segment. The lambda layout is (pose_rate(6), F_e(3)) with
    the translational velocity in the first three entries.
    """

    mass: float
    mu: float
    g_offset: float = 0.0
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    curvature_radii: float | np.ndarray = np.inf

    def __post_init__(self):
        if self.mass <= 0.0:
            raise DomainError("tool mass must be positive")
        if self.mu < 0.0:
            raise DomainError("friction coefficient must be >= 0")
        object.__setattr__(self, "normal", np.asarray(self.normal, dtype=float))
        object.__setattr__(self, "curvature_radii",
                           np.asarray(self.curvature_radii, dtype=float))


@dataclass(frozen=True)
class ConstraintSets:
    """Boxes and friction set; any entry may be None (unconstrained)."""

    joint_lower: np.ndarray | None = None
    joint_upper: np.ndarray | None = None
    control_lower: np.ndarray | None = None
    control_upper: np.ndarray | None = None
    friction: FrictionCone | None = None

    def __post_init__(self):
        for lo_name, hi_name in (("joint_lower", "joint_upper"),
                                 ("control_lower", "control_upper")):
            lo, hi = getattr(self, lo_name), getattr(self, hi_name)
            if (lo is None) != (hi is None):
                raise DomainError(f"{lo_name}/{hi_name} must be set together")
            if lo is not None:
                lo = np.asarray(lo, dtype=float)
                hi = np.asarray(hi, dtype=float)
                if np.any(lo > hi):
                    raise DomainError(f"{lo_name} must be <= {hi_name} componentwise")
                object.__setattr__(self, lo_name, lo)
                object.__setattr__(self, hi_name, hi)


def project_joint(values, lower, upper):
    """Componentwise clamp onto the joint box (the Euclidean projection)."""
    return np.clip(values, lower, upper)


def project_control(values, lower, upper):
    """Componentwise clamp onto the stacked wrench/torque box."""
    return np.clip(values, lower, upper)


def project_friction(lam, cone: FrictionCone, curvature_radii=None):
    """Project (pose_rate, F_e) rows onto the sliding-friction set.

    The normal component of F_e is clamped to be non-negative; when the
    speed bound m||v||^2/R_c <= mu (N.F_e) + G is violated, the tangential
    components of the translational velocity are scaled down (holding F_e
    and the normal velocity) by the factor that achieves equality.
    """
    lam = np.array(lam, dtype=float, copy=True)
    single = lam.ndim == 1
    if single:
        lam = lam[None, :]
    n = cone.normal
    rc = np.broadcast_to(
        cone.curvature_radii if curvature_radii is None else np.asarray(curvature_radii, dtype=float),
        (lam.shape[0],))

    force = lam[:, 6:9]
    fz = force @ n
    force -= np.minimum(fz, 0.0)[:, None] * n
    fz = np.maximum(fz, 0.0)

    v = lam[:, 0:3]
    vn = (v @ n)[:, None] * n
    vt = v - vn
    speed_sq = np.einsum("ij,ij->i", v, v)
    bound = cone.mu * fz + cone.g_offset
    violated = ~np.isinf(rc) & (cone.mass * speed_sq / np.where(np.isinf(rc), 1.0, rc) > bound)
    if np.any(violated):
        vt_sq = np.einsum("ij,ij->i", vt, vt)
        vn_sq = speed_sq - vt_sq
        target_sq = np.maximum(bound * rc / cone.mass - vn_sq, 0.0)
        scale = np.sqrt(target_sq / np.where(vt_sq > 0.0, vt_sq, 1.0))
        scale = np.where(violated & (vt_sq > 0.0), scale, 1.0)
        lam[:, 0:3] = vn + scale[:, None] * vt
    return lam[0] if single else lam


@dataclass
class AdmmOptions:
    rho_joint: float = 1.0
    rho_control: float = 1.0
    rho_friction: float = 1.0
    tol_primal: float = 1e-2
    tol_dual: float = 1e-2
    max_iters: int = 50
    ddp: DdpOptions = field(default_factory=DdpOptions)

    def __post_init__(self):
        if min(self.rho_joint, self.rho_control, self.rho_friction) < 0.0:
            raise DomainError("penalty step sizes must be >= 0")
        if self.max_iters < 1:
            raise DomainError("max_iters must be at least 1")

    @property
    def rho(self):
        return np.array([self.rho_joint, self.rho_control, self.rho_friction])


@dataclass
class AdmmWorkspace:
    """Projected copies, scaled duals, and the previous copies for the dual residual."""

    joints_hat: np.ndarray
    controls_hat: np.ndarray
    lambda_hat: np.ndarray
    dual_joints: np.ndarray
    dual_controls: np.ndarray
    dual_lambda: np.ndarray
    rho: np.ndarray
    prev_joints_hat: np.ndarray | None = None
    prev_controls_hat: np.ndarray | None = None
    prev_lambda_hat: np.ndarray | None = None


def residuals(workspace: AdmmWorkspace, joints, controls, lam):
    """Primal consensus gap and scaled dual residual, stacked 2-norms."""
    r = np.sqrt(np.sum((joints - workspace.joints_hat) ** 2)
                + np.sum((controls - workspace.controls_hat) ** 2)
                + np.sum((lam - workspace.lambda_hat) ** 2))
    if workspace.prev_joints_hat is None:
        s = np.inf
    else:
        s = np.sqrt(
            workspace.rho[0] ** 2 * np.sum((workspace.joints_hat - workspace.prev_joints_hat) ** 2)
            + workspace.rho[1] ** 2 * np.sum((workspace.controls_hat - workspace.prev_controls_hat) ** 2)
            + workspace.rho[2] ** 2 * np.sum((workspace.lambda_hat - workspace.prev_lambda_hat) ** 2))
    return float(r), float(s)


@dataclass
class AdmmReport:
    converged: bool
    iterations: int
    cost: float
    residual_primal: float
    residual_dual: float
    history: list = field(default_factory=list)
    ddp_history: list = field(default_factory=list)
    max_joint_violation: float = 0.0
    max_control_violation: float = 0.0
    max_friction_violation: float = 0.0


class AdmmSolver:
    """Algorithm: repeat {DDP solve, projections, dual updates} to consensus.

    The cost model must expose ``set_penalties(rho, target_joints,
    target_controls, target_lambda)``; the dynamics model is the same object
    the DDP solver consumes.
    """

    def __init__(self, dynamics, cost, sets: ConstraintSets,
                 options: AdmmOptions | None = None,
                 state_slice: slice = JOINT_SLICE, lambda_slice: slice = LAMBDA_SLICE):
        self.dynamics = dynamics
        self.cost = cost
        self.sets = sets
        self.options = options or AdmmOptions()
        self.state_slice = state_slice
        self.lambda_slice = lambda_slice
        self._ddp = DdpSolver(dynamics, cost, self.options.ddp)

    # -- projections over full sequences --------------------------------------

    def _project(self, joints, controls, lam):
        sets = self.sets
        joints_hat = (project_joint(joints, sets.joint_lower, sets.joint_upper)
                      if sets.joint_lower is not None else joints.copy())
        controls_hat = (project_control(controls, sets.control_lower, sets.control_upper)
                        if sets.control_lower is not None else controls.copy())
        lam_hat = (project_friction(lam, sets.friction)
                   if sets.friction is not None else lam.copy())
        return joints_hat, controls_hat, lam_hat

    def _extract(self, traj: TrajectoryPair):
        joints = traj.states[:, self.state_slice]
        lam = traj.states[:, self.lambda_slice]
        return joints, traj.controls, lam

    def init_workspace(self, traj: TrajectoryPair) -> AdmmWorkspace:
        """Projected copies start at the projection of the initial trajectory.

        (A zero initialization would aim the first proximal pull at the
        origin; projecting the initial trajectory keeps the first DDP call
        centered and leaves the fixed points unchanged.)
        """
        joints, controls, lam = self._extract(traj)
        joints_hat, controls_hat, lam_hat = self._project(joints, controls, lam)
        return AdmmWorkspace(
            joints_hat=joints_hat, controls_hat=controls_hat, lambda_hat=lam_hat,
            dual_joints=np.zeros_like(joints_hat),
            dual_controls=np.zeros_like(controls_hat),
            dual_lambda=np.zeros_like(lam_hat),
            rho=self.options.rho.copy(),
        )

    def iterate(self, workspace: AdmmWorkspace, traj: TrajectoryPair):
        """One pass: penalized DDP solve, projections, dual updates.

        Returns (workspace, traj, ddp_report); the workspace is updated in
        place and its previous projected copies are rotated for the dual
        residual.
        """
        self.cost.set_penalties(
            workspace.rho,
            workspace.joints_hat - workspace.dual_joints,
            workspace.controls_hat - workspace.dual_controls,
            workspace.lambda_hat - workspace.dual_lambda,
        )
        traj, ddp_report = self._ddp.solve(warm_start=traj)

        joints, controls, lam = self._extract(traj)
        workspace.prev_joints_hat = workspace.joints_hat
        workspace.prev_controls_hat = workspace.controls_hat
        workspace.prev_lambda_hat = workspace.lambda_hat
        workspace.joints_hat, workspace.controls_hat, workspace.lambda_hat = self._project(
            joints + workspace.dual_joints,
            controls + workspace.dual_controls,
            lam + workspace.dual_lambda,
        )
        workspace.dual_joints = workspace.dual_joints + joints - workspace.joints_hat
        workspace.dual_controls = workspace.dual_controls + controls - workspace.controls_hat
        workspace.dual_lambda = workspace.dual_lambda + lam - workspace.lambda_hat
        return workspace, traj, ddp_report

    def solve(self, x0=None, us_init=None, initial_traj: TrajectoryPair | None = None):
        """Run to consensus; returns (TrajectoryPair, AdmmReport).

        Non-convergence within the iteration budget returns the best iterate
        (smallest combined residual) with ``converged=False``.
        """
        if initial_traj is None:
            us = np.asarray(us_init, dtype=float)
            xs = self.dynamics.rollout(np.asarray(x0, dtype=float), us)
            traj = TrajectoryPair(states=xs, controls=us, cost=np.nan)
        else:
            traj = initial_traj
        workspace = self.init_workspace(traj)

        history = []
        ddp_history = []
        best = None
        converged = False
        r = s = np.inf
        iters = 0
        for it in range(1, self.options.max_iters + 1):
            iters = it
            workspace, traj, ddp_report = self.iterate(workspace, traj)
            joints, controls, lam = self._extract(traj)
            r, s = residuals(workspace, joints, controls, lam)
            cost_plain = self.cost.tracking_total(traj.states, traj.controls)
            history.append({"iter": it, "r_primal": r, "s_dual": s,
                            "ddp_iters": ddp_report.iterations, "cost": cost_plain})
            ddp_history.extend(ddp_report.history)
            if best is None or r + s < best[0]:
                best = (r + s, traj, r, s, cost_plain)
            if r < self.options.tol_primal and s < self.options.tol_dual:
                converged = True
                break

        if not converged and best is not None:
            _, traj, r, s, cost_plain = best
        # the reported trajectory carries the plain objective value; the
        # penalized value is solver-internal
        traj = TrajectoryPair(states=traj.states, controls=traj.controls,
                              cost=cost_plain, gains_K=traj.gains_K, gains_k=traj.gains_k)
        report = AdmmReport(converged=converged, iterations=iters, cost=cost_plain,
                            residual_primal=r, residual_dual=s, history=history,
                            ddp_history=ddp_history)
        self._fill_violations(report, traj)
        self.last_workspace_ = workspace
        return traj, report

    def _fill_violations(self, report: AdmmReport, traj: TrajectoryPair):
        joints, controls, lam = self._extract(traj)
        sets = self.sets
        if sets.joint_lower is not None:
            report.max_joint_violation = float(np.max(
                np.maximum(joints - sets.joint_upper, 0.0)
                + np.maximum(sets.joint_lower - joints, 0.0)))
        if sets.control_lower is not None:
            report.max_control_violation = float(np.max(
                np.maximum(controls - sets.control_upper, 0.0)
                + np.maximum(sets.control_lower - controls, 0.0)))
        if sets.friction is not None:
            cone = sets.friction
            v = lam[:, 0:3]
            fz = lam[:, 6:9] @ cone.normal
            rc = np.broadcast_to(cone.curvature_radii, (lam.shape[0],))
            centripetal = np.where(np.isinf(rc), 0.0,
                                   cone.mass * np.einsum("ij,ij->i", v, v)
                                   / np.where(np.isinf(rc), 1.0, rc))
            report.max_friction_violation = float(np.max(
                np.maximum(centripetal - (cone.mu * np.maximum(fz, 0.0) + cone.g_offset), 0.0)))


def admm_iterate(solver: AdmmSolver, workspace: AdmmWorkspace, traj: TrajectoryPair):
    """Functional wrapper over :meth:`AdmmSolver.iterate`."""
    return solver.iterate(workspace, traj)
