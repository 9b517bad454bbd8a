"""Unconstrained trajectory optimizer: iLQR-style DDP with line search.

The solver alternates a Riccati backward pass over the linearized dynamics
with a dynamics-feasible forward rollout, so every returned trajectory
re-integrates exactly under the model. Second-order dynamics terms are
dropped (the 29-dimensional dynamics tensors would be finite-difference
noise); a Levenberg-style regularizer on Q_uu covers indefiniteness.

Cost models and dynamics models are duck-typed; see :class:`QuadraticCost`
and :class:`TrackingCost` for the two shipped cost models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularityError, SolverError

_LS_ALPHAS = 0.5 ** np.arange(11)  # 1, 1/2, ..., 2^-10


@dataclass
class DdpOptions:
    max_iters: int = 10
    tol_cost: float = 1e-6
    tol_grad: float = 1e-6
    reg_init: float = 1e-6
    reg_min: float = 1e-9
    reg_max: float = 1e10
    accept_ratio: float = 1e-4
    line_search_steps: int = 11


@dataclass
class TrajectoryPair:
    """States (N+1, n), controls (N, m), their cost and last feedback gains."""

    states: np.ndarray
    controls: np.ndarray
    cost: float = np.nan
    gains_K: np.ndarray | None = None
    gains_k: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.controls.shape[0]


@dataclass
class DdpReport:
    iterations: int
    converged: bool
    cost: float
    grad_norm: float
    reg: float
    history: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# dynamics models
# ---------------------------------------------------------------------------

class LinearDynamics:
    """x[i+1] = A x[i] + B u[i]; exact linearization for oracle tests."""

    def __init__(self, A, B):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.n = self.A.shape[0]
        self.m = self.B.shape[1]

    def step(self, i, x, u):
        return self.A @ x + self.B @ u

    def rollout(self, x0, us):
        N = us.shape[0]
        xs = np.empty((N + 1, self.n))
        xs[0] = x0
        for i in range(N):
            xs[i + 1] = self.step(i, xs[i], us[i])
        return xs

    def linearize_trajectory(self, xs, us):
        N = us.shape[0]
        return (np.broadcast_to(self.A, (N, self.n, self.n)),
                np.broadcast_to(self.B, (N, self.n, self.m)))


class SystemDynamics:
    """Adapter binding a :class:`SoftContactSystem` to a fixed horizon.

    Carries the per-step path curvature radii and sliding-direction hints
    that the contact model needs, so the solver sees a plain discrete-time
    system.
    """

    def __init__(self, system, dt, horizon, curvature_radii=None, tangent_hints=None):
        self.system = system
        self.dt = float(dt)
        self.n = 29
        self.m = 13
        self.curvature_radii, self.tangent_hints = system._per_step(
            horizon, curvature_radii, tangent_hints)

    def step(self, i, x, u):
        return self.system.step(x, u, self.dt, self.curvature_radii[i], self.tangent_hints[i])

    def rollout(self, x0, us):
        return self.system.rollout(x0, us, self.dt, self.curvature_radii, self.tangent_hints)

    def linearize_trajectory(self, xs, us):
        return self.system.linearize_trajectory(xs, us, self.dt, self.curvature_radii,
                                                self.tangent_hints)


# ---------------------------------------------------------------------------
# cost models
# ---------------------------------------------------------------------------

class QuadraticCost:
    """J = sum (x-xr)' Q (x-xr) + u' R u + terminal (x-xr)' Qf (x-xr).

    Optional consensus penalties (for the constraint-splitting outer loop)
    act on a state slice, the controls, and a second state slice, with the
    same 0.5*rho*||value - target||^2 form as the contact cost.
    """

    def __init__(self, Q, R, Qf=None, x_ref=None,
                 state_slice: slice = slice(0, 0), lambda_slice: slice = slice(0, 0)):
        self.Q = np.asarray(Q, dtype=float)
        self.R = np.asarray(R, dtype=float)
        self.Qf = self.Q if Qf is None else np.asarray(Qf, dtype=float)
        self.x_ref = np.zeros(self.Q.shape[0]) if x_ref is None else np.asarray(x_ref, dtype=float)
        self.state_slice = state_slice
        self.lambda_slice = lambda_slice
        self.rho = np.zeros(3)
        self.target_joints = None
        self.target_controls = None
        self.target_lambda = None

    def set_penalties(self, rho, target_joints, target_controls, target_lambda):
        self.rho = np.asarray(rho, dtype=float)
        self.target_joints = None if target_joints is None else np.asarray(target_joints, dtype=float)
        self.target_controls = None if target_controls is None else np.asarray(target_controls, dtype=float)
        self.target_lambda = None if target_lambda is None else np.asarray(target_lambda, dtype=float)

    def _penalty(self, x, u, i):
        val = 0.0
        if self.target_joints is not None and self.rho[0] > 0.0:
            d = x[self.state_slice] - self.target_joints[i]
            val += 0.5 * self.rho[0] * (d @ d)
        if u is not None and self.target_controls is not None and self.rho[1] > 0.0:
            d = u - self.target_controls[i]
            val += 0.5 * self.rho[1] * (d @ d)
        if self.target_lambda is not None and self.rho[2] > 0.0:
            d = x[self.lambda_slice] - self.target_lambda[i]
            val += 0.5 * self.rho[2] * (d @ d)
        return val

    def stage(self, x, u, i):
        dx = x - self.x_ref
        return float(dx @ self.Q @ dx + u @ self.R @ u) + self._penalty(x, u, i)

    def terminal(self, x, i=None):
        dx = x - self.x_ref
        i = -1 if i is None else i
        return float(dx @ self.Qf @ dx) + self._penalty(x, None, i)

    def total(self, xs, us):
        N = us.shape[0]
        J = sum(self.stage(xs[i], us[i], i) for i in range(N))
        return float(J + self.terminal(xs[N], N))

    def tracking_total(self, xs, us):
        """Objective value without the consensus penalty terms."""
        dx = xs[:-1] - self.x_ref
        J = np.einsum("ij,jk,ik->", dx, self.Q, dx) + np.einsum("ij,jk,ik->", us, self.R, us)
        dxN = xs[-1] - self.x_ref
        return float(J + dxN @ self.Qf @ dxN)

    def expansion(self, x, u, i):
        n, m = self.Q.shape[0], self.R.shape[0]
        lx = 2.0 * self.Q @ (x - self.x_ref)
        lu = 2.0 * self.R @ u
        lxx = 2.0 * self.Q.copy()
        luu = 2.0 * self.R.copy()
        if self.target_joints is not None and self.rho[0] > 0.0:
            lx[self.state_slice] += self.rho[0] * (x[self.state_slice] - self.target_joints[i])
            width = len(range(*self.state_slice.indices(n)))
            lxx[self.state_slice, self.state_slice] += self.rho[0] * np.eye(width)
        if self.target_controls is not None and self.rho[1] > 0.0:
            lu += self.rho[1] * (u - self.target_controls[i])
            luu += self.rho[1] * np.eye(m)
        if self.target_lambda is not None and self.rho[2] > 0.0:
            lx[self.lambda_slice] += self.rho[2] * (x[self.lambda_slice] - self.target_lambda[i])
            width = len(range(*self.lambda_slice.indices(n)))
            lxx[self.lambda_slice, self.lambda_slice] += self.rho[2] * np.eye(width)
        return lx, lu, lxx, luu, np.zeros((m, n))

    def terminal_expansion(self, x, i=None):
        n = self.Q.shape[0]
        i = -1 if i is None else i
        lx = 2.0 * self.Qf @ (x - self.x_ref)
        lxx = 2.0 * self.Qf.copy()
        if self.target_joints is not None and self.rho[0] > 0.0:
            lx[self.state_slice] += self.rho[0] * (x[self.state_slice] - self.target_joints[i])
            width = len(range(*self.state_slice.indices(n)))
            lxx[self.state_slice, self.state_slice] += self.rho[0] * np.eye(width)
        if self.target_lambda is not None and self.rho[2] > 0.0:
            lx[self.lambda_slice] += self.rho[2] * (x[self.lambda_slice] - self.target_lambda[i])
            width = len(range(*self.lambda_slice.indices(n)))
            lxx[self.lambda_slice, self.lambda_slice] += self.rho[2] * np.eye(width)
        return lx, lxx

    def expansion_all(self, xs, us):
        N = us.shape[0]
        n, m = self.Q.shape[0], self.R.shape[0]
        lx = np.empty((N + 1, n))
        lxx = np.empty((N + 1, n, n))
        lu = np.empty((N, m))
        luu = np.empty((N, m, m))
        lux = np.zeros((N, m, n))
        for i in range(N):
            lx[i], lu[i], lxx[i], luu[i], _ = self.expansion(xs[i], us[i], i)
        lx[N], lxx[N] = self.terminal_expansion(xs[N], N)
        return lx, lu, lxx, luu, lux


class TrackingCost:
    """Force/pose tracking cost of the contact problem, plus ADMM penalties.

    Stage i (controls exist for i < N):

        dF' Q_F dF + u' R_u u + w_pose * s(FK(q) - p_ref[i])
        + rho_j/2 ||q - t_j[i]||^2 + rho_u/2 ||u - t_u[i]||^2
        + rho_f/2 ||lam - t_f[i]||^2

    with dF = F_e - F_ref[i], s(e) = sqrt(||e||^2 + eps^2) the smoothed
    unsquared pose norm (position part of FK only), and lam = (pose_rate,
    F_e) the 9-vector of consensus-constrained state entries. The terminal
    stage scales the state-tracking terms by ``terminal_scale`` and keeps
    the penalty terms; penalties are active only when targets are set.
    """

    def __init__(self, chain, Q_F, R_u, w_pose, force_ref, pose_ref,
                 terminal_scale: float = 10.0, pose_eps: float = 1e-6):
        self.chain = chain
        self.Q_F = np.asarray(Q_F, dtype=float)
        self.R_u = np.asarray(R_u, dtype=float)
        self.w_pose = float(w_pose)
        self.force_ref = np.asarray(force_ref, dtype=float)
        self.pose_ref = np.asarray(pose_ref, dtype=float)
        self.terminal_scale = float(terminal_scale)
        self.pose_eps = float(pose_eps)
        self.rho = np.zeros(3)
        self.target_joints = None
        self.target_controls = None
        self.target_lambda = None
        if np.any(np.linalg.eigvalsh(self.Q_F) < -1e-12):
            raise SolverError("Q_F must be positive semidefinite")
        if np.any(np.linalg.eigvalsh(self.R_u) <= 0.0):
            raise SolverError("R_u must be positive definite")

    def set_penalties(self, rho, target_joints, target_controls, target_lambda):
        """Install ADMM penalty targets: rho = (rho_j, rho_u, rho_f)."""
        rho = np.asarray(rho, dtype=float)
        if np.any(rho < 0.0):
            raise SolverError("penalty weights must be >= 0")
        self.rho = rho
        self.target_joints = None if target_joints is None else np.asarray(target_joints, dtype=float)
        self.target_controls = None if target_controls is None else np.asarray(target_controls, dtype=float)
        self.target_lambda = None if target_lambda is None else np.asarray(target_lambda, dtype=float)

    @staticmethod
    def lam(x):
        """Consensus-constrained entries lambda = (pose_rate(6), F_e(3))."""
        return x[..., 20:29]

    def _tracking_terms(self, x, i, scale):
        dF = x[26:29] - self.force_ref[i]
        q = x[0:7]
        p, _ = self.chain.fk(q)
        e = p - self.pose_ref[i]
        s = np.sqrt(e @ e + self.pose_eps**2)
        return scale * float(dF @ self.Q_F @ dF + self.w_pose * s)

    def _penalty_terms(self, x, u, i):
        val = 0.0
        if self.target_joints is not None and self.rho[0] > 0.0:
            d = x[0:7] - self.target_joints[i]
            val += 0.5 * self.rho[0] * (d @ d)
        if u is not None and self.target_controls is not None and self.rho[1] > 0.0:
            d = u - self.target_controls[i]
            val += 0.5 * self.rho[1] * (d @ d)
        if self.target_lambda is not None and self.rho[2] > 0.0:
            d = self.lam(x) - self.target_lambda[i]
            val += 0.5 * self.rho[2] * (d @ d)
        return val

    def stage(self, x, u, i):
        return (self._tracking_terms(x, i, 1.0) + float(u @ self.R_u @ u)
                + self._penalty_terms(x, u, i))

    def terminal(self, x):
        i = self.force_ref.shape[0] - 1
        return self._tracking_terms(x, i, self.terminal_scale) + self._penalty_terms(x, None, i)

    def total(self, xs, us):
        N = us.shape[0]
        qs = xs[:, 0:7]
        p, _ = self.chain.fk(qs)
        e = p - self.pose_ref[: N + 1]
        s = np.sqrt(np.einsum("ij,ij->i", e, e) + self.pose_eps**2)
        dF = xs[:, 26:29] - self.force_ref[: N + 1]
        track = np.einsum("ij,jk,ik->i", dF, self.Q_F, dF) + self.w_pose * s
        J = track[:N].sum() + self.terminal_scale * track[N]
        J += np.einsum("ij,jk,ik->", us, self.R_u, us)
        if self.target_joints is not None and self.rho[0] > 0.0:
            d = qs - self.target_joints
            J += 0.5 * self.rho[0] * np.einsum("ij,ij->", d, d)
        if self.target_controls is not None and self.rho[1] > 0.0:
            d = us - self.target_controls
            J += 0.5 * self.rho[1] * np.einsum("ij,ij->", d, d)
        if self.target_lambda is not None and self.rho[2] > 0.0:
            d = self.lam(xs) - self.target_lambda
            J += 0.5 * self.rho[2] * np.einsum("ij,ij->", d, d)
        return float(J)

    def tracking_total(self, xs, us):
        """Objective value without the consensus penalty terms."""
        N = us.shape[0]
        qs = xs[:, 0:7]
        p, _ = self.chain.fk(qs)
        e = p - self.pose_ref[: N + 1]
        s = np.sqrt(np.einsum("ij,ij->i", e, e) + self.pose_eps**2)
        dF = xs[:, 26:29] - self.force_ref[: N + 1]
        track = np.einsum("ij,jk,ik->i", dF, self.Q_F, dF) + self.w_pose * s
        return float(track[:N].sum() + self.terminal_scale * track[N]
                     + np.einsum("ij,jk,ik->", us, self.R_u, us))

    def _pose_expansion(self, qs, refs):
        """Gauss-Newton gradient/Hessian of the smoothed pose norm, batched."""
        p, _ = self.chain.fk(qs)
        J = self.chain.jacobian(qs)[..., :3, :]
        e = p - refs
        s = np.sqrt(np.einsum("...i,...i->...", e, e) + self.pose_eps**2)
        Jte = np.einsum("...ji,...j->...i", J, e)
        grad = self.w_pose * Jte / s[..., None]
        JtJ = np.einsum("...ji,...jk->...ik", J, J)
        hess = self.w_pose * (JtJ / s[..., None, None]
                              - np.einsum("...i,...j->...ij", Jte, Jte) / (s**3)[..., None, None])
        return grad, hess

    def expansion(self, x, u, i):
        lx_all, lu_all, lxx_all, luu_all, lux_all = self.expansion_all(
            np.vstack([x, x]), u[None, :], index_base=i)
        return lx_all[0], lu_all[0], lxx_all[0], luu_all[0], lux_all[0]

    def terminal_expansion(self, x):
        i = self.force_ref.shape[0] - 1
        lx = np.zeros(29)
        lxx = np.zeros((29, 29))
        dF = x[26:29] - self.force_ref[i]
        lx[26:29] = self.terminal_scale * 2.0 * self.Q_F @ dF
        lxx[26:29, 26:29] = self.terminal_scale * 2.0 * self.Q_F
        grad, hess = self._pose_expansion(x[None, 0:7], self.pose_ref[i][None, :])
        lx[0:7] += self.terminal_scale * grad[0]
        lxx[0:7, 0:7] += self.terminal_scale * hess[0]
        if self.target_joints is not None and self.rho[0] > 0.0:
            lx[0:7] += self.rho[0] * (x[0:7] - self.target_joints[i])
            lxx[0:7, 0:7] += self.rho[0] * np.eye(7)
        if self.target_lambda is not None and self.rho[2] > 0.0:
            lx[20:29] += self.rho[2] * (self.lam(x) - self.target_lambda[i])
            lxx[20:29, 20:29] += self.rho[2] * np.eye(9)
        return lx, lxx

    def expansion_all(self, xs, us, index_base: int = 0):
        """Stacked cost expansions along a trajectory (terminal included)."""
        N = us.shape[0]
        lx = np.zeros((N + 1, 29))
        lxx = np.zeros((N + 1, 29, 29))
        lu = np.zeros((N, 13))
        luu = np.zeros((N, 13, 13))
        lux = np.zeros((N, 13, 29))

        idx = index_base + np.arange(N + 1)
        dF = xs[: N + 1, 26:29] - self.force_ref[idx]
        grad, hess = self._pose_expansion(xs[: N + 1, 0:7], self.pose_ref[idx])

        # stage rows (terminal tracking terms carry the terminal scale)
        scale = np.ones(N + 1)
        scale[N] = self.terminal_scale
        lx[:, 26:29] = scale[:, None] * (2.0 * dF @ self.Q_F.T)
        lxx[:, 26:29, 26:29] = scale[:, None, None] * (2.0 * self.Q_F)
        lx[:, 0:7] += scale[:, None] * grad
        lxx[:, 0:7, 0:7] += scale[:, None, None] * hess

        lu[:] = 2.0 * us @ self.R_u.T
        luu[:] = 2.0 * self.R_u

        if self.target_joints is not None and self.rho[0] > 0.0:
            lx[:, 0:7] += self.rho[0] * (xs[: N + 1, 0:7] - self.target_joints[idx])
            lxx[:, 0:7, 0:7] += self.rho[0] * np.eye(7)
        if self.target_controls is not None and self.rho[1] > 0.0:
            lu += self.rho[1] * (us - self.target_controls[index_base:index_base + N])
            luu += self.rho[1] * np.eye(13)
        if self.target_lambda is not None and self.rho[2] > 0.0:
            lx[:, 20:29] += self.rho[2] * (self.lam(xs[: N + 1]) - self.target_lambda[idx])
            lxx[:, 20:29, 20:29] += self.rho[2] * np.eye(9)
        return lx, lu, lxx, luu, lux


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

def stage_cost(x, u, i, cost) -> float:
    """Scalar stage cost (functional wrapper over the cost model)."""
    return cost.stage(np.asarray(x, dtype=float), np.asarray(u, dtype=float), i)


def cost_expansion(x, u, i, cost):
    """Gradients and Hessians (lx, lu, lxx, luu, lux) of the stage cost."""
    return cost.expansion(np.asarray(x, dtype=float), np.asarray(u, dtype=float), i)


def backward_pass(A, B, lx, lu, lxx, luu, lux, reg):
    """Riccati value recursion with Levenberg-style regularization.

    ``reg`` is applied both to Q_uu and to the value Hessian used for the
    gain computation, so a large regularizer tapers the feedback matrices
    toward zero and the update toward a short plain-gradient step (that
    keeps line-search candidates inside the quadratic model's validity
    region even when the cost carries near-kink curvature). The value
    recursion itself uses the unregularized quantities.

    Returns (K, k, delta1, delta2, grad_norm) or None when some regularized
    Q_uu is not positive definite; the expected cost change of a step with
    parameter alpha is alpha*delta1 + alpha^2*delta2.
    """
    N = lu.shape[0]
    n, m = lx.shape[1], lu.shape[1]
    K = np.empty((N, m, n))
    k = np.empty((N, m))
    Vx = lx[N].copy()
    Vxx = lxx[N].copy()
    delta1 = 0.0
    delta2 = 0.0
    grad_norm = 0.0
    eye_m = np.eye(m)
    eye_n = np.eye(n)
    for i in range(N - 1, -1, -1):
        Ai, Bi = A[i], B[i]
        Qx = lx[i] + Ai.T @ Vx
        Qu = lu[i] + Bi.T @ Vx
        VxxA = Vxx @ Ai
        Qxx = lxx[i] + Ai.T @ VxxA
        Qux = lux[i] + Bi.T @ VxxA
        Quu = luu[i] + Bi.T @ Vxx @ Bi
        if reg > 0.0:
            Vxx_reg = Vxx + reg * eye_n
            Qux_hat = lux[i] + Bi.T @ Vxx_reg @ Ai
            Quu_hat = luu[i] + Bi.T @ Vxx_reg @ Bi + reg * eye_m
        else:
            Qux_hat = Qux
            Quu_hat = Quu
        try:
            L = np.linalg.cholesky(0.5 * (Quu_hat + Quu_hat.T))
        except np.linalg.LinAlgError:
            return None
        rhs = np.column_stack([Qu, Qux_hat])
        sol = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
        k[i] = -sol[:, 0]
        K[i] = -sol[:, 1:]
        delta1 += float(k[i] @ Qu)
        delta2 += 0.5 * float(k[i] @ Quu @ k[i])
        grad_norm = max(grad_norm, float(np.max(np.abs(Qu))))
        Vx = Qx + K[i].T @ Quu @ k[i] + K[i].T @ Qu + Qux.T @ k[i]
        Vxx = Qxx + K[i].T @ Quu @ K[i] + K[i].T @ Qux + Qux.T @ K[i]
        Vxx = 0.5 * (Vxx + Vxx.T)
    return K, k, delta1, delta2, grad_norm


def forward_pass(dynamics, cost, xs, us, K, k, alpha):
    """Line-searched rollout: u_new = u + alpha*k + K (x_new - x).

    Returns (xs_new, us_new, J_new) or None when the rollout leaves the
    finite domain (including integrator guards such as gimbal proximity).
    """
    N = us.shape[0]
    xs_new = np.empty_like(xs)
    us_new = np.empty_like(us)
    xs_new[0] = xs[0]
    for i in range(N):
        us_new[i] = us[i] + alpha * k[i] + K[i] @ (xs_new[i] - xs[i])
        try:
            xs_new[i + 1] = dynamics.step(i, xs_new[i], us_new[i])
        except SingularityError:
            return None
        if not np.all(np.isfinite(xs_new[i + 1])):
            return None
    return xs_new, us_new, cost.total(xs_new, us_new)


class DdpSolver:
    """Iterated backward/forward passes with backtracking line search."""

    def __init__(self, dynamics, cost, options: DdpOptions | None = None):
        self.dynamics = dynamics
        self.cost = cost
        self.options = options or DdpOptions()
        self.reg = self.options.reg_init

    def solve(self, x0=None, us_init=None, warm_start: TrajectoryPair | None = None):
        """Optimize from a control guess or warm-start trajectory.

        Returns (TrajectoryPair, DdpReport). The warm-start trajectory must
        be dynamically feasible (its states re-integrate under the model);
        its cost is re-evaluated because penalty targets may have changed.
        """
        opts = self.options
        self.reg = min(max(self.reg, opts.reg_min), max(opts.reg_init, 1.0))
        if warm_start is not None:
            xs = warm_start.states.copy()
            us = warm_start.controls.copy()
        else:
            us = np.asarray(us_init, dtype=float).copy()
            xs = self.dynamics.rollout(np.asarray(x0, dtype=float), us)
        J = self.cost.total(xs, us)
        if not np.isfinite(J):
            # a diverged incumbent loses every comparison; make that explicit
            J = np.inf

        K = k = None
        history = []
        converged = False
        gave_up = False
        grad_norm = np.inf
        iters_used = 0
        for it in range(1, opts.max_iters + 1):
            iters_used = it
            A, B = self.dynamics.linearize_trajectory(xs, us)
            lx, lu, lxx, luu, lux = self.cost.expansion_all(xs, us)

            # inner Levenberg loop: a failed line search raises the
            # regularizer and recomputes gains against the same
            # linearization (relinearizing an unchanged trajectory is waste)
            accepted = False
            alpha_used = 0.0
            while True:
                bp = backward_pass(A, B, lx, lu, lxx, luu, lux, self.reg)
                if bp is None:
                    self.reg *= 10.0
                    if self.reg > opts.reg_max:
                        raise SolverError("Q_uu not positive definite at maximum regularization")
                    continue
                K, k, delta1, delta2, grad_norm = bp

                if grad_norm < opts.tol_grad:
                    converged = True
                    break

                for alpha in _LS_ALPHAS[: opts.line_search_steps]:
                    expected = -(alpha * delta1 + alpha * alpha * delta2)
                    out = forward_pass(self.dynamics, self.cost, xs, us, K, k, alpha)
                    if out is None:
                        continue
                    xs_new, us_new, J_new = out
                    if not np.isfinite(J_new):
                        continue
                    if np.isfinite(J) and expected > 0.0:
                        ok = (J - J_new) >= opts.accept_ratio * expected
                    else:
                        ok = J_new < J
                    if ok:
                        accepted = True
                        alpha_used = alpha
                        improvement = J - J_new
                        xs, us, J = xs_new, us_new, J_new
                        break
                if accepted:
                    self.reg = max(self.reg * 0.5, opts.reg_min)
                    break
                self.reg *= 10.0
                if self.reg > opts.reg_max:
                    gave_up = True
                    break

            history.append({"iter": it, "cost": J, "grad_norm": grad_norm,
                            "reg": self.reg, "alpha": alpha_used})
            if converged or gave_up:
                break
            if accepted and improvement < opts.tol_cost * max(1.0, abs(J)):
                converged = True
                break

        traj = TrajectoryPair(states=xs, controls=us, cost=J, gains_K=K, gains_k=k)
        return traj, DdpReport(iterations=iters_used, converged=converged, cost=J,
                               grad_norm=grad_norm, reg=self.reg, history=history)


def solve_ddp(dynamics, cost, x0=None, us_init=None,
              warm_start: TrajectoryPair | None = None,
              options: DdpOptions | None = None):
    """One-shot functional entry point; see :class:`DdpSolver.solve`."""
    solver = DdpSolver(dynamics, cost, options)
    return solver.solve(x0=x0, us_init=us_init, warm_start=warm_start)
