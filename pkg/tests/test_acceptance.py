"""Acceptance suite: every criterion at its stated tolerance and budget.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them on
success; failures surface through the asserts as usual).
"""

import math
import time

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from presslide.admm import project_control, project_friction, project_joint, FrictionCone
from presslide.chain import default_chain
from presslide.cli import build_problem
from presslide.config import default_config_text, load_config_text
from presslide.contact import (
    ContactConfiguration,
    ContactGeometry,
    MaterialParams,
    friction_force,
    friction_force_rate,
    indentation_from_force,
    indentation_rate,
    radial_force_rate,
    stress_normal_z,
)
from presslide.ddp import LinearDynamics, QuadraticCost, solve_ddp
from presslide.identify import FrictionModelEstimator
from presslide.simulate import rollout_position_control, rollout_wrench_control, trace_metrics

from test_ddp import random_lqr, riccati_optimal  # noqa: E402
from test_identify import sliding_data, TRUE_MU, TRUE_KD, RADIUS, TRUE_E, NU  # noqa: E402


def _report(criterion, detail):
    print(f"ACCEPTANCE {criterion}: PASS - {detail}")


@pytest.fixture(scope="module")
def circle_solution():
    """The headline scenario: circle r = 0.05 m, 5 s, F_z = 5 N, N = 500."""
    cfg = load_config_text(default_config_text())
    t0 = time.perf_counter()
    system, reference, solver, initial = build_problem(cfg)
    traj, report = solver.solve(initial_traj=initial)
    elapsed = time.perf_counter() - t0
    return cfg, system, reference, traj, report, elapsed


def test_criterion_1_hertz_load_conservation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    for _ in range(20):
        force = rng.uniform(0.1, 30.0)
        mat = MaterialParams(young_tool=math.inf, young_surface=rng.uniform(2e4, 5e6),
                             poisson_tool=0.3, poisson_surface=rng.uniform(0.0, 0.5),
                             rigid_tool=True)
        geom = ContactGeometry(radius=rng.uniform(2e-3, 5e-2))
        cfg = ContactConfiguration.from_force(force, mat, geom)
        integral, _ = quad(lambda r: -stress_normal_z(r, cfg) * 2.0 * math.pi * r,
                           0.0, cfg.contact_radius, epsabs=1e-13, epsrel=1e-13)
        assert abs(integral - force) <= 1e-8 * force
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report(1, f"20 random load-conservation quadratures within 1e-8 in {elapsed:.2f} s")


def test_criterion_2_rate_models_match_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    geom = ContactGeometry(radius=0.01)
    h = 1e-6
    for trial in range(10):
        mat = MaterialParams(young_tool=math.inf, young_surface=rng.uniform(5e4, 5e5),
                             poisson_tool=0.3, poisson_surface=rng.uniform(0.0, 0.5),
                             mu=rng.uniform(0.2, 0.8), k_d=rng.uniform(0.0, 20.0),
                             rigid_tool=True)
        a_f, b_f = rng.uniform(3.0, 8.0), rng.uniform(0.5, 2.0)
        a_v, b_v = rng.uniform(0.02, 0.2), rng.uniform(0.01, 0.05)
        w1, w2 = rng.uniform(0.5, 3.0, 2)
        rc = rng.uniform(0.03, 0.5)
        m_tool = rng.uniform(0.5, 3.0)

        def fz(t):
            return a_f + b_f * math.sin(w1 * t)

        def vel(t):
            return a_v + b_v * math.sin(w2 * t)

        for t in np.linspace(0.3, 2.0, 7):
            fzdot = b_f * w1 * math.cos(w1 * t)
            vdot = b_v * w2 * math.cos(w2 * t)

            # indentation rate (z = -d)
            fd = -(indentation_from_force(fz(t + h), mat, geom)
                   - indentation_from_force(fz(t - h), mat, geom)) / (2 * h)
            zdot = indentation_rate(fz(t), fzdot, mat, geom)
            assert abs(zdot - fd) <= 1e-5 * max(abs(fd), 1e-12)

            # friction force rate
            fd = (friction_force(fz(t + h), vel(t + h), mat, geom)
                  - friction_force(fz(t - h), vel(t - h), mat, geom)) / (2 * h)
            d = indentation_from_force(fz(t), mat, geom)
            rate = friction_force_rate(fz(t), fzdot, d, zdot, vdot, mat, geom)
            assert abs(rate - fd) <= 1e-5 * max(abs(fd), 1e-9)

            # radial force rate
            fd = (m_tool * vel(t + h) ** 2 / rc - m_tool * vel(t - h) ** 2 / rc) / (2 * h)
            rrate = radial_force_rate(m_tool, vel(t), vdot, rc)
            assert abs(rrate - fd) <= 1e-5 * max(abs(fd), 1e-9)

            # assembled force vector against its integral counterpart in a
            # fixed sliding frame
            from presslide.contact import ContactForceState, contact_force_ode

            state = ContactForceState(force=np.array([0.0, 0.0, fz(t)]),
                                      n_v=np.array([1.0, 0.0, 0.0]),
                                      n_perp=np.array([0.0, -1.0, 0.0]),
                                      normal=np.array([0.0, 0.0, 1.0]))

            def force_vec(tt):
                f_th = friction_force(fz(tt), vel(tt), mat, geom)
                f_r = m_tool * vel(tt) ** 2 / rc
                return (fz(tt) * state.normal + f_th * state.n_v + f_r * state.n_perp)

            fd_vec = (force_vec(t + h) - force_vec(t - h)) / (2 * h)
            ode = contact_force_ode(state, d, -zdot, fz(t), fzdot, vel(t), vdot,
                                    mat, geom, rc, tool_mass=m_tool)
            assert np.all(np.abs(ode - fd_vec) <= 1e-5 * np.maximum(np.abs(fd_vec), 1e-9))
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    _report(2, f"analytic rates match finite differences along 10 paths in {elapsed:.2f} s")


def test_criterion_3_ddp_matches_riccati():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    N = 100
    for _ in range(10):
        n = int(rng.integers(2, 30))
        m = int(rng.integers(1, min(n, 13) + 1))
        A, B, Q, R, Qf = random_lqr(n, m, rng)
        x0 = rng.normal(size=n)
        J_star, _, _ = riccati_optimal(A, B, Q, R, Qf, x0, N)
        traj, report = solve_ddp(LinearDynamics(A, B), QuadraticCost(Q, R, Qf),
                                 x0=x0, us_init=np.zeros((N, m)))
        assert abs(traj.cost - J_star) <= 1e-7 * max(1.0, abs(J_star))
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    _report(3, f"10 LTI instances within 1e-7 of the Riccati optimum in {elapsed:.1f} s")


def test_criterion_4_admm_matches_dense_qp():
    from scipy.optimize import lsq_linear

    from presslide.admm import AdmmOptions, AdmmSolver, ConstraintSets
    from presslide.ddp import DdpOptions

    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    n, m, N = 4, 2, 20
    A = np.eye(n) + 0.1 * np.eye(n, k=1)
    B = rng.normal(size=(n, m)) * 0.4
    Q, R, Qf = np.eye(n), 0.05 * np.eye(m), 5.0 * np.eye(n)
    x0 = np.array([2.0, -1.0, 1.5, 0.5])
    lo, hi = -0.6, 0.6

    dyn = LinearDynamics(A, B)
    cost = QuadraticCost(Q, R, Qf)
    sets = ConstraintSets(control_lower=np.full(m, lo), control_upper=np.full(m, hi))
    opts = AdmmOptions(tol_primal=1e-5, tol_dual=1e-5, max_iters=300,
                       ddp=DdpOptions(reg_init=1e-10, max_iters=20))
    solver = AdmmSolver(dyn, cost, sets, opts,
                        state_slice=slice(0, 0), lambda_slice=slice(0, 0))
    traj, report = solver.solve(x0=x0, us_init=np.zeros((N, m)))

    # dense transcription solved by bounded least squares on the cholesky
    # factor of the condensed Hessian
    nu = N * m
    Phi = np.zeros((N + 1, n, nu))
    xs_free = np.zeros((N + 1, n))
    xs_free[0] = x0
    for i in range(N):
        xs_free[i + 1] = A @ xs_free[i]
        Phi[i + 1] = A @ Phi[i]
        Phi[i + 1][:, i * m:(i + 1) * m] += B
    H = np.zeros((nu, nu))
    g = np.zeros(nu)
    for i in range(1, N):
        H += 2.0 * Phi[i].T @ Q @ Phi[i]
        g += 2.0 * Phi[i].T @ Q @ xs_free[i]
    for i in range(N):
        H[i * m:(i + 1) * m, i * m:(i + 1) * m] += 2.0 * R
    H += 2.0 * Phi[N].T @ Qf @ Phi[N]
    g += 2.0 * Phi[N].T @ Qf @ xs_free[N]
    L = np.linalg.cholesky(0.5 * (H + H.T))
    sol = lsq_linear(L.T, -np.linalg.solve(L, g), bounds=(lo, hi), tol=1e-14)
    u_qp = sol.x.reshape(N, m)
    J_qp = QuadraticCost(Q, R, Qf).total(dyn.rollout(x0, u_qp), u_qp)

    assert np.any(np.isclose(np.abs(u_qp), hi, atol=1e-8)), "bounds must be active"
    assert report.converged
    assert abs(traj.cost - J_qp) <= 1e-3 * abs(J_qp)
    # projected copies satisfy the box exactly (clamp output, no tolerance)
    controls_hat = solver.last_workspace_.controls_hat
    assert np.all(controls_hat >= lo) and np.all(controls_hat <= hi)
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    _report(4, f"toy box-constrained problem within {abs(traj.cost - J_qp) / J_qp:.1e} "
               f"of the dense QP in {elapsed:.1f} s")


def test_criterion_5_circle_residuals(circle_solution):
    cfg, system, reference, traj, report, elapsed = circle_solution
    assert report.converged, "circle scenario did not reach the residual tolerances"
    assert report.iterations <= 50
    assert report.residual_primal < 1e-2
    assert report.residual_dual < 1e-2
    assert elapsed < 600.0
    _report(5, f"circle scenario residuals ({report.residual_primal:.1e}, "
               f"{report.residual_dual:.1e}) after {report.iterations} iterations "
               f"in {elapsed:.0f} s")


def test_criterion_6_warm_started_ddp_iterations(circle_solution):
    _, _, _, _, report, _ = circle_solution
    later = [h["ddp_iters"] for h in report.history[1:]]
    assert later, "need at least two iterations to judge warm starting"
    assert max(later) <= 10
    _report(6, f"warm-started DDP calls used at most {max(later)} iterations")


def test_criterion_7_identification_recovery():
    t0 = time.perf_counter()
    # noiseless: six significant digits
    speed, fz, fric = sliding_data()
    est = FrictionModelEstimator(radius=RADIUS, poisson=NU, young=TRUE_E)
    est.fit(np.column_stack([speed, fz]), fric)
    assert abs(est.mu_ - TRUE_MU) <= 1e-6 * TRUE_MU
    assert abs(est.k_d_ - TRUE_KD) <= 1e-6 * TRUE_KD

    # 1% multiplicative noise: median error within 2% over 100 seeds
    errors_mu, errors_kd = [], []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        speed, fz, fric = sliding_data(rng=rng, noise=0.01)
        est = FrictionModelEstimator(radius=RADIUS, poisson=NU, young=TRUE_E)
        est.fit(np.column_stack([speed, fz]), fric)
        errors_mu.append(abs(est.mu_ - TRUE_MU) / TRUE_MU)
        errors_kd.append(abs(est.k_d_ - TRUE_KD) / TRUE_KD)
    assert np.median(errors_mu) <= 0.02
    assert np.median(errors_kd) <= 0.02
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    _report(7, f"(mu, k_d) recovered to 6 digits noiseless; median noisy errors "
               f"({np.median(errors_mu):.2%}, {np.median(errors_kd):.2%}) in {elapsed:.0f} s")


def test_criterion_8_controller_ordering(circle_solution):
    t0 = time.perf_counter()
    results = {}

    cfg, system, reference, traj, _, _ = circle_solution
    wrench = rollout_wrench_control(system, traj, reference, cfg.gains, cfg.dt)
    position = rollout_position_control(system, traj, reference, cfg.gains, cfg.dt)
    results["circle"] = (trace_metrics(wrench, reference)["rms_force_err_n"],
                         trace_metrics(position, reference)["rms_force_err_n"])

    # line and figure-eight at a reduced horizon
    scenario_blocks = {
        "line": "kind = line\nstart_xy = 0.46,-0.04\nend_xy = 0.54,0.04",
        "figure_eight": "kind = figure_eight\ncenter_xy = 0.5,0.0\nlobe_m = 0.045",
    }
    for name, block in scenario_blocks.items():
        text = (default_config_text()
                .replace("kind = circle", block.splitlines()[0])
                .replace("center_xy = 0.5,0.0\nradius_m = 0.05",
                         "\n".join(block.splitlines()[1:]))
                .replace("duration_s = 5.0", "duration_s = 3.0")
                .replace("horizon = 500", "horizon = 150")
                .replace("dt = 0.01", "dt = 0.02"))
        scfg = load_config_text(text)
        ssystem, sreference, ssolver, sinitial = build_problem(scfg)
        straj, sreport = ssolver.solve(initial_traj=sinitial)
        assert sreport.converged, f"{name} scenario solve did not converge"
        w = rollout_wrench_control(ssystem, straj, sreference, scfg.gains, scfg.dt)
        p = rollout_position_control(ssystem, straj, sreference, scfg.gains, scfg.dt)
        results[name] = (trace_metrics(w, sreference)["rms_force_err_n"],
                         trace_metrics(p, sreference)["rms_force_err_n"])

    for name, (err_wrench, err_position) in results.items():
        assert err_wrench < err_position, (
            f"{name}: wrench RMS force error {err_wrench} not below "
            f"position control's {err_position}")
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    detail = ", ".join(f"{k}: {a:.3f} < {b:.3f} N" for k, (a, b) in results.items())
    _report(8, f"wrench control beats position control on force ({detail}) "
               f"in {elapsed:.0f} s")


def test_criterion_9_invariant_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(909)
    chain = default_chain()

    # projection idempotence and nearest-point optimality
    lo, hi = -np.ones(13) * 0.7, np.ones(13) * 1.3
    cone = FrictionCone(mass=1.2, mu=0.45, curvature_radii=0.05)
    for _ in range(1000):
        z = rng.normal(size=13) * 2.0
        p = project_control(z, lo, hi)
        assert np.array_equal(project_control(p, lo, hi), p)
        lam = np.concatenate([rng.normal(size=3) * 0.5, rng.normal(size=3),
                              rng.normal(size=3) * 3.0])
        pl = project_friction(lam, cone)
        assert_allclose(project_friction(pl, cone), pl, atol=1e-12)
    for _ in range(100):
        z = rng.normal(size=7) * 3.0
        p = project_joint(z, chain.lower_limits, chain.upper_limits)
        y = rng.uniform(chain.lower_limits, chain.upper_limits)
        assert np.linalg.norm(z - p) <= np.linalg.norm(z - y) + 1e-12

    # mass matrix SPD over 1000 draws
    qs = rng.uniform(chain.lower_limits * 0.95, chain.upper_limits * 0.95, size=(1000, 7))
    M = chain.mass_matrix(qs)
    assert np.all(np.linalg.eigvalsh(M) > 0.0)
    assert_allclose(M, np.swapaxes(M, -1, -2), atol=1e-10)

    # passivity structure
    for _ in range(10):
        q = rng.uniform(chain.lower_limits * 0.6, chain.upper_limits * 0.6)
        qd = rng.normal(size=7)
        val = qd @ (chain.mass_matrix_rate(q, qd) - 2.0 * chain.coriolis_matrix(q, qd)) @ qd
        assert abs(val) < 1e-8

    # FK/Jacobian consistency along a smooth analytic path: J q_dot against
    # a fourth-order stencil of FK(q(t)), which resolves the 1e-6 level
    freqs = np.linspace(0.3, 0.8, 7) * 2 * np.pi
    amps = np.linspace(0.2, 0.4, 7)

    def q_of(tt):
        return amps * np.sin(freqs * tt)

    def qd_of(tt):
        return amps * freqs * np.cos(freqs * tt)

    h = 1e-3
    for t_eval in np.linspace(0.05, 0.95, 25):
        v = chain.jacobian(q_of(t_eval))[:3] @ qd_of(t_eval)
        fd = (chain.fk(q_of(t_eval - 2 * h))[0] - 8 * chain.fk(q_of(t_eval - h))[0]
              + 8 * chain.fk(q_of(t_eval + h))[0] - chain.fk(q_of(t_eval + 2 * h))[0]) / (12 * h)
        assert np.linalg.norm(v - fd) < 1e-6

    # integrator order on a spinning free-flight benchmark
    from presslide.dynamics import SoftContactSystem, ToolBody

    tool = ToolBody(mass=1.2, inertia_diag=np.array([0.01, 0.01, 0.004]),
                    r_cb=np.array([0.0, 0.0, 0.08]), r_ce=np.array([0.0, 0.0, -0.12]))
    mat = MaterialParams(young_tool=math.inf, young_surface=1e5, poisson_tool=0.3,
                         poisson_surface=0.48, mu=0.4512, k_d=13.1315, rigid_tool=True)
    system = SoftContactSystem(chain=chain, tool=tool, material=mat,
                               geometry=ContactGeometry(radius=0.01), surface_height=-10.0)
    x = np.zeros(29)
    x[14:17] = [0.4, 0.0, 0.3]
    x[20] = 0.2
    x[23:26] = [0.8, 0.5, -0.6]
    u = np.zeros(13)
    u[0:3] = -tool.mass * tool.gravity
    u[3:6] = [0.02, -0.01, 0.015]
    u[6:13] = chain.gravity_torque(x[0:7])

    def final(dt_step):
        return system.rollout(x, np.tile(u, (round(0.4 / dt_step), 1)), dt=dt_step)[-1]

    ref = final(1e-4)
    errs = [np.linalg.norm(final(dt_step) - ref) for dt_step in (0.02, 0.01, 0.005)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 8.0 < coarse / fine < 32.0

    # determinism of rollout and linearization
    us = np.tile(u, (50, 1))
    r1 = system.rollout(x, us, dt=0.01)
    r2 = system.rollout(x, us, dt=0.01)
    assert np.array_equal(r1, r2)
    A1, B1 = system.linearize_trajectory(r1[:50], us, 0.01)
    A2, B2 = system.linearize_trajectory(r1[:50], us, 0.01)
    assert np.array_equal(A1, A2) and np.array_equal(B1, B2)

    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    _report(9, f"projection/dynamics/integrator/determinism invariants clean "
               f"in {elapsed:.0f} s")
