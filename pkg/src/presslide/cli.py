"""Command-line entry point.

Subcommands: ``solve`` (plan a scenario), ``rollout`` (simulate a plan under
both controller conditions), ``identify-young`` / ``identify-friction``
(material fits from CSV records), ``compare`` (metrics of two traces against
a reference). Exit codes: 0 success, 2 non-convergence, 1 bad configuration
or data.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .admm import AdmmSolver
from .chain import ik_position
from .config import (
    RunConfig,
    load_config,
    load_probe_csv,
    load_sliding_csv,
    load_trajectory,
    reference_states,
    save_ddp_log,
    save_metrics,
    save_residuals,
    save_trajectory,
    write_manifest,
)
from .ddp import SystemDynamics, TrackingCost, TrajectoryPair
from .errors import ConfigError, PresslideError
from .identify import FrictionModelEstimator, YoungModulusEstimator
from .paths import ReferencePath, build_reference
from .simulate import compare_traces, rollout_position_control, rollout_wrench_control


def joint_reference_path(chain, reference, home):
    """IK-tracked joint path along the reference positions, warm-started."""
    n = reference.positions.shape[0]
    q_path = np.empty((n, 7))
    q, err = ik_position(chain, reference.positions[0], home)
    if err > 1e-6:
        raise ConfigError(f"path start unreachable by the chain (IK error {err:.2e} m)")
    q_path[0] = q
    for i in range(1, n):
        q, err = ik_position(chain, reference.positions[i], q_path[i - 1], iters=30)
        if err > 1e-4:
            raise ConfigError(f"reference point {i} unreachable (IK error {err:.2e} m)")
        q_path[i] = q
    return q_path


def initial_guess(cfg: RunConfig, system, reference):
    """Dynamically feasible starting trajectory for the solver.

    The wrench guess balances tool gravity and the desired contact force;
    the torque sequence is recorded from a rollout with a joint PD loop
    around the IK-tracked joint path (a bare constant-torque rollout of the
    unstabilized arm diverges long before the horizon ends).
    """
    N = cfg.horizon
    dt = cfg.dt
    q_path = joint_reference_path(cfg.chain, reference, cfg.home)
    qd_path = np.gradient(q_path, dt, axis=0)

    x0 = np.zeros(29)
    x0[0:7] = q_path[0]
    x0[7:14] = qd_path[0]
    x0[14:17] = reference.positions[0]
    x0[20:23] = reference.tangents[0] * reference.speed
    x0[26:29] = reference.forces[0]

    xs = np.empty((N + 1, 29))
    us = np.empty((N, 13))
    xs[0] = x0
    kp, kd = cfg.gains.joint_kp, cfg.gains.joint_kd
    for i in range(N):
        x = xs[i]
        q, qd = x[0:7], x[7:14]
        u = np.zeros(13)
        u[0:3] = reference.forces[i] - cfg.tool.mass * cfg.tool.gravity
        # computed-torque PD: gains are mass-normalized rates, so light wrist
        # joints do not blow past the integrator's stability region
        accel_cmd = kp * (q_path[i] - q) + kd * (qd_path[i] - qd)
        u[6:13] = (cfg.chain.gravity_torque(q) + cfg.chain.jacobian(q).T @ u[0:6]
                   + cfg.chain.mass_matrix(q) @ accel_cmd)
        us[i] = u
        xs[i + 1] = system.step(x, u, dt, reference.curvature_radii[i],
                                reference.tangents[i])
    if not np.all(np.isfinite(xs)):
        raise ConfigError("stabilized initial rollout diverged; check chain/tool "
                          "parameters and controller gains")
    return TrajectoryPair(states=xs, controls=us, cost=np.nan)


def build_problem(cfg: RunConfig, system=None):
    """Assemble system, reference, initial trajectory, cost and solver."""
    if system is None:
        system = cfg.build_system()
    reference = build_reference(cfg.scenario, cfg.dt, cfg.horizon)
    initial = initial_guess(cfg, system, reference)

    dynamics = SystemDynamics(system, cfg.dt, cfg.horizon,
                              curvature_radii=reference.curvature_radii[: cfg.horizon],
                              tangent_hints=reference.tangents[: cfg.horizon])
    cost = TrackingCost(chain=cfg.chain, Q_F=np.diag(cfg.q_f_diag),
                        R_u=np.diag(cfg.r_u_diag), w_pose=cfg.w_p,
                        force_ref=reference.forces, pose_ref=reference.positions,
                        terminal_scale=cfg.terminal_scale)
    sets = cfg.constraint_sets(reference.curvature_radii)
    solver = AdmmSolver(dynamics, cost, sets, cfg.admm_options)
    return system, reference, solver, initial


def run_solve(config_path, out_dir) -> int:
    cfg = load_config(config_path)
    out = Path(out_dir) if out_dir else Path(f"run_{time.strftime('%Y%m%d_%H%M%S')}")
    out.mkdir(parents=True, exist_ok=True)

    t_start = time.perf_counter()
    system, reference, solver, initial = build_problem(cfg)
    traj, report = solver.solve(initial_traj=initial)
    elapsed = time.perf_counter() - t_start

    # emitted controls satisfy the configured boxes exactly
    lower, upper = cfg.control_bounds()
    projected = np.clip(traj.controls, lower, upper)
    max_projection_shift = float(np.max(np.abs(projected - traj.controls)))

    save_trajectory(out / "plan.csv", cfg.dt, traj.states, projected)
    save_trajectory(out / "reference.csv", cfg.dt, reference_states(reference),
                    np.zeros((cfg.horizon, 13)))
    save_residuals(out / "residuals.csv", report.history)
    save_ddp_log(out / "ddp_log.csv", report.ddp_history)
    write_manifest(out / "manifest.ini", cfg.raw, {
        "version": __version__,
        "seed": cfg.seed,
        "converged": report.converged,
        "admm_iterations": report.iterations,
        "residual_primal": report.residual_primal,
        "residual_dual": report.residual_dual,
        "cost": report.cost,
        "max_joint_violation": report.max_joint_violation,
        "max_control_violation": report.max_control_violation,
        "max_friction_violation": report.max_friction_violation,
        "plan_projection_shift": max_projection_shift,
        "elapsed_s": f"{elapsed:.3f}",
    })
    status = "converged" if report.converged else "NOT converged"
    print(f"solve {status} in {report.iterations} iterations "
          f"(primal {report.residual_primal:.3e}, dual {report.residual_dual:.3e}); "
          f"outputs in {out}")
    return 0 if report.converged else 2


def run_rollout(config_path, plan_path, out_dir) -> int:
    cfg = load_config(config_path)
    times, states, controls = load_trajectory(plan_path)
    N = controls.shape[0]
    if N < 1:
        raise ConfigError(f"{plan_path} holds no control rows")
    dt = float(times[1] - times[0])
    if abs(N * dt - cfg.scenario.duration) > 1e-6:
        raise ConfigError("plan horizon does not match the configured scenario duration")
    reference = build_reference(cfg.scenario, dt, N)
    system = cfg.build_system()
    plan = TrajectoryPair(states=states, controls=controls)

    wrench = rollout_wrench_control(system, plan, reference, cfg.gains, dt)
    position = rollout_position_control(system, plan, reference, cfg.gains, dt)

    out = Path(out_dir) if out_dir else Path(plan_path).parent
    out.mkdir(parents=True, exist_ok=True)
    save_trajectory(out / "rollout_wrench.csv", dt, wrench.states, wrench.commands)
    save_trajectory(out / "rollout_position.csv", dt, position.states, position.commands)
    cone = cfg.constraint_sets(reference.curvature_radii).friction
    rows = compare_traces(wrench, position, reference, cone,
                          labels=("wrench", "position"))
    save_metrics(out / "metrics.csv", rows)
    print(f"rollouts written to {out}")
    return 0


def run_compare(a_path, b_path, ref_path, config_path, out_path) -> int:
    from .simulate import SimTrace

    traces = []
    for path in (a_path, b_path):
        times, states, controls = load_trajectory(path)
        if times.size < 2:
            raise ConfigError(f"{path} holds fewer than two samples")
        traces.append(SimTrace(times=times, states=states, commands=controls))
    _, ref_states_arr, _ = load_trajectory(ref_path)
    n = ref_states_arr.shape[0]

    cone = None
    radii = np.full(n, np.inf)
    if config_path:
        cfg = load_config(config_path)
        reference = build_reference(cfg.scenario, float(traces[0].times[1] - traces[0].times[0]),
                                    n - 1)
        radii = reference.curvature_radii
        cone = cfg.constraint_sets(radii).friction
    reference = ReferencePath(
        positions=ref_states_arr[:, 14:17],
        tangents=np.zeros((n, 3)),
        curvature_radii=radii,
        forces=ref_states_arr[:, 26:29],
        speed=0.0,
    )
    rows = compare_traces(traces[0], traces[1], reference, cone,
                          labels=(Path(a_path).stem, Path(b_path).stem))
    if out_path:
        save_metrics(out_path, rows)
    else:
        save_metrics(sys.stdout, rows)
    return 0


def run_identify_young(probe_path, radius, out_path) -> int:
    force, depth = load_probe_csv(probe_path)
    est = YoungModulusEstimator(radius=radius).fit(force, depth)
    report = est.report()
    text = report.to_text() + "\n" + report.to_csv_line() + "\n"
    if out_path:
        Path(out_path).write_text(text)
    print(text, end="")
    return 0 if report.converged else 2


def run_identify_friction(sliding_path, nu, radius, young, cap, out_path) -> int:
    fric, speed, fz = load_sliding_csv(sliding_path)
    est = FrictionModelEstimator(radius=radius, poisson=nu, young=young,
                                 max_normal_force=cap)
    est.fit(np.column_stack([speed, fz]), fric)
    report = est.report()
    text = report.to_text() + "\n" + report.to_csv_line() + "\n"
    if out_path:
        Path(out_path).write_text(text)
    print(text, end="")
    return 0 if report.converged else 2


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="presslide",
        description="Plan and simulate pressing-and-sliding tool motions on a soft surface.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="plan a scenario from a config file")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="output directory (default run_<timestamp>)")

    p = sub.add_parser("rollout", help="simulate a plan under both controller conditions")
    p.add_argument("config")
    p.add_argument("plan")
    p.add_argument("--out", default=None, help="output directory (default: plan's directory)")

    p = sub.add_parser("identify-young", help="fit the combined modulus from probe data")
    p.add_argument("probe_csv")
    p.add_argument("--radius", type=float, required=True, help="tool radius [m]")
    p.add_argument("--out", default=None)

    p = sub.add_parser("identify-friction", help="fit (mu, k_d) from sliding data")
    p.add_argument("sliding_csv")
    p.add_argument("--nu", type=float, required=True, help="surface Poisson ratio")
    p.add_argument("--radius", type=float, required=True, help="tool radius [m]")
    p.add_argument("--young", type=float, required=True, help="combined modulus [Pa]")
    p.add_argument("--cap", type=float, default=None, help="normal-force fit window cap [N]")
    p.add_argument("--out", default=None)

    p = sub.add_parser("compare", help="metrics of two traces against a reference trace")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("reference")
    p.add_argument("--config", default=None, help="config for the friction-violation metric")
    p.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return run_solve(args.config, args.out)
        if args.command == "rollout":
            return run_rollout(args.config, args.plan, args.out)
        if args.command == "identify-young":
            return run_identify_young(args.probe_csv, args.radius, args.out)
        if args.command == "identify-friction":
            return run_identify_friction(args.sliding_csv, args.nu, args.radius,
                                         args.young, args.cap, args.out)
        if args.command == "compare":
            return run_compare(args.a, args.b, args.reference, args.config, args.out)
        raise ConfigError(f"unknown command {args.command!r}")
    except PresslideError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
