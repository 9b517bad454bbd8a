"""Run configuration (INI) and CSV trace I/O.

One structured-text file describes a run, with sections [material],
[geometry], [chain], [tool], [scenario], [solver], [admm], [controller] and
[run]. Every float in emitted CSVs is serialized with 17 significant digits
so reruns are byte-comparable.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass

import numpy as np

from .admm import AdmmOptions, ConstraintSets, FrictionCone
from .chain import Joint, KinematicChain, default_chain
from .contact import ContactGeometry, MaterialParams
from .ddp import DdpOptions
from .dynamics import SoftContactSystem, ToolBody
from .errors import ConfigError
from .paths import Scenario
from .simulate import ControllerGains

FLOAT_FMT = "%.17g"

TRAJECTORY_COLUMNS = (
    ["time"]
    + [f"x_M[{i}]" for i in range(7)]
    + [f"xd_M[{i}]" for i in range(7)]
    + [f"x_E[{i}]" for i in range(6)]
    + [f"xd_E[{i}]" for i in range(6)]
    + [f"F_e[{i}]" for i in range(3)]
    + [f"W_u[{i}]" for i in range(6)]
    + [f"tau_u[{i}]" for i in range(7)]
)


def _floats(text, expected=None):
    vals = np.array([float(v) for v in str(text).replace(";", ",").split(",")])
    if expected is not None and vals.size != expected:
        raise ConfigError(f"expected {expected} comma-separated floats, got {vals.size}")
    return vals


def _fmt_list(values):
    return ",".join(FLOAT_FMT % float(v) for v in np.atleast_1d(values))


DEFAULT_CONFIG = f"""
[material]
young_tool_pa = inf
young_surface_pa = 1e5
poisson_tool = 0.3
poisson_surface = 0.48
mu = 0.4512
k_d = 13.1315
rigid_tool = true

[geometry]
tool_radius_m = 0.01
surface_normal = 0,0,1

[chain]
home = 0.0,0.8,0.0,-1.4,0.0,0.9,0.0

[tool]
mass_kg = 1.2
inertia_diag = 0.01,0.01,0.004
r_cb_m = 0,0,0.08
r_ce_m = 0,0,-0.12
gravity = 0,0,-9.81

[scenario]
kind = circle
duration_s = 5.0
f_z_desired_n = 5.0
surface_height_m = 0.85
center_xy = 0.5,0.0
radius_m = 0.05

[solver]
dt = 0.01
horizon = 500
max_iters = 10
tol_cost = 1e-6
tol_grad = 1e-6
reg_init = 1e-6
line_search_steps = 11
q_f_diag = 1.0,1.0,1.0
r_u_wrench = 1e-4
r_u_torque = 1e-6
w_p = 200.0
terminal_scale = 10.0

[admm]
rho_j = 1.0
rho_u = 1.0
rho_f = 1.0
tol_primal = 1e-2
tol_dual = 1e-2
max_admm_iters = 50
wrench_lower = -60,-60,-60,-15,-15,-15
wrench_upper = 60,60,60,15,15,15
torque_lower = -120,-120,-120,-120,-80,-40,-40
torque_upper = 120,120,120,120,80,40,40
g_offset_n = 0.0

[controller]
k_diag = 400.0,400.0,400.0
d_diag = 40.0,40.0,40.0
joint_kp = 80
joint_kd = 12

[run]
seed = 0
"""


@dataclass
class RunConfig:
    """Everything a solve or rollout needs, parsed from one INI file."""

    material: MaterialParams
    geometry: ContactGeometry
    chain: KinematicChain
    tool: ToolBody
    scenario: Scenario
    home: np.ndarray
    dt: float
    horizon: int
    ddp_options: DdpOptions
    admm_options: AdmmOptions
    q_f_diag: np.ndarray
    r_u_diag: np.ndarray
    w_p: float
    terminal_scale: float
    wrench_lower: np.ndarray
    wrench_upper: np.ndarray
    torque_lower: np.ndarray
    torque_upper: np.ndarray
    g_offset: float
    gains: ControllerGains
    seed: int
    raw: configparser.ConfigParser

    def build_system(self) -> SoftContactSystem:
        return SoftContactSystem(chain=self.chain, tool=self.tool, material=self.material,
                                 geometry=self.geometry,
                                 surface_height=self.scenario.surface_height)

    def control_bounds(self):
        lower = np.concatenate([self.wrench_lower, self.torque_lower])
        upper = np.concatenate([self.wrench_upper, self.torque_upper])
        return lower, upper

    def constraint_sets(self, curvature_radii) -> ConstraintSets:
        lower, upper = self.control_bounds()
        cone = FrictionCone(mass=self.tool.mass, mu=self.material.mu,
                            g_offset=self.g_offset, normal=self.geometry.normal,
                            curvature_radii=curvature_radii)
        return ConstraintSets(joint_lower=self.chain.lower_limits,
                              joint_upper=self.chain.upper_limits,
                              control_lower=lower, control_upper=upper,
                              friction=cone)


def parse_config(parser: configparser.ConfigParser) -> RunConfig:
    try:
        material = MaterialParams.from_config_dict(dict(parser["material"]))
        geometry = ContactGeometry.from_config_dict(dict(parser["geometry"]))

        chain_sec = parser["chain"] if parser.has_section("chain") else {}
        chain = load_chain(chain_sec["file"]) if "file" in chain_sec else default_chain()
        home = _floats(chain_sec.get("home", "0,0.8,0,-1.4,0,0.9,0"), 7)

        tool_sec = parser["tool"]
        tool = ToolBody(
            mass=float(tool_sec["mass_kg"]),
            inertia_diag=_floats(tool_sec["inertia_diag"], 3),
            r_cb=_floats(tool_sec["r_cb_m"], 3),
            r_ce=_floats(tool_sec["r_ce_m"], 3),
            gravity=_floats(tool_sec.get("gravity", "0,0,-9.81"), 3),
        )

        sc = parser["scenario"]
        kind = sc["kind"].strip()
        kwargs = dict(kind=kind, duration=float(sc["duration_s"]),
                      f_z_desired=float(sc["f_z_desired_n"]),
                      surface_height=float(sc["surface_height_m"]))
        if kind == "line":
            kwargs["start"] = _floats(sc["start_xy"], 2)
            kwargs["end"] = _floats(sc["end_xy"], 2)
        elif kind == "circle":
            kwargs["center"] = _floats(sc["center_xy"], 2)
            kwargs["radius"] = float(sc["radius_m"])
        else:
            kwargs["center"] = _floats(sc["center_xy"], 2)
            kwargs["lobe"] = float(sc["lobe_m"])
        scenario = Scenario(**kwargs)

        so = parser["solver"]
        ddp = DdpOptions(max_iters=int(so.get("max_iters", 10)),
                         tol_cost=float(so.get("tol_cost", 1e-6)),
                         tol_grad=float(so.get("tol_grad", 1e-6)),
                         reg_init=float(so.get("reg_init", 1e-6)),
                         line_search_steps=int(so.get("line_search_steps", 11)))
        am = parser["admm"]
        admm = AdmmOptions(rho_joint=float(am.get("rho_j", 1.0)),
                           rho_control=float(am.get("rho_u", 1.0)),
                           rho_friction=float(am.get("rho_f", 1.0)),
                           tol_primal=float(am.get("tol_primal", 1e-2)),
                           tol_dual=float(am.get("tol_dual", 1e-2)),
                           max_iters=int(am.get("max_admm_iters", 50)),
                           ddp=ddp)

        co = parser["controller"] if parser.has_section("controller") else {}
        gains = ControllerGains(
            stiffness=np.diag(_floats(co.get("k_diag", "400,400,400"), 3)),
            damping=np.diag(_floats(co.get("d_diag", "40,40,40"), 3)),
            joint_kp=np.full(7, float(co.get("joint_kp", 80.0))),
            joint_kd=np.full(7, float(co.get("joint_kd", 12.0))),
            rot_kp=float(co.get("rot_kp", 100.0)),
            rot_kd=float(co.get("rot_kd", 20.0)),
        )

        r_wrench = float(so.get("r_u_wrench", so.get("r_u", 1e-4)))
        r_torque = float(so.get("r_u_torque", so.get("r_u", 1e-6)))
        return RunConfig(
            material=material, geometry=geometry, chain=chain, tool=tool,
            scenario=scenario, home=home,
            dt=float(so.get("dt", 0.01)), horizon=int(so.get("horizon", 500)),
            ddp_options=ddp, admm_options=admm,
            q_f_diag=_floats(so.get("q_f_diag", "1,1,1"), 3),
            r_u_diag=np.concatenate([np.full(6, r_wrench), np.full(7, r_torque)]),
            w_p=float(so.get("w_p", 200.0)),
            terminal_scale=float(so.get("terminal_scale", 10.0)),
            wrench_lower=_floats(am.get("wrench_lower", "-60,-60,-60,-15,-15,-15"), 6),
            wrench_upper=_floats(am.get("wrench_upper", "60,60,60,15,15,15"), 6),
            torque_lower=_floats(am.get("torque_lower", "-120,-120,-120,-120,-80,-40,-40"), 7),
            torque_upper=_floats(am.get("torque_upper", "120,120,120,120,80,40,40"), 7),
            g_offset=float(am.get("g_offset_n", 0.0)),
            gains=gains,
            seed=int(parser.get("run", "seed", fallback="0")),
            raw=parser,
        )
    except (KeyError, ValueError) as err:
        raise ConfigError(f"invalid run configuration: {err}") from err


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    return parse_config(parser)


def load_config_text(text: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string(text)
    return parse_config(parser)


def default_config_text() -> str:
    return DEFAULT_CONFIG.strip() + "\n"


# ---------------------------------------------------------------------------
# chain description files
# ---------------------------------------------------------------------------

def load_chain(path) -> KinematicChain:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not parser.read(path):
        raise ConfigError(f"cannot read chain file {path}")
    joints = []
    k = 1
    while parser.has_section(f"joint{k}"):
        sec = parser[f"joint{k}"]
        inertia6 = _floats(sec["inertia"], 6)
        inertia = np.array([
            [inertia6[0], inertia6[3], inertia6[4]],
            [inertia6[3], inertia6[1], inertia6[5]],
            [inertia6[4], inertia6[5], inertia6[2]],
        ])
        limits = _floats(sec["limits"], 2)
        joints.append(Joint(
            axis=_floats(sec["axis"], 3),
            origin_xyz=_floats(sec["xyz"], 3),
            origin_rpy=_floats(sec.get("rpy", "0,0,0"), 3),
            mass=float(sec["mass"]),
            com=_floats(sec["com"], 3),
            inertia=inertia,
            lower=float(limits[0]),
            upper=float(limits[1]),
        ))
        k += 1
    if not joints:
        raise ConfigError("chain file defines no joints")
    mount = parser["tool_mount"] if parser.has_section("tool_mount") else {}
    return KinematicChain(
        joints=tuple(joints),
        tool_xyz=_floats(mount.get("xyz", "0,0,0"), 3),
        tool_rpy=_floats(mount.get("rpy", "0,0,0"), 3),
    )


def save_chain(path, chain: KinematicChain):
    parser = configparser.ConfigParser()
    for k, joint in enumerate(chain.joints, start=1):
        I = joint.inertia
        parser[f"joint{k}"] = {
            "axis": _fmt_list(joint.axis),
            "xyz": _fmt_list(joint.origin_xyz),
            "rpy": _fmt_list(joint.origin_rpy),
            "mass": FLOAT_FMT % joint.mass,
            "com": _fmt_list(joint.com),
            "inertia": _fmt_list([I[0, 0], I[1, 1], I[2, 2], I[0, 1], I[0, 2], I[1, 2]]),
            "limits": _fmt_list([joint.lower, joint.upper]),
        }
    parser["tool_mount"] = {"xyz": _fmt_list(chain.tool_xyz), "rpy": _fmt_list(chain.tool_rpy)}
    with open(path, "w") as fh:
        parser.write(fh)


# ---------------------------------------------------------------------------
# CSV traces
# ---------------------------------------------------------------------------

def save_trajectory(path, dt, states, controls):
    """Trajectory CSV: N+1 rows; the final row has no controls (nan)."""
    states = np.asarray(states, dtype=float)
    controls = np.asarray(controls, dtype=float)
    N = controls.shape[0]
    rows = np.full((N + 1, len(TRAJECTORY_COLUMNS)), np.nan)
    rows[:, 0] = dt * np.arange(N + 1)
    rows[:, 1:30] = states
    rows[:N, 30:43] = controls
    _write_csv(path, TRAJECTORY_COLUMNS, rows)


def load_trajectory(path):
    """Returns (times (N+1,), states (N+1, 29), controls (N, 13))."""
    header, rows = _read_csv(path)
    if header != TRAJECTORY_COLUMNS:
        raise ConfigError(f"{path} is not a trajectory CSV (unexpected header)")
    times = rows[:, 0]
    states = rows[:, 1:30]
    controls = rows[:-1, 30:43]
    if np.any(~np.isfinite(states)):
        raise ConfigError(f"{path} contains non-finite states")
    return times, states, controls


def reference_states(reference) -> np.ndarray:
    """Reference as trajectory-shaped states: pose + tangent velocity + force."""
    n = reference.positions.shape[0]
    states = np.zeros((n, 29))
    states[:, 14:17] = reference.positions
    states[:, 20:23] = reference.tangents * reference.speed
    states[:, 26:29] = reference.forces
    return states


def save_residuals(path, history):
    cols = ["iter", "r_primal", "s_dual", "ddp_iters", "cost"]
    rows = np.array([[h["iter"], h["r_primal"], h["s_dual"], h["ddp_iters"], h["cost"]]
                     for h in history])
    _write_csv(path, cols, rows.reshape(-1, 5))


def save_ddp_log(path, rows):
    cols = ["iter", "cost", "grad_norm", "reg", "alpha"]
    data = np.array([[r["iter"], r["cost"], r["grad_norm"], r["reg"], r["alpha"]]
                     for r in rows])
    _write_csv(path, cols, data.reshape(-1, 5))


def save_metrics(path, metric_rows):
    keys = [k for k in metric_rows[0] if k != "trace"]
    cols = ["trace"] + keys
    lines = [",".join(cols)]
    for row in metric_rows:
        lines.append(",".join([str(row["trace"])] + [FLOAT_FMT % row[k] for k in keys]))
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _write_csv(path, columns, rows):
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in np.atleast_2d(rows):
        buf.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    if hasattr(path, "write"):
        path.write(buf.getvalue())
    else:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())


def _read_csv(path):
    with open(path, newline="") as fh:
        header = fh.readline().strip().split(",")
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, rows


def load_probe_csv(path):
    """Probing CSV with columns (f_n, d_m); returns (force, indentation)."""
    header, rows = _read_csv(path)
    if header[:2] != ["f_n", "d_m"]:
        raise ConfigError(f"{path} must have header f_n,d_m")
    return rows[:, 0], rows[:, 1]


def load_sliding_csv(path):
    """Sliding CSV with columns (f_fric_n, v_mps, f_z_n)."""
    header, rows = _read_csv(path)
    if header[:3] != ["f_fric_n", "v_mps", "f_z_n"]:
        raise ConfigError(f"{path} must have header f_fric_n,v_mps,f_z_n")
    return rows[:, 0], rows[:, 1], rows[:, 2]


def write_manifest(path, parser: configparser.ConfigParser, extras: dict):
    """Echo the full configuration plus run metadata."""
    out = configparser.ConfigParser()
    out.read_dict({section: dict(parser[section]) for section in parser.sections()})
    out["manifest"] = {k: str(v) for k, v in extras.items()}
    with open(path, "w") as fh:
        out.write(fh)
