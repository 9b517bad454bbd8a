"""Scenario definitions and reference-path construction.

A scenario names a planar path on the surface (line, circle, or a Gerono
lemniscate figure-eight), a duration, and the desired pressing force. The
reference builder samples it at the solver rate with constant tangential
speed and produces, per timestep, the desired tooltip position, the unit
path tangent (the sliding-direction hint), the local curvature radius, and
the desired force vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

PATH_KINDS = ("line", "circle", "figure_eight")


@dataclass(frozen=True)
class Scenario:
    """One planning task: path kind, geometry, duration and desired force."""

    kind: str
    duration: float
    f_z_desired: float
    surface_height: float = 0.0
    # line: start/end xy; circle: center xy + radius; figure_eight: center xy + lobe
    start: np.ndarray | None = None
    end: np.ndarray | None = None
    center: np.ndarray | None = None
    radius: float | None = None
    lobe: float | None = None

    def __post_init__(self):
        if self.kind not in PATH_KINDS:
            raise ConfigError(f"path kind must be one of {PATH_KINDS}, got {self.kind!r}")
        if self.duration <= 0.0:
            raise ConfigError("duration must be positive")
        if self.f_z_desired < 0.0:
            raise ConfigError("desired normal force must be >= 0")
        if self.kind == "line":
            if self.start is None or self.end is None:
                raise ConfigError("line scenario needs start and end")
            object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
            object.__setattr__(self, "end", np.asarray(self.end, dtype=float))
        elif self.kind == "circle":
            if self.center is None or self.radius is None or self.radius <= 0.0:
                raise ConfigError("circle scenario needs a center and positive radius")
            object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        else:
            if self.center is None or self.lobe is None or self.lobe <= 0.0:
                raise ConfigError("figure_eight scenario needs a center and positive lobe")
            object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    @property
    def desired_force(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.f_z_desired])


@dataclass(frozen=True)
class ReferencePath:
    """Sampled reference: one row per knot (N+1 rows for an N-step horizon)."""

    positions: np.ndarray       # (N+1, 3) world
    tangents: np.ndarray        # (N+1, 3) unit
    curvature_radii: np.ndarray  # (N+1,), inf on straight segments
    forces: np.ndarray          # (N+1, 3) desired contact force
    speed: float

    @property
    def horizon(self) -> int:
        return self.positions.shape[0] - 1


def _gerono_xy(t, lobe):
    return np.stack([lobe * np.sin(t), lobe * np.sin(t) * np.cos(t)], axis=-1)


def gerono_curvature_radius(t, lobe):
    """Analytic curvature radius of x = A sin t, y = A sin t cos t.

    kappa = |x' y'' - y' x''| / (x'^2 + y'^2)^(3/2); the radius is inf where
    kappa vanishes (the lemniscate crossing is an inflection of each branch).
    """
    t = np.asarray(t, dtype=float)
    xd = lobe * np.cos(t)
    yd = lobe * np.cos(2.0 * t)
    xdd = -lobe * np.sin(t)
    ydd = -2.0 * lobe * np.sin(2.0 * t)
    num = np.abs(xd * ydd - yd * xdd)
    den = (xd**2 + yd**2) ** 1.5
    with np.errstate(divide="ignore"):
        out = np.where(num > 0.0, den / np.where(num > 0.0, num, 1.0), np.inf)
    return out if out.ndim else float(out)


def build_reference(scenario: Scenario, dt: float, horizon: int) -> ReferencePath:
    """Sample the scenario path at constant tangential speed.

    Returns N+1 knots for an N-step horizon; the total duration is
    horizon * dt (the scenario duration is used to set the speed). Curvature
    radii come from geometry: inf for lines, the radius for circles, the
    analytic formula for the lemniscate.
    """
    N = int(horizon)
    if N < 1:
        raise ConfigError("horizon must be at least 1")
    if abs(N * dt - scenario.duration) > 1e-9 * max(1.0, scenario.duration):
        raise ConfigError(
            f"horizon * dt = {N * dt} must equal the scenario duration {scenario.duration}")
    z = scenario.surface_height
    forces = np.tile(scenario.desired_force, (N + 1, 1))

    if scenario.kind == "line":
        delta = scenario.end - scenario.start
        length = float(np.linalg.norm(delta))
        if length == 0.0:
            raise ConfigError("line endpoints coincide")
        direction = delta / length
        s = np.linspace(0.0, length, N + 1)
        xy = scenario.start + s[:, None] * direction
        positions = np.column_stack([xy, np.full(N + 1, z)])
        tangents = np.tile(np.append(direction, 0.0), (N + 1, 1))
        radii = np.full(N + 1, np.inf)
        speed = length / scenario.duration
        return ReferencePath(positions, tangents, radii, forces, speed)

    if scenario.kind == "circle":
        r = float(scenario.radius)
        phi = 2.0 * np.pi * np.arange(N + 1) / N
        xy = scenario.center + r * np.column_stack([np.cos(phi), np.sin(phi)])
        positions = np.column_stack([xy, np.full(N + 1, z)])
        tangents = np.column_stack([-np.sin(phi), np.cos(phi), np.zeros(N + 1)])
        radii = np.full(N + 1, r)
        speed = 2.0 * np.pi * r / scenario.duration
        return ReferencePath(positions, tangents, radii, forces, speed)

    # figure-eight: arc-length reparameterization for constant speed
    lobe = float(scenario.lobe)
    t_fine = np.linspace(0.0, 2.0 * np.pi, 40001)
    xy_fine = _gerono_xy(t_fine, lobe)
    seg = np.linalg.norm(np.diff(xy_fine, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    s_knots = total * np.arange(N + 1) / N
    t_knots = np.interp(s_knots, arc, t_fine)
    xy = scenario.center + _gerono_xy(t_knots, lobe)
    positions = np.column_stack([xy, np.full(N + 1, z)])
    vel = np.column_stack([lobe * np.cos(t_knots), lobe * np.cos(2.0 * t_knots)])
    norms = np.linalg.norm(vel, axis=1)
    tangents = np.column_stack([vel / norms[:, None], np.zeros(N + 1)])
    radii = gerono_curvature_radius(t_knots, lobe)
    speed = total / scenario.duration
    return ReferencePath(positions, tangents, radii, forces, speed)
