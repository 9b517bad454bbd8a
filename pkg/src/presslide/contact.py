"""Visco-static contact model for a spherical tool pressing on a soft surface.

Closed-form quasi-static normal contact (indentation, contact radius, mean
pressure), the surface stress and deformation fields, a sliding-friction
model with a deformation-dependent correction, and the assembled first-order
dynamics of the contact force vector. Two alternative visco-elastic normal
force laws (Kelvin-Voigt and Hunt-Crossley) are provided as well.

All quantities are strict SI: m, s, kg, N, Pa. Most scalar operations accept
numpy arrays and broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularityError

# Load floor used inside cube-root terms of the force dynamics so the ODE
# stays Lipschitz through touchdown.
DEFAULT_FORCE_FLOOR = 1e-4

# Below this fraction of the contact radius the r^-2 bracket in the radial and
# hoop stresses is replaced by its analytic limit (exactly 1).
_BRACKET_LIMIT_FRACTION = 1e-8


@dataclass(frozen=True)
class MaterialParams:
    """Elastic and frictional constants of the tool/surface pair.

    Parameters
    ----------
    young_tool : float
        Young's modulus of the tool material [Pa]. Ignored when
        ``rigid_tool`` is set.
    young_surface : float
        Young's modulus of the soft surface [Pa].
    poisson_tool, poisson_surface : float
        Poisson ratios, each in (-1, 0.5].
    mu : float
        Sliding friction coefficient, >= 0.
    k_d : float
        Damping coefficient in the moving direction [N s/m], >= 0.
    rigid_tool : bool
        Treat the tool as infinitely stiff; the combined modulus then
        reduces to ``young_surface / (1 - poisson_surface**2)``.
    """

    young_tool: float
    young_surface: float
    poisson_tool: float
    poisson_surface: float
    mu: float = 0.0
    k_d: float = 0.0
    rigid_tool: bool = False

    def __post_init__(self):
        if not self.rigid_tool and not (0.0 < self.young_tool < math.inf):
            raise DomainError(f"young_tool must be positive and finite, got {self.young_tool}")
        if not (0.0 < self.young_surface < math.inf):
            raise DomainError(f"young_surface must be positive and finite, got {self.young_surface}")
        for name in ("poisson_tool", "poisson_surface"):
            nu = getattr(self, name)
            if not (-1.0 < nu <= 0.5):
                raise DomainError(f"{name} must lie in (-1, 0.5], got {nu}")
        if self.mu < 0.0:
            raise DomainError(f"mu must be >= 0, got {self.mu}")
        if self.k_d < 0.0:
            raise DomainError(f"k_d must be >= 0, got {self.k_d}")
        E = self.reduced_modulus
        if not (0.0 < E < math.inf):
            raise DomainError(f"reduced modulus must be positive and finite, got {E}")

    @property
    def reduced_modulus(self) -> float:
        """Combined modulus E: 1/E = (1-nu1^2)/E1 + (1-nu2^2)/E2."""
        inv = (1.0 - self.poisson_surface**2) / self.young_surface
        if not self.rigid_tool:
            inv += (1.0 - self.poisson_tool**2) / self.young_tool
        return 1.0 / inv

    def to_config_dict(self) -> dict:
        return {
            "young_tool_pa": repr(float(self.young_tool)),
            "young_surface_pa": repr(float(self.young_surface)),
            "poisson_tool": repr(float(self.poisson_tool)),
            "poisson_surface": repr(float(self.poisson_surface)),
            "mu": repr(float(self.mu)),
            "k_d": repr(float(self.k_d)),
            "rigid_tool": str(self.rigid_tool).lower(),
        }

    @classmethod
    def from_config_dict(cls, block: dict) -> "MaterialParams":
        return cls(
            young_tool=float(block.get("young_tool_pa", "inf")),
            young_surface=float(block["young_surface_pa"]),
            poisson_tool=float(block.get("poisson_tool", 0.3)),
            poisson_surface=float(block["poisson_surface"]),
            mu=float(block.get("mu", 0.0)),
            k_d=float(block.get("k_d", 0.0)),
            rigid_tool=str(block.get("rigid_tool", "false")).lower() in ("1", "true", "yes"),
        )


@dataclass(frozen=True)
class ContactGeometry:
    """Spherical tool tip of radius ``radius`` on a plane with unit normal ``normal``."""

    radius: float
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        if self.radius <= 0.0:
            raise DomainError(f"tool radius must be > 0, got {self.radius}")
        n = np.asarray(self.normal, dtype=float)
        if n.shape != (3,):
            raise DomainError("surface normal must be a 3-vector")
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise DomainError("surface normal must have unit norm (within 1e-12)")
        object.__setattr__(self, "normal", n)

    def to_config_dict(self) -> dict:
        return {
            "tool_radius_m": repr(float(self.radius)),
            "surface_normal": ",".join(repr(float(v)) for v in self.normal),
        }

    @classmethod
    def from_config_dict(cls, block: dict) -> "ContactGeometry":
        normal = block.get("surface_normal", "0,0,1")
        n = np.array([float(v) for v in str(normal).split(",")])
        return cls(radius=float(block["tool_radius_m"]), normal=n)


@dataclass(frozen=True)
class ContactConfiguration:
    """A mutually consistent quasi-static contact state.

    ``indentation``, ``contact_radius`` and ``mean_pressure`` are all
    determined by the normal load through the quasi-static law; use the
    factories to build consistent instances.
    """

    normal_force: float
    indentation: float
    contact_radius: float
    mean_pressure: float

    def __post_init__(self):
        if self.normal_force < 0.0 or self.indentation < 0.0 or self.contact_radius < 0.0:
            raise DomainError("contact configuration entries must be non-negative")
        a, pm, f = self.contact_radius, self.mean_pressure, self.normal_force
        if a > 0.0:
            if abs(pm * math.pi * a**2 - f) > 1e-10 * max(1.0, abs(f)):
                raise DomainError("mean pressure inconsistent with load and contact radius")
        elif pm != 0.0:
            raise DomainError("mean pressure must be 0 at zero contact radius")

    @classmethod
    def from_force(cls, force: float, mat: MaterialParams, geom: ContactGeometry) -> "ContactConfiguration":
        d = indentation_from_force(force, mat, geom)
        a = math.sqrt(geom.radius * d)
        pm = force / (math.pi * a**2) if a > 0.0 else 0.0
        return cls(normal_force=float(force), indentation=float(d), contact_radius=a, mean_pressure=pm)

    @classmethod
    def from_indentation(cls, depth: float, mat: MaterialParams, geom: ContactGeometry) -> "ContactConfiguration":
        f = force_from_indentation(depth, mat, geom)
        a = math.sqrt(geom.radius * depth)
        pm = f / (math.pi * a**2) if a > 0.0 else 0.0
        return cls(normal_force=float(f), indentation=float(depth), contact_radius=a, mean_pressure=pm)

    @property
    def sphere_radius(self) -> float:
        """Tool radius recovered from a^2 = R d."""
        if self.indentation == 0.0:
            raise SingularityError("sphere radius undefined at zero indentation")
        return self.contact_radius**2 / self.indentation


@dataclass(frozen=True)
class StressTensor3:
    """Symmetric stress state at a contact point, cylindrical components [Pa].

    The cylindrical representation is

        [[sigma_r,   0,        sigma_rz],
         [0,         sigma_t,  0       ],
         [sigma_rz,  0,        sigma_z ]]

    and the Cartesian form at azimuth/polar angle ``theta`` is T^T sigma T
    with the rotation ``cylindrical_to_cartesian_transform(theta)``.
    """

    sigma_r: float
    sigma_t: float
    sigma_z: float
    sigma_rz: float = 0.0
    frame: str = "cylindrical"

    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.sigma_r, 0.0, self.sigma_rz],
                [0.0, self.sigma_t, 0.0],
                [self.sigma_rz, 0.0, self.sigma_z],
            ]
        )

    def cartesian(self, theta: float) -> np.ndarray:
        T = cylindrical_to_cartesian_transform(theta)
        return T.T @ self.matrix() @ T


@dataclass(frozen=True)
class ContactForceState:
    """Contact force vector and the orthonormal sliding frame carrying it.

    ``n_v`` is the moving direction, ``n_perp`` the in-plane direction
    orthogonal to it and ``normal`` the surface normal, with
    n_perp x n_v = normal.
    """

    force: np.ndarray
    n_v: np.ndarray
    n_perp: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.force, dtype=float)
        basis = [np.asarray(v, dtype=float) for v in (self.n_v, self.n_perp, self.normal)]
        for v in basis:
            if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-10:
                raise DomainError("sliding frame vectors must be unit 3-vectors")
        for i in range(3):
            for j in range(i + 1, 3):
                if abs(basis[i] @ basis[j]) > 1e-10:
                    raise DomainError("sliding frame must be orthonormal")
        if np.linalg.norm(np.cross(basis[1], basis[0]) - basis[2]) > 1e-10:
            raise DomainError("sliding frame must satisfy n_perp x n_v = normal")
        object.__setattr__(self, "force", f)
        object.__setattr__(self, "n_v", basis[0])
        object.__setattr__(self, "n_perp", basis[1])
        object.__setattr__(self, "normal", basis[2])


def sliding_frame(velocity, normal, hint=None):
    """Build the (n_v, n_perp) sliding frame from a tooltip velocity.

    The moving direction is the unit tangential part of ``velocity``. When
    the tangential speed is below 1e-6 m/s the direction is taken from
    ``hint`` (the planner's path tangent), which must be supplied in that
    case.
    """
    n = np.asarray(normal, dtype=float)
    v = np.asarray(velocity, dtype=float)
    v_t = v - (v @ n) * n
    speed = np.linalg.norm(v_t)
    if speed >= 1e-6:
        n_v = v_t / speed
    else:
        if hint is None:
            raise SingularityError("moving direction undefined at rest and no hint supplied")
        h = np.asarray(hint, dtype=float)
        h_t = h - (h @ n) * n
        hn = np.linalg.norm(h_t)
        if hn < 1e-12:
            raise SingularityError("sliding-direction hint is parallel to the surface normal")
        n_v = h_t / hn
    return n_v, np.cross(n_v, n)


# ---------------------------------------------------------------------------
# quasi-static normal contact
# ---------------------------------------------------------------------------

def indentation_from_force(force, mat: MaterialParams, geom: ContactGeometry):
    """Static indentation depth under a normal load.

    d = (9 F^2 / (16 E^2 R))^(1/3); monotone increasing in F, d(0) = 0.
    """
    f = np.asarray(force, dtype=float)
    if np.any(f < 0.0):
        raise DomainError("normal load must be >= 0")
    E = mat.reduced_modulus
    out = np.cbrt(9.0 * f**2 / (16.0 * E**2 * geom.radius))
    return out if out.ndim else float(out)


def force_from_indentation(depth, mat: MaterialParams, geom: ContactGeometry):
    """Normal load producing a given static indentation.

    Exact algebraic inverse of :func:`indentation_from_force`:
    F = (4/3) E sqrt(R) d^(3/2).
    """
    d = np.asarray(depth, dtype=float)
    if np.any(d < 0.0):
        raise DomainError("indentation must be >= 0")
    E = mat.reduced_modulus
    out = (4.0 / 3.0) * E * math.sqrt(geom.radius) * d**1.5
    return out if out.ndim else float(out)


def indentation_rate(normal_force, normal_force_rate, mat: MaterialParams, geom: ContactGeometry):
    """Surface-normal position rate z_dot = -d_dot under a changing load.

    z_dot = -(1 / (6 E^2 R F_z))^(1/3) * F_z_dot. Singular at zero load.
    """
    f = np.asarray(normal_force, dtype=float)
    if np.any(f <= 0.0):
        raise SingularityError("indentation rate is singular at F_z <= 0")
    E = mat.reduced_modulus
    out = -np.cbrt(1.0 / (6.0 * E**2 * geom.radius * f)) * np.asarray(normal_force_rate, dtype=float)
    return out if out.ndim else float(out)


def normal_force_rate(normal_force, indentation_rate_value, mat: MaterialParams,
                      geom: ContactGeometry, eps_force: float = DEFAULT_FORCE_FLOOR):
    """Load rate produced by an indentation rate: F_z_dot = (6 E^2 R F_z)^(1/3) d_dot.

    The load is clamped to ``eps_force`` inside the cube root so the
    expression stays finite through touchdown.
    """
    f = np.maximum(np.asarray(normal_force, dtype=float), eps_force)
    E = mat.reduced_modulus
    out = np.cbrt(6.0 * E**2 * geom.radius * f) * np.asarray(indentation_rate_value, dtype=float)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# stress and deformation fields on the contact surface
# ---------------------------------------------------------------------------

def stress_normal_z(r, cfg: ContactConfiguration):
    """Normal stress at radius r inside the contact circle.

    sigma_z / p_m = -(3/2) (1 - r^2/a^2)^(1/2), valid for 0 <= r <= a.
    """
    rr = np.asarray(r, dtype=float)
    a = cfg.contact_radius
    if np.any(rr < 0.0) or np.any(rr > a):
        raise DomainError("radius must lie in [0, a]")
    if a == 0.0:
        return np.zeros_like(rr) if rr.ndim else 0.0
    out = -1.5 * cfg.mean_pressure * np.sqrt(1.0 - (rr / a) ** 2)
    return out if out.ndim else float(out)


def _bracket(r, a):
    # (a^2/r^2) * [1 - (1 - r^2/a^2)] -> identically 1, written-out form kept
    # with its analytic limit for r << a to avoid 0/0 cancellation noise.
    out = np.where(r < a * _BRACKET_LIMIT_FRACTION,
                   1.0,
                   (a**2 / np.where(r > 0, r, 1.0) ** 2) * (1.0 - (1.0 - (r / a) ** 2)))
    return out


def stress_radial(r, cfg: ContactConfiguration, mat: MaterialParams):
    """Radial stress at radius r, 0 < r <= a.

    sigma_r / p_m = ((2 nu - 1)/2) * (a^2/r^2) [1 - (1 - r^2/a^2)]
                    - 3 nu (1 - r^2/a^2)^(1/2),
    with nu the surface Poisson ratio.
    """
    rr = np.asarray(r, dtype=float)
    a = cfg.contact_radius
    if np.any(rr <= 0.0) or np.any(rr > a):
        raise DomainError("radius must lie in (0, a]")
    nu = mat.poisson_surface
    out = cfg.mean_pressure * (
        0.5 * (2.0 * nu - 1.0) * _bracket(rr, a) - 3.0 * nu * np.sqrt(1.0 - (rr / a) ** 2)
    )
    return out if out.ndim else float(out)


def stress_hoop(r, cfg: ContactConfiguration, mat: MaterialParams):
    """Hoop (moving-direction) stress at radius r, 0 < r <= a.

    sigma_t / p_m = ((1 - 2 nu)/2) * (a^2/r^2) [1 - (1 - r^2/a^2)]
                    - (3/2) (1 - r^2/a^2)^(1/2).
    """
    rr = np.asarray(r, dtype=float)
    a = cfg.contact_radius
    if np.any(rr <= 0.0) or np.any(rr > a):
        raise DomainError("radius must lie in (0, a]")
    nu = mat.poisson_surface
    out = cfg.mean_pressure * (
        0.5 * (1.0 - 2.0 * nu) * _bracket(rr, a) - 1.5 * np.sqrt(1.0 - (rr / a) ** 2)
    )
    return out if out.ndim else float(out)


def deformation_profile(r, cfg: ContactConfiguration, mat: MaterialParams):
    """Surface normal displacement u_z at radius r (r >= 0, both branches).

    Inside the contact circle (r <= a):
        u_z = (3 pi / (8 a)) ((1 - nu^2)/E) p_m (2 a^2 - r^2)
    and outside (r >= a):
        u_z = (3 / (4 a)) ((1 - nu^2)/E) p_m
              [(2 a^2 - r^2) asin(a/r) + a (r^2 - a^2)^(1/2)].
    The two branches agree at r = a.
    """
    rr = np.asarray(r, dtype=float)
    if np.any(rr < 0.0):
        raise DomainError("radius must be >= 0")
    a = cfg.contact_radius
    if a == 0.0:
        return np.zeros_like(rr) if rr.ndim else 0.0
    nu = mat.poisson_surface
    c = (1.0 - nu**2) / mat.reduced_modulus * cfg.mean_pressure
    inner = (3.0 * math.pi / (8.0 * a)) * c * (2.0 * a**2 - rr**2)
    r_out = np.maximum(rr, a)
    outer = (3.0 / (4.0 * a)) * c * (
        (2.0 * a**2 - r_out**2) * np.arcsin(a / r_out) + a * np.sqrt(r_out**2 - a**2)
    )
    out = np.where(rr <= a, inner, outer)
    return out if out.ndim else float(out)


def cylindrical_to_cartesian_transform(theta):
    """Rotation T taking cylindrical stress components to Cartesian axes."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def surface_normal_stress(theta, cfg: ContactConfiguration, mat: MaterialParams):
    """Stress normal to the spherical tool surface at polar angle theta.

    The evaluation point sits at radius r = R sin(theta) from the contact
    center. The contact-point normal is n = [sin(theta), 0, cos(theta)] and
    sigma_n = n^T (T^T sigma T) n, which expands to

        sigma_n = sigma_r c^2t s^2t + sigma_t s^4t + sigma_z c^2t
                  + 2 sigma_z st c^2t

    (the tensor's shear entries equal sigma_z, which is what makes the
    matrix form and the expansion coincide).
    """
    if cfg.contact_radius == 0.0:
        return 0.0
    R = cfg.sphere_radius
    r = R * math.sin(theta)
    if r > cfg.contact_radius:
        raise DomainError("theta points outside the contact circle")
    sz = stress_normal_z(r, cfg)
    if r < cfg.contact_radius * _BRACKET_LIMIT_FRACTION:
        # exact r -> 0 limits of the radial/hoop fields
        sr = cfg.mean_pressure * (0.5 * (2.0 * mat.poisson_surface - 1.0) - 3.0 * mat.poisson_surface)
        st = cfg.mean_pressure * (0.5 * (1.0 - 2.0 * mat.poisson_surface) - 1.5)
    else:
        sr = stress_radial(r, cfg, mat)
        st = stress_hoop(r, cfg, mat)
    tensor = StressTensor3(sigma_r=sr, sigma_t=st, sigma_z=sz, sigma_rz=sz)
    n = np.array([math.sin(theta), 0.0, math.cos(theta)])
    return float(n @ tensor.cartesian(theta) @ n)


# ---------------------------------------------------------------------------
# sliding friction and contact force dynamics
# ---------------------------------------------------------------------------

def friction_force(normal_force, speed, mat: MaterialParams, geom: ContactGeometry,
                   cfg: ContactConfiguration | None = None):
    """Total sliding friction along the moving direction.

    F_t = mu F_z [1 + (2 nu - 1) 3 a^2 / (10 R^2)] + k_d v_e, with the
    contact radius a = sqrt(R d(F_z)) taken from ``cfg`` when supplied and
    recomputed from the load otherwise.
    """
    f = np.asarray(normal_force, dtype=float)
    if np.any(f < 0.0):
        raise DomainError("normal load must be >= 0")
    if cfg is not None:
        a2 = cfg.contact_radius**2
    else:
        a2 = geom.radius * indentation_from_force(f, mat, geom)
    nu = mat.poisson_surface
    out = mat.mu * f * (1.0 + (2.0 * nu - 1.0) * 3.0 * a2 / (10.0 * geom.radius**2)) \
        + mat.k_d * np.asarray(speed, dtype=float)
    return out if out.ndim else float(out)


def friction_force_rate(normal_force, normal_force_rate, indentation, z_rate,
                        speed_rate, mat: MaterialParams, geom: ContactGeometry):
    """Rate of change of the sliding friction force.

    F_t_dot = mu F_z_dot + (3 mu (2 nu - 1) / (10 R)) (F_z_dot d - F_z z_dot)
              + k_d v_e_dot,
    where z_dot = -d_dot is the surface-normal position rate.
    """
    nu = mat.poisson_surface
    out = (
        mat.mu * np.asarray(normal_force_rate, dtype=float)
        + (3.0 * mat.mu * (2.0 * nu - 1.0) / (10.0 * geom.radius))
        * (np.asarray(normal_force_rate) * np.asarray(indentation)
           - np.asarray(normal_force) * np.asarray(z_rate))
        + mat.k_d * np.asarray(speed_rate, dtype=float)
    )
    return out if np.ndim(out) else float(out)


def radial_force_rate(mass, speed, speed_rate, curvature_radius):
    """Rate of the centripetal load F_r = m v^2 / R_c: F_r_dot = 2 m v v_dot / R_c.

    ``curvature_radius = inf`` encodes a straight path and gives exactly 0.
    """
    if np.isinf(curvature_radius):
        out = np.zeros_like(np.asarray(speed, dtype=float) * np.asarray(speed_rate, dtype=float))
        return out if out.ndim else 0.0
    if curvature_radius <= 0.0:
        raise DomainError("curvature radius must be positive (or inf for a straight path)")
    out = 2.0 * mass * np.asarray(speed, dtype=float) * np.asarray(speed_rate, dtype=float) / curvature_radius
    return out if np.ndim(out) else float(out)


def contact_force_ode(state: ContactForceState, indentation, indentation_rate_value,
                      normal_force, normal_force_rate_value, speed, speed_rate,
                      mat: MaterialParams, geom: ContactGeometry, curvature_radius,
                      tool_mass: float = 1.0, eps_force: float = DEFAULT_FORCE_FLOOR):
    """Time derivative of the contact force vector.

    F_e_dot = ((6 E^2 R F_z)^(1/3) d_dot) n_z
              + (mu F_z_dot + (3 mu (2 nu - 1)/(10 R)) (F_z_dot d + F_z d_dot)
                 + k_d v_dot) n_v
              + (2 m v v_dot / R_c) n_perp.

    The load inside the cube root is clamped to ``eps_force`` (touchdown
    regularization); the n_v coefficient is the friction-force rate with
    z_dot = -d_dot substituted.
    """
    E = mat.reduced_modulus
    fz = max(float(normal_force), eps_force)
    normal_rate = np.cbrt(6.0 * E**2 * geom.radius * fz) * float(indentation_rate_value)
    tangent_rate = friction_force_rate(
        normal_force, normal_force_rate_value, indentation,
        -float(indentation_rate_value), speed_rate, mat, geom,
    )
    radial_rate = radial_force_rate(tool_mass, speed, speed_rate, curvature_radius)
    return normal_rate * state.normal + tangent_rate * state.n_v + radial_rate * state.n_perp


# ---------------------------------------------------------------------------
# alternative visco-elastic normal-force laws
# ---------------------------------------------------------------------------

def normal_force_kv(depth, depth_rate, stiffness, damping):
    """Kelvin-Voigt normal force: a spring in parallel with a damper."""
    return stiffness * depth + damping * depth_rate


def normal_force_hunt_crossley(depth, depth_rate, stiffness, damping, exponent: float = 1.5,
                               damping_form: str = "indentation-weighted"):
    """Hunt-Crossley normal force with a nonlinear damping term.

    ``damping_form="indentation-weighted"`` (default) uses
    F = K dx^n + lam dx (dx_dot)^n; ``"standard"`` uses the common
    F = K dx^n + lam dx^n dx_dot. The two coincide at n = 1. The rate power
    is sign-preserving so rebound (negative rates) stays real.
    """
    dx = np.asarray(depth, dtype=float)
    if np.any(dx < 0.0):
        raise DomainError("indentation depth must be >= 0")
    dxd = np.asarray(depth_rate, dtype=float)
    signed_pow = np.sign(dxd) * np.abs(dxd) ** exponent
    if damping_form == "indentation-weighted":
        out = stiffness * dx**exponent + damping * dx * signed_pow
    elif damping_form == "standard":
        out = stiffness * dx**exponent + damping * dx**exponent * dxd
    else:
        raise DomainError(f"unknown damping_form {damping_form!r}")
    return out if out.ndim else float(out)
