"""Contact model tests: closed forms against independent oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad

from presslide.contact import (
    ContactConfiguration,
    ContactForceState,
    ContactGeometry,
    MaterialParams,
    contact_force_ode,
    cylindrical_to_cartesian_transform,
    deformation_profile,
    force_from_indentation,
    friction_force,
    friction_force_rate,
    indentation_from_force,
    indentation_rate,
    normal_force_hunt_crossley,
    normal_force_kv,
    normal_force_rate,
    radial_force_rate,
    sliding_frame,
    stress_hoop,
    stress_normal_z,
    stress_radial,
    surface_normal_stress,
    StressTensor3,
)
from presslide.errors import DomainError, SingularityError


MAT = MaterialParams(young_tool=math.inf, young_surface=1e5, poisson_tool=0.3,
                     poisson_surface=0.48, mu=0.4512, k_d=13.1315, rigid_tool=True)
GEOM = ContactGeometry(radius=0.01)


def test_reduced_modulus_rigid_tool():
    assert_allclose(MAT.reduced_modulus, 1e5 / (1 - 0.48**2), rtol=1e-14)


def test_reduced_modulus_compliant_pair():
    mat = MaterialParams(young_tool=2e9, young_surface=1e5, poisson_tool=0.3, poisson_surface=0.48)
    inv = (1 - 0.3**2) / 2e9 + (1 - 0.48**2) / 1e5
    assert_allclose(mat.reduced_modulus, 1 / inv, rtol=1e-14)


@pytest.mark.parametrize("nu", [-1.0, 0.51, 0.7])
def test_material_rejects_bad_poisson(nu):
    with pytest.raises(DomainError):
        MaterialParams(young_tool=1e6, young_surface=1e5, poisson_tool=nu, poisson_surface=0.4)


def test_geometry_rejects_non_unit_normal():
    with pytest.raises(DomainError):
        ContactGeometry(radius=0.01, normal=np.array([0.0, 0.0, 1.0 + 1e-9]))


class TestQuasiStatic:
    def test_zero_load(self):
        assert indentation_from_force(0.0, MAT, GEOM) == 0.0
        assert force_from_indentation(0.0, MAT, GEOM) == 0.0

    def test_frozen_value(self):
        # independent high-precision evaluation of (9 F^2/(16 E^2 R))^(1/3)
        mat = MaterialParams(young_tool=math.inf, young_surface=1e5, poisson_tool=0.3,
                             poisson_surface=0.0, rigid_tool=True)  # E = 1e5 exactly
        assert_allclose(indentation_from_force(1.0, mat, GEOM),
                        0.001778446652245031403, rtol=1e-14)

    @pytest.mark.parametrize("force", [0.1, 1.0, 10.0])
    def test_roundtrip(self, force):
        d = indentation_from_force(force, MAT, GEOM)
        assert_allclose(force_from_indentation(d, MAT, GEOM), force, rtol=1e-10)

    def test_power_law_scaling(self):
        f1 = force_from_indentation(1e-3, MAT, GEOM)
        f2 = force_from_indentation(2e-3, MAT, GEOM)
        assert_allclose(f2 / f1, 2.0**1.5, rtol=1e-12)

    def test_monotone(self):
        forces = np.linspace(0.0, 20.0, 50)
        d = indentation_from_force(forces, MAT, GEOM)
        assert np.all(np.diff(d) > 0)

    def test_negative_load_rejected(self):
        with pytest.raises(DomainError):
            indentation_from_force(-1.0, MAT, GEOM)
        with pytest.raises(DomainError):
            force_from_indentation(-1e-4, MAT, GEOM)

    @given(st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=60, deadline=None)
    def test_inversion_property(self, force):
        d = indentation_from_force(force, MAT, GEOM)
        assert_allclose(force_from_indentation(d, MAT, GEOM), force, rtol=1e-10)


class TestIndentationRate:
    def test_zero_rate(self):
        assert indentation_rate(5.0, 0.0, MAT, GEOM) == 0.0

    def test_sign(self):
        assert indentation_rate(5.0, 1.0, MAT, GEOM) < 0.0

    def test_matches_finite_difference(self):
        fz, df = 5.0, 1e-4
        dd = (indentation_from_force(fz + df, MAT, GEOM)
              - indentation_from_force(fz - df, MAT, GEOM)) / (2 * df)
        zdot = indentation_rate(fz, 1.0, MAT, GEOM)
        assert_allclose(-zdot, dd, rtol=1e-6)

    def test_singular_at_zero_load(self):
        with pytest.raises(SingularityError):
            indentation_rate(0.0, 1.0, MAT, GEOM)

    def test_inverse_of_normal_force_rate(self):
        fz, fdot = 3.0, 0.7
        zdot = indentation_rate(fz, fdot, MAT, GEOM)
        assert_allclose(normal_force_rate(fz, -zdot, MAT, GEOM), fdot, rtol=1e-12)


class TestStressFields:
    CFG = ContactConfiguration.from_force(2.0, MAT, GEOM)

    def test_edge_and_center(self):
        assert stress_normal_z(self.CFG.contact_radius, self.CFG) == pytest.approx(0.0, abs=1e-12)
        assert_allclose(stress_normal_z(0.0, self.CFG), -1.5 * self.CFG.mean_pressure, rtol=1e-12)

    def test_outside_contact_rejected(self):
        with pytest.raises(DomainError):
            stress_normal_z(self.CFG.contact_radius * 1.01, self.CFG)
        with pytest.raises(DomainError):
            stress_radial(0.0, self.CFG, MAT)

    def test_load_conservation_quadrature(self):
        val, _ = quad(lambda r: -stress_normal_z(r, self.CFG) * 2 * math.pi * r,
                      0.0, self.CFG.contact_radius, epsabs=1e-13, epsrel=1e-13)
        assert_allclose(val, self.CFG.normal_force, rtol=1e-8)

    def test_load_conservation_random_triples(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            force = rng.uniform(0.1, 30.0)
            mat = MaterialParams(young_tool=math.inf, young_surface=rng.uniform(2e4, 5e6),
                                 poisson_tool=0.3, poisson_surface=rng.uniform(0.0, 0.5),
                                 rigid_tool=True)
            geom = ContactGeometry(radius=rng.uniform(2e-3, 5e-2))
            cfg = ContactConfiguration.from_force(force, mat, geom)
            val, _ = quad(lambda r: -stress_normal_z(r, cfg) * 2 * math.pi * r,
                          0.0, cfg.contact_radius, epsabs=1e-13, epsrel=1e-13)
            assert_allclose(val, force, rtol=1e-8)

    def test_incompressible_radial_stress_vanishes_at_edge(self):
        mat = MaterialParams(young_tool=math.inf, young_surface=1e5, poisson_tool=0.3,
                             poisson_surface=0.5, rigid_tool=True)
        cfg = ContactConfiguration.from_force(2.0, mat, GEOM)
        assert stress_radial(cfg.contact_radius, cfg, mat) == pytest.approx(0.0, abs=1e-12)

    def test_continuity_sweep(self):
        # step a*1e-6 across the bracket-limit switch region and a mid-to-edge
        # window; the last 1e-5*a before r = a is excluded because the square
        # root has unbounded slope exactly at the contact edge
        a = self.CFG.contact_radius
        for window in (np.arange(1, 1001) * a * 1e-6,
                       a * (0.999 + np.arange(0, 991) * 1e-6)):
            total = stress_radial(window, self.CFG, MAT) + stress_hoop(window, self.CFG, MAT)
            assert np.max(np.abs(np.diff(total))) < 1e-3 * self.CFG.mean_pressure

    def test_small_radius_limit(self):
        # the bracketed a^2/r^2 (1 - (1 - r^2/a^2)) term tends to exactly 1
        a = self.CFG.contact_radius
        nu = MAT.poisson_surface
        expect_r = self.CFG.mean_pressure * (0.5 * (2 * nu - 1) - 3 * nu * math.sqrt(1 - 1e-24))
        assert_allclose(stress_radial(a * 1e-12, self.CFG, MAT), expect_r, rtol=1e-10)
        expect_t = self.CFG.mean_pressure * (0.5 * (1 - 2 * nu) - 1.5 * math.sqrt(1 - 1e-24))
        assert_allclose(stress_hoop(a * 1e-12, self.CFG, MAT), expect_t, rtol=1e-10)


class TestDeformation:
    CFG = ContactConfiguration.from_force(2.0, MAT, GEOM)

    def test_branch_continuity(self):
        a = self.CFG.contact_radius
        assert_allclose(deformation_profile(a * (1 - 1e-12), self.CFG, MAT),
                        deformation_profile(a * (1 + 1e-12), self.CFG, MAT), rtol=1e-10)

    def test_center_value_frozen(self):
        # (3 pi/(8 a)) ((1-nu^2)/E) p_m 2 a^2 evaluated independently at 40 digits
        assert_allclose(deformation_profile(0.0, self.CFG, MAT),
                        0.0018246067244354780523, rtol=1e-12)

    def test_outer_value_frozen(self):
        assert_allclose(deformation_profile(1.5 * self.CFG.contact_radius, self.CFG, MAT),
                        0.0005433886646412477713, rtol=1e-12)

    def test_far_field_decay(self):
        a = self.CFG.contact_radius
        r = np.linspace(a, 10 * a, 200)
        u = deformation_profile(r, self.CFG, MAT)
        assert np.all(np.diff(u) < 0)


class TestSurfaceNormalStress:
    CFG = ContactConfiguration.from_force(2.0, MAT, GEOM)

    def test_apex_equals_normal_stress(self):
        assert_allclose(surface_normal_stress(0.0, self.CFG, MAT),
                        stress_normal_z(0.0, self.CFG), rtol=1e-12)

    def test_matrix_form_matches_expansion(self):
        R = self.CFG.sphere_radius
        for theta in (0.05, 0.1, 0.2):
            r = R * math.sin(theta)
            if r > self.CFG.contact_radius:
                continue
            sr = stress_radial(r, self.CFG, MAT)
            stt = stress_hoop(r, self.CFG, MAT)
            sz = stress_normal_z(r, self.CFG)
            c, s = math.cos(theta), math.sin(theta)
            expansion = sr * c**2 * s**2 + stt * s**4 + sz * c**2 + 2 * sz * s * c**2
            assert_allclose(surface_normal_stress(theta, self.CFG, MAT), expansion, rtol=1e-12)

    def test_transform_preserves_trace_and_eigenvalues(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            tensor = StressTensor3(*rng.normal(size=4) * 1e4)
            theta = rng.uniform(-math.pi, math.pi)
            cart = tensor.cartesian(theta)
            cyl = tensor.matrix()
            assert_allclose(np.trace(cart), np.trace(cyl), rtol=1e-12)
            assert_allclose(np.sort(np.linalg.eigvalsh(cart)),
                            np.sort(np.linalg.eigvalsh(cyl)), rtol=1e-10, atol=1e-10)
            assert_allclose(cart, cart.T, atol=1e-12)

    def test_transform_is_rotation(self):
        T = cylindrical_to_cartesian_transform(0.7)
        assert_allclose(T @ T.T, np.eye(3), atol=1e-14)
        assert_allclose(np.linalg.det(T), 1.0, rtol=1e-14)


class TestFriction:
    def test_zero(self):
        assert friction_force(0.0, 0.0, MAT, GEOM) == 0.0

    def test_incompressible_collapse(self):
        mat = MaterialParams(young_tool=math.inf, young_surface=1e5, poisson_tool=0.3,
                             poisson_surface=0.5, mu=0.4512, k_d=13.1315, rigid_tool=True)
        fz, v = 5.0, 0.02
        assert_allclose(friction_force(fz, v, mat, GEOM), mat.mu * fz + mat.k_d * v, rtol=1e-14)

    def test_increases_with_load_and_speed(self):
        # fitted-surface ordering with the identified mu/k_d pair
        grid_f = np.array([1.0, 3.0, 5.0, 8.0])
        grid_v = np.array([0.0, 0.01, 0.05, 0.1])
        for v in grid_v:
            vals = friction_force(grid_f, v, MAT, GEOM)
            assert np.all(np.diff(vals) > 0)
        for f in grid_f:
            vals = friction_force(f, grid_v, MAT, GEOM)
            assert np.all(np.diff(vals) > 0)

    def test_rate_zero(self):
        assert friction_force_rate(5.0, 0.0, 1e-3, 0.0, 0.0, MAT, GEOM) == 0.0

    def test_rate_matches_finite_difference(self):
        # F_z(t) = 5 + sin t, v(t) = 0.05 + 0.02 sin(2t); friction along the path
        def fz(t):
            return 5.0 + math.sin(t)

        def vel(t):
            return 0.05 + 0.02 * math.sin(2 * t)

        t0, h = 0.8, 1e-6
        f_plus = friction_force(fz(t0 + h), vel(t0 + h), MAT, GEOM)
        f_minus = friction_force(fz(t0 - h), vel(t0 - h), MAT, GEOM)
        fd = (f_plus - f_minus) / (2 * h)

        fzdot = math.cos(t0)
        d = indentation_from_force(fz(t0), MAT, GEOM)
        zdot = indentation_rate(fz(t0), fzdot, MAT, GEOM)
        vdot = 0.04 * math.cos(2 * t0)
        analytic = friction_force_rate(fz(t0), fzdot, d, zdot, vdot, MAT, GEOM)
        assert_allclose(analytic, fd, rtol=1e-5)

    def test_rate_identity_with_ddot(self):
        # with z_dot = -d_dot the rate equals the (F_z_dot d + F_z d_dot) form
        fz, fzdot, vdot = 4.0, 0.5, 0.01
        d = indentation_from_force(fz, MAT, GEOM)
        ddot = -indentation_rate(fz, fzdot, MAT, GEOM)
        nu = MAT.poisson_surface
        direct = (MAT.mu * fzdot
                  + 3 * MAT.mu * (2 * nu - 1) / (10 * GEOM.radius) * (fzdot * d + fz * ddot)
                  + MAT.k_d * vdot)
        assert_allclose(friction_force_rate(fz, fzdot, d, -ddot, vdot, MAT, GEOM),
                        direct, rtol=1e-12)


class TestRadialForce:
    def test_zero_speed(self):
        assert radial_force_rate(1.2, 0.0, 3.0, 0.05) == 0.0

    def test_straight_path(self):
        assert radial_force_rate(1.2, 1.0, 3.0, math.inf) == 0.0

    def test_nonpositive_radius_rejected(self):
        with pytest.raises(DomainError):
            radial_force_rate(1.2, 1.0, 1.0, 0.0)

    def test_matches_finite_difference(self):
        m, rc = 1.3, 0.07

        def fr(t):
            v = 0.1 + 0.03 * math.sin(t)
            return m * v**2 / rc

        t0, h = 0.4, 1e-6
        fd = (fr(t0 + h) - fr(t0 - h)) / (2 * h)
        v0 = 0.1 + 0.03 * math.sin(t0)
        vdot0 = 0.03 * math.cos(t0)
        assert_allclose(radial_force_rate(m, v0, vdot0, rc), fd, rtol=1e-8)

    def test_bilinear_scaling(self):
        base = radial_force_rate(1.0, 0.2, 0.5, 0.05)
        assert_allclose(radial_force_rate(1.0, 0.4, 1.0, 0.05), 4 * base, rtol=1e-12)


class TestContactForceOde:
    STATE = ContactForceState(
        force=np.array([0.0, 0.0, 5.0]),
        n_v=np.array([1.0, 0.0, 0.0]),
        n_perp=np.array([0.0, -1.0, 0.0]),
        normal=np.array([0.0, 0.0, 1.0]),
    )

    def test_all_rates_zero(self):
        out = contact_force_ode(self.STATE, 1e-3, 0.0, 5.0, 0.0, 0.0, 0.0,
                                MAT, GEOM, math.inf)
        assert_allclose(out, np.zeros(3), atol=1e-15)

    def test_normal_component_inverts_indentation_rate(self):
        fz, fzdot = 5.0, 0.8
        ddot = -indentation_rate(fz, fzdot, MAT, GEOM)
        d = indentation_from_force(fz, MAT, GEOM)
        out = contact_force_ode(self.STATE, d, ddot, fz, fzdot, 0.05, 0.0,
                                MAT, GEOM, math.inf)
        assert_allclose(out @ self.STATE.normal, fzdot, rtol=1e-10)

    def test_tangential_projection_is_friction_rate(self):
        fz, fzdot, vdot = 5.0, 0.8, 0.02
        d = indentation_from_force(fz, MAT, GEOM)
        ddot = -indentation_rate(fz, fzdot, MAT, GEOM)
        out = contact_force_ode(self.STATE, d, ddot, fz, fzdot, 0.05, vdot,
                                MAT, GEOM, math.inf)
        expect = friction_force_rate(fz, fzdot, d, -ddot, vdot, MAT, GEOM)
        assert_allclose(out @ self.STATE.n_v, expect, rtol=1e-12)

    def test_frame_invariance(self):
        rng = np.random.default_rng(11)
        # random rotation via QR of a Gaussian matrix
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        if np.linalg.det(Q) < 0:
            Q[:, 0] = -Q[:, 0]
        args = (1e-3, 2e-4, 5.0, 0.8, 0.05, 0.02, MAT, GEOM, 0.05)
        out = contact_force_ode(self.STATE, *args)
        rotated_state = ContactForceState(
            force=Q @ self.STATE.force, n_v=Q @ self.STATE.n_v,
            n_perp=Q @ self.STATE.n_perp, normal=Q @ self.STATE.normal)
        out_rot = contact_force_ode(rotated_state, *args)
        assert_allclose(out_rot, Q @ out, atol=1e-10)

    def test_zero_load_is_regularized(self):
        out = contact_force_ode(self.STATE, 0.0, 1e-3, 0.0, 0.0, 0.0, 0.0,
                                MAT, GEOM, math.inf)
        assert np.all(np.isfinite(out))


class TestSlidingFrame:
    def test_from_velocity(self):
        n_v, n_perp = sliding_frame(np.array([0.2, 0.0, -0.01]), np.array([0.0, 0.0, 1.0]))
        assert_allclose(n_v, [1.0, 0.0, 0.0], atol=1e-12)
        assert_allclose(np.cross(n_perp, n_v), [0.0, 0.0, 1.0], atol=1e-12)

    def test_rest_uses_hint(self):
        n_v, _ = sliding_frame(np.zeros(3), np.array([0.0, 0.0, 1.0]),
                               hint=np.array([0.0, 2.0, 0.0]))
        assert_allclose(n_v, [0.0, 1.0, 0.0], atol=1e-12)

    def test_rest_without_hint_raises(self):
        with pytest.raises(SingularityError):
            sliding_frame(np.zeros(3), np.array([0.0, 0.0, 1.0]))


class TestAlternativeModels:
    def test_kv(self):
        assert normal_force_kv(0.0, 0.0, 100.0, 5.0) == 0.0
        assert_allclose(normal_force_kv(0.01, 0.1, 100.0, 5.0), 1.5, rtol=1e-14)
        # linear in each argument
        assert_allclose(normal_force_kv(0.02, 0.0, 100.0, 5.0),
                        2 * normal_force_kv(0.01, 0.0, 100.0, 5.0), rtol=1e-14)

    def test_hunt_crossley_zero_depth(self):
        assert normal_force_hunt_crossley(0.0, 0.5, 1e4, 50.0) == 0.0

    def test_hunt_crossley_reduces_to_stiffness(self):
        assert_allclose(normal_force_hunt_crossley(0.01, 0.5, 1e4, 0.0),
                        1e4 * 0.01**1.5, rtol=1e-14)

    def test_hunt_crossley_variants_coincide_at_n1(self):
        a = normal_force_hunt_crossley(0.01, 0.3, 1e4, 50.0, exponent=1.0)
        b = normal_force_hunt_crossley(0.01, 0.3, 1e4, 50.0, exponent=1.0,
                                       damping_form="standard")
        assert_allclose(a, b, rtol=1e-14)
        # n = 1 indentation-weighted form is the bilinear K dx + lam dx dx_dot
        assert_allclose(a, 1e4 * 0.01 + 50.0 * 0.01 * 0.3, rtol=1e-14)

    def test_hunt_crossley_rebound_stays_real(self):
        out = normal_force_hunt_crossley(0.01, -0.2, 1e4, 50.0)
        assert np.isfinite(out)


class TestSerialization:
    def test_material_roundtrip(self):
        block = MAT.to_config_dict()
        back = MaterialParams.from_config_dict(block)
        assert back == MAT

    def test_geometry_roundtrip(self):
        block = GEOM.to_config_dict()
        back = ContactGeometry.from_config_dict(block)
        assert back.radius == GEOM.radius
        assert_allclose(back.normal, GEOM.normal)


@given(force=st.floats(min_value=1e-2, max_value=50.0),
       young=st.floats(min_value=2e4, max_value=5e6),
       radius=st.floats(min_value=2e-3, max_value=5e-2))
@settings(max_examples=30, deadline=None)
def test_configuration_invariants(force, young, radius):
    mat = MaterialParams(young_tool=math.inf, young_surface=young, poisson_tool=0.3,
                         poisson_surface=0.45, rigid_tool=True)
    geom = ContactGeometry(radius=radius)
    cfg = ContactConfiguration.from_force(force, mat, geom)
    assert_allclose(cfg.contact_radius, math.sqrt(radius * cfg.indentation), rtol=1e-12)
    assert_allclose(cfg.mean_pressure * math.pi * cfg.contact_radius**2, force, rtol=1e-10)
    assert_allclose(force_from_indentation(cfg.indentation, mat, geom), force, rtol=1e-10)
