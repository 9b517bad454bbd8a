"""Jit-compiled hot path for rollouts and trajectory linearization.

Mirrors the numpy reference implementations in :mod:`chain` and
:mod:`dynamics` on flat float64 arrays; the equivalence is asserted by the
test suite. Importing this module requires numba — :class:`SoftContactSystem`
falls back to the pure-numpy path when it is unavailable.
"""

from __future__ import annotations

import numpy as np
import numba
from numba import njit, prange

# the default TBB layer is version-gated; workqueue is always present and
# deterministic for our disjoint-write parallel loops
numba.config.THREADING_LAYER = "workqueue"

_GIMBAL_MESSAGE = "gimbal guard tripped during integration"


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


# small fixed-size products and solves are written as loops: BLAS/LAPACK
# dispatch overhead dwarfs the arithmetic at these sizes


@njit(cache=True)
def _mv33(A, v):
    out = np.empty(3)
    for i in range(3):
        out[i] = A[i, 0] * v[0] + A[i, 1] * v[1] + A[i, 2] * v[2]
    return out


@njit(cache=True)
def _solve33(A, b):
    # adjugate solve; the Euler-rate matrix is well conditioned inside the
    # gimbal guard
    det = (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
           - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
           + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))
    out = np.empty(3)
    out[0] = ((A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1]) * b[0]
              + (A[0, 2] * A[2, 1] - A[0, 1] * A[2, 2]) * b[1]
              + (A[0, 1] * A[1, 2] - A[0, 2] * A[1, 1]) * b[2]) / det
    out[1] = ((A[1, 2] * A[2, 0] - A[1, 0] * A[2, 2]) * b[0]
              + (A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]) * b[1]
              + (A[0, 2] * A[1, 0] - A[0, 0] * A[1, 2]) * b[2]) / det
    out[2] = ((A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]) * b[0]
              + (A[0, 1] * A[2, 0] - A[0, 0] * A[2, 1]) * b[1]
              + (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]) * b[2]) / det
    return out


@njit(cache=True)
def _chol_solve7(M, b):
    # M is symmetric positive definite by construction
    L = np.zeros((7, 7))
    for i in range(7):
        for j in range(i + 1):
            s = M[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    y = np.empty(7)
    for i in range(7):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * y[k]
        y[i] = s / L[i, i]
    x = np.empty(7)
    for i in range(6, -1, -1):
        s = y[i]
        for k in range(i + 1, 7):
            s -= L[k, i] * x[k]
        x[i] = s / L[i, i]
    return x


@njit(cache=True)
def _manip_derivative(xm, u, axes, fix_rot, origins, inertias, grav, tool_xyz, tool_rot):
    # monolithic CRBA + RNEA + tip Jacobian evaluation; helper calls are
    # avoided because allocation overhead dominates at these sizes
    q = xm[:7]
    qd = xm[7:]

    X = np.zeros((7, 6, 6))
    Rw = np.empty((7, 3, 3))
    pw = np.empty((7, 3))
    R = np.eye(3)
    p = np.zeros(3)
    E = np.empty((3, 3))
    for k in range(7):
        ax = axes[k]
        s = np.sin(q[k])
        c = np.cos(q[k])
        cc = 1.0 - c
        # Rodrigues rotation about the unit joint axis
        E[0, 0] = c + ax[0] * ax[0] * cc
        E[0, 1] = ax[0] * ax[1] * cc - ax[2] * s
        E[0, 2] = ax[0] * ax[2] * cc + ax[1] * s
        E[1, 0] = ax[1] * ax[0] * cc + ax[2] * s
        E[1, 1] = c + ax[1] * ax[1] * cc
        E[1, 2] = ax[1] * ax[2] * cc - ax[0] * s
        E[2, 0] = ax[2] * ax[0] * cc - ax[1] * s
        E[2, 1] = ax[2] * ax[1] * cc + ax[0] * s
        E[2, 2] = c + ax[2] * ax[2] * cc

        o = origins[k]
        fr = fix_rot[k]
        for a in range(3):
            p[a] = p[a] + R[a, 0] * o[0] + R[a, 1] * o[1] + R[a, 2] * o[2]
            pw[k, a] = p[a]
        # R <- R @ fr @ E, via tmp = fr @ E
        tmp00 = fr[0, 0] * E[0, 0] + fr[0, 1] * E[1, 0] + fr[0, 2] * E[2, 0]
        tmp01 = fr[0, 0] * E[0, 1] + fr[0, 1] * E[1, 1] + fr[0, 2] * E[2, 1]
        tmp02 = fr[0, 0] * E[0, 2] + fr[0, 1] * E[1, 2] + fr[0, 2] * E[2, 2]
        tmp10 = fr[1, 0] * E[0, 0] + fr[1, 1] * E[1, 0] + fr[1, 2] * E[2, 0]
        tmp11 = fr[1, 0] * E[0, 1] + fr[1, 1] * E[1, 1] + fr[1, 2] * E[2, 1]
        tmp12 = fr[1, 0] * E[0, 2] + fr[1, 1] * E[1, 2] + fr[1, 2] * E[2, 2]
        tmp20 = fr[2, 0] * E[0, 0] + fr[2, 1] * E[1, 0] + fr[2, 2] * E[2, 0]
        tmp21 = fr[2, 0] * E[0, 1] + fr[2, 1] * E[1, 1] + fr[2, 2] * E[2, 1]
        tmp22 = fr[2, 0] * E[0, 2] + fr[2, 1] * E[1, 2] + fr[2, 2] * E[2, 2]
        for a in range(3):
            r0 = R[a, 0] * tmp00 + R[a, 1] * tmp10 + R[a, 2] * tmp20
            r1 = R[a, 0] * tmp01 + R[a, 1] * tmp11 + R[a, 2] * tmp21
            r2 = R[a, 0] * tmp02 + R[a, 1] * tmp12 + R[a, 2] * tmp22
            R[a, 0] = r0
            R[a, 1] = r1
            R[a, 2] = r2
        for a in range(3):
            for b in range(3):
                Rw[k, a, b] = R[a, b]
        # spatial motion transform child <- parent: Ek = (fr @ E).T
        X[k, 0, 0] = tmp00
        X[k, 0, 1] = tmp10
        X[k, 0, 2] = tmp20
        X[k, 1, 0] = tmp01
        X[k, 1, 1] = tmp11
        X[k, 1, 2] = tmp21
        X[k, 2, 0] = tmp02
        X[k, 2, 1] = tmp12
        X[k, 2, 2] = tmp22
        for a in range(3):
            for b in range(3):
                X[k, 3 + a, 3 + b] = X[k, a, b]
        # lower-left block: -Ek @ skew(origin)
        sk = np.zeros((3, 3))
        sk[0, 1] = -o[2]
        sk[0, 2] = o[1]
        sk[1, 0] = o[2]
        sk[1, 2] = -o[0]
        sk[2, 0] = -o[1]
        sk[2, 1] = o[0]
        for a in range(3):
            for b in range(3):
                sacc = 0.0
                for m in range(3):
                    sacc -= X[k, a, m] * sk[m, b]
                X[k, 3 + a, b] = sacc
    tip = np.empty(3)
    for a in range(3):
        tip[a] = p[a] + R[a, 0] * tool_xyz[0] + R[a, 1] * tool_xyz[1] + R[a, 2] * tool_xyz[2]

    # composite rigid body pass
    Ic = inertias.copy()
    M = np.zeros((7, 7))
    F = np.empty(6)
    Fj = np.empty(6)
    tmp66 = np.empty((6, 6))
    for i in range(6, -1, -1):
        if i > 0:
            # Ic[i-1] += X[i].T @ Ic[i] @ X[i]
            for a in range(6):
                for b in range(6):
                    sacc = 0.0
                    for m in range(6):
                        sacc += Ic[i, a, m] * X[i, m, b]
                    tmp66[a, b] = sacc
            for a in range(6):
                for b in range(6):
                    sacc = 0.0
                    for m in range(6):
                        sacc += X[i, m, a] * tmp66[m, b]
                    Ic[i - 1, a, b] += sacc
        ax = axes[i]
        for a in range(6):
            F[a] = Ic[i, a, 0] * ax[0] + Ic[i, a, 1] * ax[1] + Ic[i, a, 2] * ax[2]
        M[i, i] = F[0] * ax[0] + F[1] * ax[1] + F[2] * ax[2]
        for a in range(6):
            Fj[a] = F[a]
        for j in range(i, 0, -1):
            for a in range(6):
                tmp = 0.0
                for m in range(6):
                    tmp += X[j, m, a] * Fj[m]
                F[a] = tmp
            for a in range(6):
                Fj[a] = F[a]
            axj = axes[j - 1]
            M[i, j - 1] = Fj[0] * axj[0] + Fj[1] * axj[1] + Fj[2] * axj[2]
            M[j - 1, i] = M[i, j - 1]

    # Newton-Euler bias sweep (zero joint acceleration)
    fb = np.empty((7, 6))
    v_prev = np.zeros(6)
    a_prev = np.zeros(6)
    a_prev[3] = -grav[0]
    a_prev[4] = -grav[1]
    a_prev[5] = -grav[2]
    vi = np.empty(6)
    ai = np.empty(6)
    Iv = np.empty(6)
    Ia = np.empty(6)
    for i in range(7):
        for a in range(6):
            sv = 0.0
            sa = 0.0
            for m in range(6):
                sv += X[i, a, m] * v_prev[m]
                sa += X[i, a, m] * a_prev[m]
            vi[a] = sv
            ai[a] = sa
        ax = axes[i]
        for a in range(3):
            vi[a] += ax[a] * qd[i]
        # ai += vi x_motion (S qd): angular part w x sw, linear part vl x sw
        sw0 = ax[0] * qd[i]
        sw1 = ax[1] * qd[i]
        sw2 = ax[2] * qd[i]
        ai[0] += vi[1] * sw2 - vi[2] * sw1
        ai[1] += vi[2] * sw0 - vi[0] * sw2
        ai[2] += vi[0] * sw1 - vi[1] * sw0
        ai[3] += vi[4] * sw2 - vi[5] * sw1
        ai[4] += vi[5] * sw0 - vi[3] * sw2
        ai[5] += vi[3] * sw1 - vi[4] * sw0
        Ii = inertias[i]
        for a in range(6):
            siv = 0.0
            sia = 0.0
            for m in range(6):
                siv += Ii[a, m] * vi[m]
                sia += Ii[a, m] * ai[m]
            Iv[a] = siv
            Ia[a] = sia
        # f = I a + v x_force (I v)
        fb[i, 0] = Ia[0] + vi[1] * Iv[2] - vi[2] * Iv[1] + vi[4] * Iv[5] - vi[5] * Iv[4]
        fb[i, 1] = Ia[1] + vi[2] * Iv[0] - vi[0] * Iv[2] + vi[5] * Iv[3] - vi[3] * Iv[5]
        fb[i, 2] = Ia[2] + vi[0] * Iv[1] - vi[1] * Iv[0] + vi[3] * Iv[4] - vi[4] * Iv[3]
        fb[i, 3] = Ia[3] + vi[1] * Iv[5] - vi[2] * Iv[4]
        fb[i, 4] = Ia[4] + vi[2] * Iv[3] - vi[0] * Iv[5]
        fb[i, 5] = Ia[5] + vi[0] * Iv[4] - vi[1] * Iv[3]
        for a in range(6):
            v_prev[a] = vi[a]
            a_prev[a] = ai[a]

    rhs = np.empty(7)
    for i in range(6, -1, -1):
        ax = axes[i]
        rhs[i] = u[6 + i] - (fb[i, 0] * ax[0] + fb[i, 1] * ax[1] + fb[i, 2] * ax[2])
        if i > 0:
            for a in range(6):
                sacc = 0.0
                for m in range(6):
                    sacc += X[i, m, a] * fb[i, m]
                fb[i - 1, a] += sacc

    # subtract J^T wrench (tip Jacobian columns built from the world frames)
    for k in range(7):
        ax = axes[k]
        z0 = Rw[k, 0, 0] * ax[0] + Rw[k, 0, 1] * ax[1] + Rw[k, 0, 2] * ax[2]
        z1 = Rw[k, 1, 0] * ax[0] + Rw[k, 1, 1] * ax[1] + Rw[k, 1, 2] * ax[2]
        z2 = Rw[k, 2, 0] * ax[0] + Rw[k, 2, 1] * ax[1] + Rw[k, 2, 2] * ax[2]
        d0 = tip[0] - pw[k, 0]
        d1 = tip[1] - pw[k, 1]
        d2 = tip[2] - pw[k, 2]
        jv0 = z1 * d2 - z2 * d1
        jv1 = z2 * d0 - z0 * d2
        jv2 = z0 * d1 - z1 * d0
        rhs[k] -= (jv0 * u[0] + jv1 * u[1] + jv2 * u[2]
                   + z0 * u[3] + z1 * u[4] + z2 * u[5])

    qdd = _chol_solve7(M, rhs)
    out = np.empty(14)
    out[:7] = qd
    out[7:] = qdd
    return out


@njit(cache=True)
def _tool_derivative(xe, w, rc, hint, toolpar, r_cb, r_ce, conpar, normal):
    # toolpar = [mass, Ixx, Iyy, Izz, gx, gy, gz]
    # conpar = [E, R_tool, nu, mu, k_d, surface_h, eps_force, liftoff_tau,
    #           gimbal_guard, rest_speed]
    pose = xe[0:6]
    rate = xe[6:12]
    fe = xe[12:15]
    cy, sy = np.cos(pose[3]), np.sin(pose[3])
    cp, sp = np.cos(pose[4]), np.sin(pose[4])
    cr, sr = np.cos(pose[5]), np.sin(pose[5])
    if abs(cp) < conpar[8]:
        raise ValueError(_GIMBAL_MESSAGE)

    R = np.empty((3, 3))
    R[0, 0] = cy * cp
    R[0, 1] = cy * sp * sr - sy * cr
    R[0, 2] = cy * sp * cr + sy * sr
    R[1, 0] = sy * cp
    R[1, 1] = sy * sp * sr + cy * cr
    R[1, 2] = sy * sp * cr - cy * sr
    R[2, 0] = -sp
    R[2, 1] = cp * sr
    R[2, 2] = cp * cr

    T = np.zeros((3, 3))
    T[0, 1] = -sy
    T[0, 2] = cy * cp
    T[1, 1] = cy
    T[1, 2] = sy * cp
    T[2, 0] = 1.0
    T[2, 2] = -sp
    yd, pd = rate[3], rate[4]
    Td = np.zeros((3, 3))
    Td[0, 1] = -cy * yd
    Td[0, 2] = -sy * cp * yd - cy * sp * pd
    Td[1, 1] = -sy * yd
    Td[1, 2] = cy * cp * yd - sy * sp * pd
    Td[2, 2] = -cp * pd

    mass = toolpar[0]
    inertia = toolpar[1:4]
    g = toolpar[4:7]
    erate = rate[3:6].copy()
    omega = _mv33(T, erate)
    r_cb_w = _mv33(R, r_cb)
    r_ce_w = _mv33(R, r_ce)
    xdd_c = (w[:3] + mass * g - fe) / mass
    torque = _cross(r_cb_w, w[:3].copy()) + w[3:6].copy() + _cross(r_ce_w, fe)
    omdot = torque / inertia
    xdd_e = xdd_c + _cross(omdot, r_ce_w) + _cross(omega, _cross(omega, r_ce_w))
    euler_acc = _solve33(T, omdot - _mv33(Td, erate))

    E, R_tool, nu, mu, k_d = conpar[0], conpar[1], conpar[2], conpar[3], conpar[4]
    surface_h, eps_force, liftoff_tau = conpar[5], conpar[6], conpar[7]
    rest_speed = conpar[9]

    v_lin = rate[0:3]
    fz = fe @ normal
    penetration = surface_h - pose[2]
    fdot = np.empty(3)
    if fz > eps_force or penetration > 0.0:
        ddot = v_lin @ normal
        fz_floor = max(fz, eps_force)
        fzdot = (6.0 * E * E * R_tool * fz_floor) ** (1.0 / 3.0) * ddot
        d = (9.0 * max(fz, 0.0) ** 2 / (16.0 * E * E * R_tool)) ** (1.0 / 3.0)
        speed = np.sqrt(v_lin @ v_lin)
        vdot = (v_lin @ xdd_e) / max(speed, 1e-9)

        v_t = v_lin - ddot * normal
        t_speed = np.sqrt(v_t @ v_t)
        if t_speed >= rest_speed:
            n_v = v_t / max(t_speed, 1e-30)
        else:
            hint_t = hint - (hint @ normal) * normal
            n_v = hint_t / max(np.sqrt(hint_t @ hint_t), 1e-12)
        n_perp = _cross(n_v, normal)

        tangent_rate = (mu * fzdot
                        + 3.0 * mu * (2.0 * nu - 1.0) / (10.0 * R_tool) * (fzdot * d + fz * ddot)
                        + k_d * vdot)
        if np.isinf(rc):
            radial_rate = 0.0
        else:
            radial_rate = 2.0 * toolpar[0] * speed * vdot / rc
        for k in range(3):
            fdot[k] = fzdot * normal[k] + tangent_rate * n_v[k] + radial_rate * n_perp[k]
    else:
        for k in range(3):
            fdot[k] = -fe[k] / liftoff_tau

    out = np.empty(15)
    out[0:6] = rate
    out[6:9] = xdd_e
    out[9:12] = euler_acc
    out[12:15] = fdot
    return out


@njit(cache=True)
def _step_manip(xm, u, dt, axes, fix_rot, origins, inertias, grav, tool_xyz, tool_rot):
    k1 = _manip_derivative(xm, u, axes, fix_rot, origins, inertias, grav, tool_xyz, tool_rot)
    k2 = _manip_derivative(xm + 0.5 * dt * k1, u, axes, fix_rot, origins, inertias, grav, tool_xyz, tool_rot)
    k3 = _manip_derivative(xm + 0.5 * dt * k2, u, axes, fix_rot, origins, inertias, grav, tool_xyz, tool_rot)
    k4 = _manip_derivative(xm + dt * k3, u, axes, fix_rot, origins, inertias, grav, tool_xyz, tool_rot)
    return xm + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def _step_tool(xe, w, dt, rc, hint, toolpar, r_cb, r_ce, conpar, normal):
    # states starting out of contact integrate the stiff force decay exactly
    # (frozen through the substages); everything else is plain RK4
    fz = xe[12:15] @ normal
    in_contact = fz > conpar[6] or conpar[5] - xe[2] > 0.0
    k1 = _tool_derivative(xe, w, rc, hint, toolpar, r_cb, r_ce, conpar, normal)
    if not in_contact:
        k1[12:15] = 0.0
    x2 = xe + 0.5 * dt * k1
    k2 = _tool_derivative(x2, w, rc, hint, toolpar, r_cb, r_ce, conpar, normal)
    if not in_contact:
        k2[12:15] = 0.0
    x3 = xe + 0.5 * dt * k2
    k3 = _tool_derivative(x3, w, rc, hint, toolpar, r_cb, r_ce, conpar, normal)
    if not in_contact:
        k3[12:15] = 0.0
    x4 = xe + dt * k3
    k4 = _tool_derivative(x4, w, rc, hint, toolpar, r_cb, r_ce, conpar, normal)
    if not in_contact:
        k4[12:15] = 0.0
    out = xe + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not in_contact:
        decay = np.exp(-dt / conpar[7])
        for j in range(3):
            out[12 + j] = xe[12 + j] * decay
    return out


@njit(cache=True)
def _step(x, u, dt, rc, hint, axes, fix_rot, origins, inertias, grav,
          tool_xyz, tool_rot, toolpar, r_cb, r_ce, conpar, normal):
    out = np.empty(29)
    out[:14] = _step_manip(x[:14].copy(), u, dt, axes, fix_rot, origins, inertias,
                           grav, tool_xyz, tool_rot)
    out[14:] = _step_tool(x[14:].copy(), u[:6].copy(), dt, rc, hint, toolpar,
                          r_cb, r_ce, conpar, normal)
    return out


@njit(cache=True)
def _rollout(x0, us, dt, rcs, hints, axes, fix_rot, origins, inertias, grav,
             tool_xyz, tool_rot, toolpar, r_cb, r_ce, conpar, normal):
    N = us.shape[0]
    xs = np.empty((N + 1, 29))
    xs[0] = x0
    for i in range(N):
        xs[i + 1] = _step(xs[i], us[i], dt, rcs[i], hints[i], axes, fix_rot,
                          origins, inertias, grav, tool_xyz, tool_rot, toolpar,
                          r_cb, r_ce, conpar, normal)
    return xs


@njit(cache=True, parallel=True)
def _linearize_traj(xs, us, dt, rcs, hints, eps, axes, fix_rot, origins, inertias,
                    grav, tool_xyz, tool_rot, toolpar, r_cb, r_ce, conpar, normal):
    N = us.shape[0]
    A = np.zeros((N, 29, 29))
    B = np.zeros((N, 29, 13))
    for i in prange(N):
        xm = xs[i, :14].copy()
        xe = xs[i, 14:].copy()
        u = us[i].copy()
        w = u[:6].copy()
        rc = rcs[i]
        hint = hints[i]
        for k in range(14):
            h = eps * max(1.0, abs(xm[k]))
            xp = xm.copy()
            xp[k] += h
            xq = xm.copy()
            xq[k] -= h
            sp = _step_manip(xp, u, dt, axes, fix_rot, origins, inertias, grav, tool_xyz, tool_rot)
            sm = _step_manip(xq, u, dt, axes, fix_rot, origins, inertias, grav, tool_xyz, tool_rot)
            A[i, :14, k] = (sp - sm) / (2.0 * h)
        for k in range(13):
            h = eps * max(1.0, abs(u[k]))
            up = u.copy()
            up[k] += h
            uq = u.copy()
            uq[k] -= h
            sp = _step_manip(xm, up, dt, axes, fix_rot, origins, inertias, grav, tool_xyz, tool_rot)
            sm = _step_manip(xm, uq, dt, axes, fix_rot, origins, inertias, grav, tool_xyz, tool_rot)
            B[i, :14, k] = (sp - sm) / (2.0 * h)
        for k in range(15):
            h = eps * max(1.0, abs(xe[k]))
            xp = xe.copy()
            xp[k] += h
            xq = xe.copy()
            xq[k] -= h
            sp = _step_tool(xp, w, dt, rc, hint, toolpar, r_cb, r_ce, conpar, normal)
            sm = _step_tool(xq, w, dt, rc, hint, toolpar, r_cb, r_ce, conpar, normal)
            A[i, 14:, 14 + k] = (sp - sm) / (2.0 * h)
        for k in range(6):
            h = eps * max(1.0, abs(w[k]))
            wp = w.copy()
            wp[k] += h
            wq = w.copy()
            wq[k] -= h
            sp = _step_tool(xe, wp, dt, rc, hint, toolpar, r_cb, r_ce, conpar, normal)
            sm = _step_tool(xe, wq, dt, rc, hint, toolpar, r_cb, r_ce, conpar, normal)
            B[i, 14:, k] = (sp - sm) / (2.0 * h)
    return A, B


class Engine:
    """Packed-constant wrapper dispatching into the jitted kernels."""

    def __init__(self, system):
        chain = system.chain
        self.axes = np.ascontiguousarray([j.axis for j in chain.joints])
        self.fix_rot = np.ascontiguousarray(chain._fixed_rot)
        self.origins = np.ascontiguousarray([j.origin_xyz for j in chain.joints])
        self.inertias = np.ascontiguousarray(chain._spatial_inertia)
        self.grav = np.ascontiguousarray(chain.gravity)
        self.tool_xyz = np.ascontiguousarray(chain.tool_xyz)
        self.tool_rot = np.ascontiguousarray(chain._tool_rot)
        tool = system.tool
        self.toolpar = np.concatenate([[tool.mass], tool.inertia_diag, tool.gravity])
        self.r_cb = np.ascontiguousarray(tool.r_cb)
        self.r_ce = np.ascontiguousarray(tool.r_ce)
        self.conpar = np.array([
            system.material.reduced_modulus, system.geometry.radius,
            system.material.poisson_surface, system.material.mu, system.material.k_d,
            system.surface_height, system.eps_force, system.liftoff_tau,
            system.gimbal_guard, system.rest_speed,
        ])
        self.normal = np.ascontiguousarray(system.geometry.normal)

    def _chain_args(self):
        return (self.axes, self.fix_rot, self.origins, self.inertias, self.grav,
                self.tool_xyz, self.tool_rot)

    def _all_args(self):
        return self._chain_args() + (self.toolpar, self.r_cb, self.r_ce,
                                     self.conpar, self.normal)

    def step(self, x, u, dt, rc, hint):
        try:
            return _step(np.ascontiguousarray(x), np.ascontiguousarray(u),
                         dt, rc, np.ascontiguousarray(hint), *self._all_args())
        except ValueError as err:
            _reraise_gimbal(err)

    def rollout(self, x0, us, dt, rcs, hints):
        try:
            return _rollout(np.ascontiguousarray(x0), np.ascontiguousarray(us), dt,
                            np.ascontiguousarray(rcs), np.ascontiguousarray(hints),
                            *self._all_args())
        except ValueError as err:
            _reraise_gimbal(err)

    def linearize_trajectory(self, xs, us, dt, rcs, hints, eps):
        try:
            return _linearize_traj(np.ascontiguousarray(xs), np.ascontiguousarray(us),
                                   dt, np.ascontiguousarray(rcs),
                                   np.ascontiguousarray(hints), eps, *self._all_args())
        except ValueError as err:
            _reraise_gimbal(err)


def _reraise_gimbal(err):
    from .errors import GimbalLockError

    if _GIMBAL_MESSAGE in str(err):
        raise GimbalLockError(_GIMBAL_MESSAGE) from err
    raise


def make_engine(system) -> Engine:
    return Engine(system)
