"""Full-coordinate formulation used for cross-checks of the reduced model.

Works in q = (x, y, theta, alpha1, alpha2) with the three no-slip wheel
constraints kept explicit. Provides

* the constraint matrix and the connection re-derived from its null space,
* the 5x5 mass matrix and a finite-difference projection of the reduced
  bias forces (the defining formula for `dynamics.bias_forces`),
* the constrained dynamics with Lagrange multipliers, integrable as an ODE
  after index reduction.

These paths intentionally avoid the hand-derived partial derivatives used by
the fast reduced dynamics, so agreement between the two is a meaningful
check rather than a tautology.
"""
from __future__ import annotations

import numpy as np

from .dynamics import (_DPHI, body_centers, body_frame_angles, rot2,
                       _connection_raw)
from .params import ModelParams

FD_STEP = 1e-6


def _center_jac_blocks(r, params: ModelParams):
    """d c_b / dr blocks, (..., 3, 2, 2)."""
    r = np.asarray(r, dtype=float)
    a1, a2 = r[..., 0], r[..., 1]
    R = params.R
    Cp = np.zeros(r.shape[:-1] + (3, 2, 2))
    Cp[..., 1, 0, 0] = R * np.sin(a1)
    Cp[..., 1, 1, 0] = R * np.cos(a1)
    Cp[..., 2, 0, 1] = -R * np.sin(a2)
    Cp[..., 2, 1, 1] = R * np.cos(a2)
    return Cp


def full_position_jacobians(q, params: ModelParams):
    """World-frame per-body Jacobians.

    Returns Jp (..., 3, 2, 5) mapping qdot to the world velocity of each
    body center, and g (3, 5) mapping qdot to each body's angular rate.
    """
    q = np.asarray(q, dtype=float)
    r = q[..., 3:5]
    theta = q[..., 2]
    Rt = rot2(theta)
    cts = body_centers(r, params)
    Cp = _center_jac_blocks(r, params)
    shape = q.shape[:-1]
    Jp = np.zeros(shape + (3, 2, 5))
    Jp[..., :, 0, 0] = 1.0
    Jp[..., :, 1, 1] = 1.0
    # column for theta: J @ Rt @ c_b
    wc = np.einsum("...ij,...bj->...bi", Rt, cts)
    Jp[..., :, 0, 2] = -wc[..., 1]
    Jp[..., :, 1, 2] = wc[..., 0]
    Jp[..., :, :, 3:5] = np.einsum("...ij,...bjk->...bik", Rt, Cp)
    g = np.zeros((3, 5))
    g[:, 2] = 1.0
    g[:, 3:5] = _DPHI
    return Jp, g


def full_mass_matrix(q, params: ModelParams):
    """5x5 configuration-space mass matrix of the unconstrained chain."""
    Jp, g = full_position_jacobians(q, params)
    M = np.einsum("...bji,b,...bjk->...ik", Jp, params.masses, Jp)
    M += np.einsum("bi,b,bj->ij", g, params.inertias, g)
    return M


def constraint_matrix(q, params: ModelParams):
    """Wheel constraint rows: lateral world velocity of each body, (..., 3, 5)."""
    q = np.asarray(q, dtype=float)
    Jp, _ = full_position_jacobians(q, params)
    theta_b = q[..., 2, None] + body_frame_angles(q[..., 3:5])
    n = np.stack([-np.sin(theta_b), np.cos(theta_b)], axis=-1)  # (..., 3, 2)
    return np.einsum("...bi,...bik->...bk", n, Jp)


def connection_from_constraints(r, params: ModelParams, theta=0.0):
    """Re-derive A(r) by solving the wheel constraints for the group rates.

    For each unit joint rate, solves the three constraint equations for
    (xdot, ydot, thetadot), rotates the translational part back into the
    body frame, and negates. Independent of the closed-form connection.
    """
    r = np.asarray(r, dtype=float)
    q = np.zeros(r.shape[:-1] + (5,))
    q[..., 2] = theta
    q[..., 3:5] = r
    C = constraint_matrix(q, params)
    Cx = C[..., :, :3]
    Cr = C[..., :, 3:]
    xdot = np.linalg.solve(Cx, -Cr)  # (..., 3, 2): world rates per unit rdot
    Rt = rot2(np.asarray(theta, dtype=float))
    A = np.empty_like(xdot)
    A[..., :2, :] = -np.einsum("...ji,...jk->...ik", Rt, xdot[..., :2, :])
    A[..., 2, :] = -xdot[..., 2, :]
    return A


def velocity_map(q, params: ModelParams):
    """B(q): stacks world-frame group rates over joint rates, (..., 5, 2)."""
    q = np.asarray(q, dtype=float)
    A, _ = _connection_raw(q[..., 3:5], params)
    theta = q[..., 2]
    Rt = rot2(theta)
    B = np.zeros(q.shape[:-1] + (5, 2))
    B[..., :2, :] = -np.einsum("...ij,...jk->...ik", Rt, A[..., :2, :])
    B[..., 2, :] = -A[..., 2, :]
    B[..., 3, 0] = 1.0
    B[..., 4, 1] = 1.0
    return B


def reduced_mass_matrix_projection(r, params: ModelParams, theta=0.3):
    """B^T M_full B; must equal the per-body reduced mass matrix."""
    r = np.asarray(r, dtype=float)
    q = np.zeros(r.shape[:-1] + (5,))
    q[..., 2] = theta
    q[..., 3:5] = r
    B = velocity_map(q, params)
    M = full_mass_matrix(q, params)
    return np.einsum("...ji,...jk,...kl->...il", B, M, B)


def _coriolis_times_qdot(q, qd, params: ModelParams, step=FD_STEP):
    """C_full(q, qd) qd = Mdot qd - 1/2 grad_q(qd^T M qd), by central FD."""
    Mp = full_mass_matrix(q + step * qd, params)
    Mm = full_mass_matrix(q - step * qd, params)
    Mdot = (Mp - Mm) / (2.0 * step)
    grad = np.zeros(5)
    for i in range(2, 5):  # mass matrix is (x, y)-invariant
        dq = np.zeros(5)
        dq[i] = step
        ep = qd @ full_mass_matrix(q + dq, params) @ qd
        em = qd @ full_mass_matrix(q - dq, params) @ qd
        grad[i] = (ep - em) / (2.0 * step)
    return Mdot @ qd - 0.5 * grad


def bias_forces_projection(r, dr, params: ModelParams, theta=0.3, step=FD_STEP):
    """Reduced bias via null-space projection with finite differences.

    h = B^T (M_full Bdot rdot + C_full(q, qdot) qdot), with Bdot taken as a
    central difference along the instantaneous motion.
    """
    r = np.asarray(r, dtype=float)
    dr = np.asarray(dr, dtype=float)
    q = np.concatenate([np.zeros(2), [theta], r])
    B = velocity_map(q, params)
    qd = B @ dr
    Bp = velocity_map(q + step * qd, params)
    Bm = velocity_map(q - step * qd, params)
    Bdot = (Bp - Bm) / (2.0 * step)
    M = full_mass_matrix(q, params)
    Cqd = _coriolis_times_qdot(q, qd, params, step)
    return B.T @ (M @ (Bdot @ dr) + Cqd)


def potential_gradient_full(q, params: ModelParams):
    g = np.zeros(5)
    g[3:5] = params.k * (q[3:5] - params.r_eq)
    return g


def _full_bias(q, qd, params: ModelParams, step=FD_STEP):
    """Velocity-quadratic generalized force in full coordinates.

    Newton-Euler assembly: sum_b Jp_b^T m_b d/dt(Jp_b) qd, with the Jacobian
    rate taken by a central difference along the motion. The angular rows
    are configuration-independent, so they contribute nothing.
    """
    Jp, _ = full_position_jacobians(q, params)
    Jpp, _ = full_position_jacobians(q + step * qd, params)
    Jpm, _ = full_position_jacobians(q - step * qd, params)
    Jdot = (Jpp - Jpm) / (2.0 * step)
    acc = np.einsum("bik,k->bi", Jdot, qd)
    return np.einsum("bik,b,bi->k", Jp, params.masses, acc)


def dae_rhs(q, qd, tau_r, params: ModelParams, step=FD_STEP):
    """Accelerations and multipliers of the constrained full model.

    Solves the KKT system
        [M -G^T] [qdd]   [tau - bias - dV/dq]
        [G   0 ] [lam] = [-Gdot qd]
    where G stacks the three lateral-velocity constraint rows.
    """
    M = full_mass_matrix(q, params)
    G = constraint_matrix(q, params)
    Gp = constraint_matrix(q + step * qd, params)
    Gm = constraint_matrix(q - step * qd, params)
    Gdot_qd = ((Gp - Gm) / (2.0 * step)) @ qd
    force = np.zeros(5)
    force[3:5] = tau_r
    rhs_top = force - _full_bias(q, qd, params, step) - potential_gradient_full(q, params)
    kkt = np.zeros((8, 8))
    kkt[:5, :5] = M
    kkt[:5, 5:] = -G.T
    kkt[5:, :5] = G
    rhs = np.concatenate([rhs_top, -Gdot_qd])
    sol = np.linalg.solve(kkt, rhs)
    return sol[:5], sol[5:]


def dae_state_rhs(y, tau_r, params: ModelParams):
    """RHS of the 10-dim first-order DAE state (q, qdot); batched over rows."""
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    ys = np.atleast_2d(y)
    out = np.empty_like(ys)
    for i, yi in enumerate(ys):
        q, qd = yi[:5], yi[5:]
        qdd, _ = dae_rhs(q, qd, tau_r, params)
        out[i, :5] = qd
        out[i, 5:] = qdd
    return out[0] if single else out


def reduced_to_full_state(r, dr, pose, params: ModelParams):
    """Lift a reduced state (r, rdot, pose) onto the constraint manifold."""
    pose = np.asarray(pose, dtype=float)
    q = np.concatenate([pose, np.asarray(r, dtype=float)])
    qd = velocity_map(q, params) @ np.asarray(dr, dtype=float)
    return np.concatenate([q, qd])


def lateral_body_speeds(q, qd, params: ModelParams):
    """Signed lateral speed of each body center; zero on the constraint
    manifold."""
    return constraint_matrix(q, params) @ qd
