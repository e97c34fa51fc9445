"""Reduced dynamics of the elastic kinematic snake.

Three planar rigid bodies, no-slip wheels at each body midpoint, torsional
springs with movable equilibria at both joints. The wheel constraints fully
determine the body velocity of the central link from the joint rates through
the local connection A(r), so the free dynamics live on the two joint angles
r = (alpha1, alpha2).

Frame convention (fixed by requiring the derived constraint null space to
reproduce the standard connection formula exactly, see tests):

* central body: frame at its midpoint, joints at (+H, 0) and (-H, 0);
* body 2 (joint angle alpha1): orientation theta - alpha1, center at the
  back joint minus R along its own axis;
* body 3 (joint angle alpha2): orientation theta + alpha2, center at the
  front joint plus R along its own axis.

All functions are vectorized over leading axes: `r` may be (..., 2).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditioned, SingularShape
from .params import ModelParams

# relative joint orientations: d(phi_b)/dr
_DPHI = np.array([[0.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class ShapeState:
    """Joint angles and rates, the reduced phase point."""

    r: np.ndarray
    dr: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        object.__setattr__(self, "dr", np.asarray(self.dr, dtype=float))


@dataclass(frozen=True)
class Pose:
    """Planar pose of the central body."""

    x: float
    y: float
    theta: float

    def as_array(self):
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class BodyVelocity:
    """Velocity of the central body expressed in its own frame."""

    xi_x: float
    xi_y: float
    xi_theta: float

    def as_array(self):
        return np.array([self.xi_x, self.xi_y, self.xi_theta])


def rot2(theta):
    """2x2 rotation matrices, batched over leading axes of theta."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def connection_divisor(r, params: ModelParams):
    """Q(r), the scalar the connection divides by; zero on alpha1 = alpha2."""
    r = np.asarray(r, dtype=float)
    a1, a2 = r[..., 0], r[..., 1]
    return params.H * np.sin(a1 - a2) + params.R * (np.sin(a1) - np.sin(a2))


def _connection_raw(r, params: ModelParams, derivs=False):
    """A(r) and optionally (dA/da1, dA/da2); no singularity checks."""
    r = np.asarray(r, dtype=float)
    a1, a2 = r[..., 0], r[..., 1]
    s1, c1 = np.sin(a1), np.cos(a1)
    s2, c2 = np.sin(a2), np.cos(a2)
    Q = params.H * np.sin(a1 - a2) + params.R * (s1 - s2)
    shape = r.shape[:-1]
    N = np.zeros(shape + (3, 2))
    N[..., 0, 0] = params.R + params.H * c2
    N[..., 0, 1] = params.R + params.H * c1
    N[..., 2, 0] = s2
    N[..., 2, 1] = s1
    RQ = (params.R / Q)[..., None, None]
    A = RQ * N
    if not derivs:
        return A, Q
    c12 = np.cos(a1 - a2)
    dQ1 = params.H * c12 + params.R * c1
    dQ2 = -params.H * c12 - params.R * c2
    dN1 = np.zeros(shape + (3, 2))
    dN1[..., 0, 1] = -params.H * s1
    dN1[..., 2, 1] = c1
    dN2 = np.zeros(shape + (3, 2))
    dN2[..., 0, 0] = -params.H * s2
    dN2[..., 2, 0] = c2
    dA1 = RQ * dN1 - (dQ1 / Q)[..., None, None] * A
    dA2 = RQ * dN2 - (dQ2 / Q)[..., None, None] * A
    return A, Q, dA1, dA2


def check_nonsingular(r, params: ModelParams):
    """Raise SingularShape if any shape in the batch is inside the guard."""
    r = np.asarray(r, dtype=float)
    Q = np.atleast_1d(connection_divisor(r, params))
    i = int(np.argmin(np.abs(Q)))
    if abs(Q[i]) < params.singularity_guard:
        raise SingularShape(np.reshape(r, (-1, 2))[i], Q[i],
                            params.singularity_guard)


def local_connection(r, params: ModelParams):
    """Local connection A(r), mapping joint rates to minus the body velocity.

    Raises SingularShape when |Q(r)| is below the configured guard.
    """
    check_nonsingular(r, params)
    A, _ = _connection_raw(r, params)
    return A


def world_velocity(pose, xi):
    """World-frame rates (xdot, ydot, thetadot) from body velocity xi.

    `pose` may be a Pose or an array (..., 3); `xi` a BodyVelocity or
    array (..., 3).
    """
    if isinstance(pose, Pose):
        pose = pose.as_array()
    if isinstance(xi, BodyVelocity):
        xi = xi.as_array()
    pose = np.asarray(pose, dtype=float)
    xi = np.asarray(xi, dtype=float)
    theta = pose[..., 2]
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(np.broadcast(pose[..., 0], xi[..., 0]).shape + (3,))
    out[..., 0] = c * xi[..., 0] - s * xi[..., 1]
    out[..., 1] = s * xi[..., 0] + c * xi[..., 1]
    out[..., 2] = xi[..., 2]
    return out


def body_centers(r, params: ModelParams):
    """Per-body center positions in the central body frame, (..., 3, 2)."""
    r = np.asarray(r, dtype=float)
    a1, a2 = r[..., 0], r[..., 1]
    c = np.zeros(r.shape[:-1] + (3, 2))
    c[..., 1, 0] = -params.H - params.R * np.cos(a1)
    c[..., 1, 1] = params.R * np.sin(a1)
    c[..., 2, 0] = params.H + params.R * np.cos(a2)
    c[..., 2, 1] = params.R * np.sin(a2)
    return c


def body_frame_angles(r):
    """Per-body orientation relative to the central body, (..., 3)."""
    r = np.asarray(r, dtype=float)
    phi = np.zeros(r.shape[:-1] + (3,))
    phi[..., 1] = -r[..., 0]
    phi[..., 2] = r[..., 1]
    return phi


def _perp(v):
    """90-degree rotation applied to the last axis (2-vectors)."""
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _body_pieces(r, params: ModelParams, derivs=False):
    """Velocity maps in the central-body frame.

    Returns W (..., 3, 2, 2) with u_b = W_b @ rdot the world velocity of body
    b's center expressed in the central frame, and g (..., 3, 2) with
    omega_b = g_b @ rdot. With derivs=True also dW (..., 2, 3, 2, 2) and
    dg (..., 2, 3, 2), the partials with respect to the two joint angles.
    """
    if derivs:
        A, Q, dA1, dA2 = _connection_raw(r, params, derivs=True)
    else:
        A, Q = _connection_raw(r, params)
    r = np.asarray(r, dtype=float)
    a1, a2 = r[..., 0], r[..., 1]
    s1, c1 = np.sin(a1), np.cos(a1)
    s2, c2 = np.sin(a2), np.cos(a2)
    shape = r.shape[:-1]
    R = params.R

    cts = body_centers(r, params)
    # dc_b/dr as 2x2 blocks, (..., 3, 2, 2): [i, j] = d c_b[i] / d r[j]
    Cp = np.zeros(shape + (3, 2, 2))
    Cp[..., 1, 0, 0] = R * s1
    Cp[..., 1, 1, 0] = R * c1
    Cp[..., 2, 0, 1] = -R * s2
    Cp[..., 2, 1, 1] = R * c2

    Ap = A[..., :2, :]
    Aw = A[..., 2, :]
    Jc = _perp(cts)  # (..., 3, 2)
    W = -Ap[..., None, :, :] - Jc[..., :, None] * Aw[..., None, None, :] + Cp
    g = -Aw[..., None, :] + _DPHI
    if not derivs:
        return W, g

    # partials of c_b w.r.t. each angle, (..., 2, 3, 2)
    dc = np.zeros(shape + (2, 3, 2))
    dc[..., 0, 1, 0] = R * s1
    dc[..., 0, 1, 1] = R * c1
    dc[..., 1, 2, 0] = -R * s2
    dc[..., 1, 2, 1] = R * c2
    # partials of Cp blocks, (..., 2, 3, 2, 2)
    dCp = np.zeros(shape + (2, 3, 2, 2))
    dCp[..., 0, 1, 0, 0] = R * c1
    dCp[..., 0, 1, 1, 0] = -R * s1
    dCp[..., 1, 2, 0, 1] = -R * c2
    dCp[..., 1, 2, 1, 1] = -R * s2

    dA = np.stack([dA1, dA2], axis=-3)  # (..., 2, 3, 2)
    dAp = dA[..., :2, :]
    dAw = dA[..., 2, :]
    dW = (-dAp[..., None, :, :]
          - _perp(dc)[..., :, None] * Aw[..., None, None, None, :]
          - Jc[..., None, :, :, None] * dAw[..., :, None, None, :]
          + dCp)
    dg = np.broadcast_to(-dAw[..., None, :], shape + (2, 3, 2))
    return W, g, dW, dg


def body_jacobians(r, params: ModelParams):
    """Per-body Jacobians mapping joint rates to each body's own-frame
    velocity (long, lat, angular); (..., 3, 3, 2). J_1 equals -A(r)."""
    check_nonsingular(r, params)
    W, g = _body_pieces(r, params)
    phi = body_frame_angles(r)
    Rm = rot2(-phi)  # (..., 3, 2, 2)
    J = np.empty(np.asarray(r, dtype=float).shape[:-1] + (3, 3, 2))
    J[..., :2, :] = Rm @ W
    J[..., 2, :] = g
    return J


def reduced_mass_matrix(r, params: ModelParams, check=True):
    """Shape-space inertia matrix, (..., 2, 2); symmetric positive definite
    away from singular shapes."""
    if check:
        check_nonsingular(r, params)
    W, g = _body_pieces(r, params)
    m = params.masses
    inert = params.inertias
    M = np.einsum("...bji,b,...bjk->...ik", W, m, W)
    M += np.einsum("...bi,b,...bj->...ij", g, inert, g)
    return M


def bias_forces(r, dr, params: ModelParams, check=True):
    """Velocity-quadratic generalized forces (Coriolis/centrifugal plus the
    conservative wheel-constraint forces), (..., 2)."""
    if check:
        check_nonsingular(r, params)
    r = np.asarray(r, dtype=float)
    dr = np.asarray(dr, dtype=float)
    W, g, dW, dg = _body_pieces(r, params, derivs=True)
    A, _ = _connection_raw(r, params)
    xith = -np.einsum("...j,...j->...", A[..., 2, :], dr)

    Wdot = np.einsum("...vbij,...v->...bij", dW, dr)
    gdot = np.einsum("...vbj,...v->...bj", dg, dr)
    u = np.einsum("...bij,...j->...bi", W, dr)
    acc = np.einsum("...bij,...j->...bi", Wdot, dr) + xith[..., None, None] * _perp(u)
    h = np.einsum("...bji,b,...bj->...i", W, params.masses, acc)
    omdot = np.einsum("...bj,...j->...b", gdot, dr)
    h += np.einsum("...bi,b,...b->...i", g, params.inertias, omdot)
    return h


def spring_torque(r, params: ModelParams):
    """Gradient of the joint-spring potential, (..., 2)."""
    r = np.asarray(r, dtype=float)
    return params.k * (r - params.r_eq)


def potential_energy(r, params: ModelParams):
    r = np.asarray(r, dtype=float)
    d = r - params.r_eq
    return 0.5 * np.einsum("...i,i,...i->...", d, params.k, d)


def kinetic_energy(r, dr, params: ModelParams, check=True):
    M = reduced_mass_matrix(r, params, check=check)
    dr = np.asarray(dr, dtype=float)
    return 0.5 * np.einsum("...i,...ij,...j->...", dr, M, dr)


def total_energy(r, dr, params: ModelParams, check=True):
    """Total mechanical energy at a shape state."""
    return kinetic_energy(r, dr, params, check=check) + potential_energy(r, params)


def body_kinetic_energies(r, dr, params: ModelParams):
    """Per-body kinetic energies, (..., 3); independent of the reduced
    mass matrix assembly (used as a two-route energy oracle)."""
    W, g = _body_pieces(r, params)
    u = np.einsum("...bij,...j->...bi", W, np.asarray(dr, dtype=float))
    om = np.einsum("...bj,...j->...b", g, np.asarray(dr, dtype=float))
    return 0.5 * params.masses * np.einsum("...bi,...bi->...b", u, u) \
        + 0.5 * params.inertias * om**2


def _solve_2x2_sym(M, rhs):
    """Solve M x = rhs for symmetric 2x2 blocks, batched."""
    a = M[..., 0, 0]
    b = M[..., 0, 1]
    c = M[..., 1, 1]
    det = a * c - b * b
    x0 = (c * rhs[..., 0] - b * rhs[..., 1]) / det
    x1 = (a * rhs[..., 1] - b * rhs[..., 0]) / det
    return np.stack([x0, x1], axis=-1)


def mass_matrix_condition(M):
    """Exact spectral condition number of symmetric 2x2 blocks."""
    a = M[..., 0, 0]
    b = M[..., 0, 1]
    c = M[..., 1, 1]
    mean = 0.5 * (a + c)
    rad = np.sqrt((0.5 * (a - c)) ** 2 + b**2)
    lo = mean - rad
    hi = mean + rad
    return np.where(lo > 0, hi / np.where(lo > 0, lo, 1.0), np.inf)


def forward_dynamics(r, dr, tau, params: ModelParams, check=True):
    """Joint accelerations from applied joint torques, (..., 2)."""
    if check:
        check_nonsingular(r, params)
    M = reduced_mass_matrix(r, params, check=False)
    if check:
        cond = mass_matrix_condition(M)
        if np.any(cond > params.cond_limit):
            raise IllConditioned(
                f"reduced mass matrix condition {np.max(cond):.3e} exceeds "
                f"{params.cond_limit:.1e}")
    tau = np.asarray(tau, dtype=float)
    rhs = tau - bias_forces(r, dr, params, check=False) - spring_torque(r, params)
    return _solve_2x2_sym(M, rhs)


def inverse_dynamics(r, dr, ddr, params: ModelParams, check=True):
    """Joint torques required to realize given joint accelerations."""
    if check:
        check_nonsingular(r, params)
    M = reduced_mass_matrix(r, params, check=False)
    ddr = np.asarray(ddr, dtype=float)
    return (np.einsum("...ij,...j->...i", M, ddr)
            + bias_forces(r, dr, params, check=False)
            + spring_torque(r, params))


def shape_rhs(y, tau, params: ModelParams):
    """Time derivative of the 4-state (r, rdot); batched, no guards."""
    r = y[..., 0:2]
    dr = y[..., 2:4]
    ddr = forward_dynamics(r, dr, tau, params, check=False)
    return np.concatenate([dr, ddr], axis=-1)


def full_rhs(y, tau, params: ModelParams):
    """Time derivative of the 7-state (r, rdot, x, y, theta); batched.

    The pose is reconstructed by co-integrating the world rates obtained
    from the connection; the lateral body rate is identically zero.
    """
    r = y[..., 0:2]
    dr = y[..., 2:4]
    theta = y[..., 6]
    ddr = forward_dynamics(r, dr, tau, params, check=False)
    A, _ = _connection_raw(r, params)
    xi = -np.einsum("...ij,...j->...i", A, dr)
    out = np.empty_like(y)
    out[..., 0:2] = dr
    out[..., 2:4] = ddr
    c, s = np.cos(theta), np.sin(theta)
    out[..., 4] = c * xi[..., 0] - s * xi[..., 1]
    out[..., 5] = s * xi[..., 0] + c * xi[..., 1]
    out[..., 6] = xi[..., 2]
    return out
