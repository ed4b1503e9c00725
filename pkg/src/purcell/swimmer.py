"""Purcell three-link swimmer: geometry, resistive-force drag and local connection.

Body frame sits at the midpoint of Link 0 with its x-axis along Link 0.
Outer Link 1 is hinged at the +x end of Link 0 and leaves it at relative
angle ``alpha1``; Outer Link 2 is hinged at the -x end and leaves it in the
-x direction at relative angle ``alpha2``. Positive angles rotate either
outer link counterclockwise, and ``alpha = (0, 0)`` is the straight swimmer.

Each link element with planar velocity ``v`` feels the force density
``-(c_t t t^T + c_n n n^T) v``. Element velocities are affine in arclength,
so the drag integrals reduce to the first three arclength moments and are
evaluated exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ShapeOutOfDomain

_J = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class SwimmerGeometry:
    len0: float = 1.0
    len1: float = 1.0
    len2: float = 1.0
    drag_tangential: float = 1.0
    drag_normal: float = 2.0

    def __post_init__(self):
        for name in ("len0", "len1", "len2", "drag_tangential", "drag_normal"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")

    @classmethod
    def from_drag(cls, k: float = 1.0, ratio: float = 2.0, lengths=(1.0, 1.0, 1.0)) -> "SwimmerGeometry":
        """Geometry with tangential drag ``k`` and normal drag ``ratio * k``."""
        return cls(*map(float, lengths), drag_tangential=k, drag_normal=ratio * k)


@dataclass(frozen=True)
class DragAssembly:
    """Body wrench is ``-(omega_g @ xi + omega_alpha @ alpha_dot)``."""

    omega_g: np.ndarray
    omega_alpha: np.ndarray


@dataclass(frozen=True)
class ConnectionEval:
    """``A`` maps shape rates to minus the body velocity; ``dA_dalpha[..., i, :, :]`` is dA/dalpha_i."""

    A: np.ndarray
    dA_dalpha: np.ndarray


def check_shape(alpha) -> None:
    alpha = np.asarray(alpha, dtype=float)
    if not np.all(np.abs(alpha) < np.pi):
        bad = alpha[np.abs(alpha) >= np.pi] if alpha.ndim else alpha
        raise ShapeOutOfDomain(f"joint angles must lie in (-pi, pi); got {np.ravel(bad)[:4]}")


def link_frames(geom: SwimmerGeometry, alpha) -> np.ndarray:
    """Body-frame poses ``(x, y, theta)`` of the midpoints of Link 0, Outer Link 1 and Outer Link 2."""
    a1, a2 = np.asarray(alpha, dtype=float)
    half = geom.len0 / 2.0
    return np.array(
        [
            [0.0, 0.0, 0.0],
            [half + geom.len1 / 2.0 * np.cos(a1), geom.len1 / 2.0 * np.sin(a1), a1],
            [-half - geom.len2 / 2.0 * np.cos(a2), -geom.len2 / 2.0 * np.sin(a2), a2],
        ]
    )


def _moments(s0, s1):
    return s1 - s0, (s1**2 - s0**2) / 2.0, (s1**3 - s0**3) / 3.0


def _integral(P, Q, K, R, S, m):
    """Integral over s of (P + s Q)^T K (R + s S), given the moments m of s."""
    PT = np.swapaxes(P, -1, -2)
    QT = np.swapaxes(Q, -1, -2)
    return m[0] * (PT @ K @ R) + m[1] * (PT @ K @ S + QT @ K @ R) + m[2] * (QT @ K @ S)


def _resistance(geom, t):
    tt = t[..., :, None] * t[..., None, :]
    return geom.drag_normal * np.eye(2) + (geom.drag_tangential - geom.drag_normal) * tt


def _resistance_derivative(geom, t, dt):
    return (geom.drag_tangential - geom.drag_normal) * (dt[..., :, None] * t[..., None, :] + t[..., :, None] * dt[..., None, :])


def _intercept(p0, batch):
    P = np.zeros(batch + (2, 5))
    P[..., :, 0:2] = np.eye(2)
    P[..., :, 2] = _J @ p0
    return P


def _slope(t, column):
    Q = np.zeros(t.shape[:-1] + (2, 5))
    Jt = t @ _J.T
    Q[..., :, 2] = Jt
    if column is not None:
        Q[..., :, column] = Jt
    return Q


def _assemble(geom: SwimmerGeometry, alpha, derivatives: bool):
    """Full 5x5 resistance matrix over (vx, vy, omega, alpha1_dot, alpha2_dot), optionally with d/dalpha_i."""
    alpha = np.asarray(alpha, dtype=float)
    batch = alpha.shape[:-1]
    half = geom.len0 / 2.0

    t0 = np.broadcast_to(np.array([1.0, 0.0]), batch + (2,))
    t1 = np.stack([np.cos(alpha[..., 0]), np.sin(alpha[..., 0])], axis=-1)
    t2 = -np.stack([np.cos(alpha[..., 1]), np.sin(alpha[..., 1])], axis=-1)
    links = [
        (np.zeros(2), t0, _moments(-half, half), None),
        (np.array([half, 0.0]), t1, _moments(0.0, geom.len1), 3),
        (np.array([-half, 0.0]), t2, _moments(0.0, geom.len2), 4),
    ]

    omega = np.zeros(batch + (5, 5))
    d_omega = np.zeros(batch + (2, 5, 5))
    for p0, t, m, column in links:
        P = _intercept(p0, batch)
        Q = _slope(t, column)
        K = _resistance(geom, t)
        omega += _integral(P, Q, K, P, Q, m)
        if derivatives and column is not None:
            dt = t @ _J.T
            dQ = _slope(dt, column)
            dK = _resistance_derivative(geom, t, dt)
            zero = np.zeros_like(P)
            d_omega[..., column - 3, :, :] = (
                _integral(zero, dQ, K, P, Q, m) + _integral(P, Q, dK, P, Q, m) + _integral(P, Q, K, zero, dQ, m)
            )
    return omega, d_omega


def _harmonics(angle):
    angle = np.asarray(angle, dtype=float)
    return np.stack([np.ones_like(angle), np.cos(angle), np.sin(angle), np.cos(2 * angle), np.sin(2 * angle)], axis=-1)


def _harmonics_derivative(angle):
    angle = np.asarray(angle, dtype=float)
    return np.stack(
        [np.zeros_like(angle), -np.sin(angle), np.cos(angle), -2 * np.sin(2 * angle), 2 * np.cos(2 * angle)], axis=-1
    )


@lru_cache(maxsize=32)
def _fourier_coefficients(geom: SwimmerGeometry):
    """Omega(alpha) = base + sum_i harmonics(alpha_i) @ coef_i, exactly.

    An outer link contributes P^T K P (second harmonics through t t^T),
    P^T K Q = c_n P^T J t (first harmonics) and Q^T K Q = c_n |t|^2 (constant),
    so every entry is a trigonometric polynomial of degree two in its own joint
    angle. The coefficients are recovered by interpolation at five angles.
    Returns ``(omega at alpha = 0, coef_1, coef_2)`` with each coefficient array of shape ``(5, 25)``.
    """
    nodes = 2 * np.pi * np.arange(5) / 5
    basis = _harmonics(nodes)
    base, _ = _assemble(geom, np.zeros(2), derivatives=False)
    coefs = []
    for i in range(2):
        samples = np.zeros((5, 2))
        samples[:, i] = nodes
        omega, _ = _assemble(geom, samples, derivatives=False)
        # fit the change relative to the straight shape; it vanishes at alpha_i = 0
        coefs.append(np.linalg.solve(basis, (omega - base).reshape(5, 25)))
    return base.reshape(25), coefs[0], coefs[1]


def _omega_fast(geom: SwimmerGeometry, alpha):
    alpha = np.asarray(alpha, dtype=float)
    base, c1, c2 = _fourier_coefficients(geom)
    omega = base + _harmonics(alpha[..., 0]) @ c1 + _harmonics(alpha[..., 1]) @ c2
    d1 = _harmonics_derivative(alpha[..., 0]) @ c1
    d2 = _harmonics_derivative(alpha[..., 1]) @ c2
    shape = alpha.shape[:-1]
    return omega.reshape(shape + (5, 5)), np.stack([d1, d2], axis=-2).reshape(shape + (2, 5, 5))


def _inv_sym3(m):
    """Inverse of stacked symmetric 3x3 matrices via the adjugate."""
    a, b, c = m[..., 0, 0], m[..., 0, 1], m[..., 0, 2]
    d, e, f = m[..., 1, 1], m[..., 1, 2], m[..., 2, 2]
    A = d * f - e * e
    B = c * e - b * f
    C = b * e - c * d
    D = a * f - c * c
    E = b * c - a * e
    F = a * d - b * b
    det = a * A + b * B + c * C
    inv = np.stack([A, B, C, B, D, E, C, E, F], axis=-1).reshape(m.shape) / det[..., None, None]
    return inv


def drag_assembly(geom: SwimmerGeometry, alpha) -> DragAssembly:
    omega, _ = _assemble(geom, alpha, derivatives=False)
    return DragAssembly(omega_g=omega[..., :3, :3], omega_alpha=omega[..., :3, 3:])


def connection(geom: SwimmerGeometry, alpha, check_domain: bool = True) -> ConnectionEval:
    """Local connection A(alpha) = omega_g^{-1} omega_alpha and its shape Jacobian.

    Accepts a single shape ``(2,)`` or a stack ``(..., 2)``. With
    ``check_domain=False`` the formula is evaluated outside (-pi, pi)^2 as
    well, which the optimizers rely on for intermediate iterates.
    """
    if check_domain:
        check_shape(alpha)
    omega, d_omega = _omega_fast(geom, alpha)
    inv = _inv_sym3(omega[..., :3, :3])
    A = inv @ omega[..., :3, 3:]
    rhs = d_omega[..., :3, 3:] - d_omega[..., :3, :3] @ A[..., None, :, :]
    dA = inv[..., None, :, :] @ rhs
    return ConnectionEval(A=A, dA_dalpha=dA)


def connection_reference(geom: SwimmerGeometry, alpha) -> ConnectionEval:
    """Same as :func:`connection` but assembled link by link with linear solves (slow, for cross-checks)."""
    omega, d_omega = _assemble(geom, alpha, derivatives=True)
    og = omega[..., :3, :3]
    A = np.linalg.solve(og, omega[..., :3, 3:])
    rhs = d_omega[..., :3, 3:] - d_omega[..., :3, :3] @ A[..., None, :, :]
    return ConnectionEval(A=A, dA_dalpha=np.linalg.solve(og[..., None, :, :], rhs))


def connection_jacobian_check(geom: SwimmerGeometry, alpha, step: float = 1e-6) -> float:
    """Max relative discrepancy between the analytic dA/dalpha and central differences."""
    alpha = np.asarray(alpha, dtype=float)
    ev = connection(geom, alpha)
    worst = 0.0
    for i in range(2):
        e = np.zeros(2)
        e[i] = step
        fd = (connection(geom, alpha + e).A - connection(geom, alpha - e).A) / (2 * step)
        scale = max(np.max(np.abs(ev.dA_dalpha[i])), 1.0)
        worst = max(worst, float(np.max(np.abs(fd - ev.dA_dalpha[i])) / scale))
    return worst
