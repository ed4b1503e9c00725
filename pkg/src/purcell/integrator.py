"""Structure-preserving discrete kinematics of the swimmer.

One step with piecewise-constant rates ``u`` and the connection frozen at the
left endpoint::

    alpha_{k+1} = alpha_k + h u_k
    g_{k+1}     = g_k exp(-h A(alpha_k) u_k)

The group update uses the exact SE(2) exponential, so poses never leave the
group and no re-projection is needed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import se2
from .swimmer import SwimmerGeometry, connection


@dataclass(frozen=True)
class DiscretizationParams:
    h: float = 0.01
    N: int = 10_000

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"step length h must be positive, got {self.h!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"step count N must be a positive integer, got {self.N!r}")

    @property
    def T(self) -> float:
        return self.h * self.N

    @property
    def times(self) -> np.ndarray:
        return self.h * np.arange(self.N + 1)


@dataclass
class StateTrajectory:
    """Shapes ``(N+1, 2)``, poses ``(N+1, 3)`` and controls ``(N, 2)`` on a uniform grid of step ``h``."""

    alphas: np.ndarray
    poses: np.ndarray
    controls: np.ndarray
    h: float

    @property
    def N(self) -> int:
        return len(self.controls)

    @property
    def times(self) -> np.ndarray:
        return self.h * np.arange(self.N + 1)

    def body_velocities(self, geom: SwimmerGeometry) -> np.ndarray:
        """Algebra increments X_k = -h A(alpha_k) u_k, shape ``(N, 3)``."""
        return increments(geom, self.alphas[:-1], self.controls, self.h, check_domain=False)


def increments(geom, alphas, controls, h, check_domain=True, conn=None):
    if conn is None:
        conn = connection(geom, alphas, check_domain=check_domain)
    return -h * np.einsum("...ij,...j->...i", conn.A, np.asarray(controls, dtype=float))


def step(g, alpha, u, h: float, geom: SwimmerGeometry):
    alpha = np.asarray(alpha, dtype=float)
    u = np.asarray(u, dtype=float)
    X = increments(geom, alpha, u, h)
    return se2.compose(g, se2.exp(X)), alpha + h * u


def accumulate(g0, X) -> np.ndarray:
    """Poses ``g_k = g0 exp(X_0) ... exp(X_{k-1})`` for k = 0..N.

    Equivalent to iterating :func:`se2.compose`; the orientation is a running
    sum and the translation a sum of rotated increments, which vectorizes.
    """
    g0 = np.asarray(g0, dtype=float)
    inc = se2.exp(X)
    theta = g0[2] + np.concatenate([[0.0], np.cumsum(inc[:, 2])])
    c, s = np.cos(theta[:-1]), np.sin(theta[:-1])
    dx = c * inc[:, 0] - s * inc[:, 1]
    dy = s * inc[:, 0] + c * inc[:, 1]
    x = g0[0] + np.concatenate([[0.0], np.cumsum(dx)])
    y = g0[1] + np.concatenate([[0.0], np.cumsum(dy)])
    return np.stack([x, y, theta], axis=-1)


def shapes(alpha0, controls, h: float) -> np.ndarray:
    controls = np.asarray(controls, dtype=float).reshape(-1, 2)
    return np.asarray(alpha0, dtype=float) + h * np.concatenate([np.zeros((1, 2)), np.cumsum(controls, axis=0)])


def rollout(g0, alpha0, controls, params: DiscretizationParams, geom: SwimmerGeometry, check_domain: bool = True):
    controls = np.asarray(controls, dtype=float).reshape(-1, 2)
    if len(controls) != params.N:
        raise ValueError(f"expected {params.N} control rows, got {len(controls)}")
    alphas = shapes(alpha0, controls, params.h)
    X = increments(geom, alphas[:-1], controls, params.h, check_domain=check_domain)
    return StateTrajectory(alphas=alphas, poses=accumulate(g0, X), controls=controls, h=params.h)


def holonomy(traj: StateTrajectory) -> np.ndarray:
    return se2.compose(se2.inverse(traj.poses[0]), traj.poses[-1])


def cost(controls, params_or_h) -> float:
    h = getattr(params_or_h, "h", params_or_h)
    controls = np.asarray(controls, dtype=float)
    return float(0.5 * h * np.sum(controls * controls))


def left_translate(traj: StateTrajectory, g) -> StateTrajectory:
    return StateTrajectory(traj.alphas, se2.compose(g, traj.poses), traj.controls, traj.h)
