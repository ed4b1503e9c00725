"""Independent reference computations used by the tests.

Nothing here calls into the closed forms under test: SE(2) products go through
plain 3x3 matrices, the exponential through an ODE solve, and the drag
matrices through brute-force midpoint quadrature over each link.
"""
import numpy as np
from scipy.integrate import solve_ivp


def mat(g):
    x, y, th = g
    c, s = np.cos(th), np.sin(th)
    return np.array([[c, -s, x], [s, c, y], [0.0, 0.0, 1.0]])


def unmat(m):
    return np.array([m[0, 2], m[1, 2], np.arctan2(m[1, 0], m[0, 0])])


def hat(X):
    vx, vy, w = X
    return np.array([[0.0, -w, vx], [w, 0.0, vy], [0.0, 0.0, 0.0]])


def exp_ode(X, rtol=1e-13, atol=1e-14):
    """Integrate g' = g hat(X) from the identity over unit time."""
    H = hat(X)

    def rhs(_, y):
        return (y.reshape(3, 3) @ H).ravel()

    sol = solve_ivp(rhs, (0.0, 1.0), np.eye(3).ravel(), method="DOP853", rtol=rtol, atol=atol)
    return unmat(sol.y[:, -1].reshape(3, 3))


def fd_derivative(f, x, step=1e-6):
    """Central differences of a vector function, columns indexed by components of x."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = step
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * step))
    return np.stack(cols, axis=-1)


def _link_points(alpha, lengths, segments):
    """Midpoints, tangents, d(point)/d(alpha) columns and segment length per link."""
    a1, a2 = alpha
    l0, l1, l2 = lengths
    out = []
    # base link
    s = (np.arange(segments) + 0.5) / segments * l0 - l0 / 2
    pts = np.stack([s, np.zeros_like(s)], -1)
    out.append((pts, np.array([1.0, 0.0]), np.zeros((segments, 2, 2)), l0 / segments))
    # outer link 1 hinged at (+l0/2, 0)
    s = (np.arange(segments) + 0.5) / segments * l1
    t1 = np.array([np.cos(a1), np.sin(a1)])
    pts = np.array([l0 / 2, 0.0]) + s[:, None] * t1
    d = np.zeros((segments, 2, 2))
    d[:, :, 0] = s[:, None] * np.array([-np.sin(a1), np.cos(a1)])
    out.append((pts, t1, d, l1 / segments))
    # outer link 2 hinged at (-l0/2, 0), pointing away along -x when straight
    s = (np.arange(segments) + 0.5) / segments * l2
    t2 = -np.array([np.cos(a2), np.sin(a2)])
    pts = np.array([-l0 / 2, 0.0]) + s[:, None] * t2
    d = np.zeros((segments, 2, 2))
    d[:, :, 1] = s[:, None] * np.array([np.sin(a2), -np.cos(a2)])
    out.append((pts, t2, d, l2 / segments))
    return out


def drag_quadrature(alpha, lengths=(1.0, 1.0, 1.0), c_t=1.0, c_n=2.0, segments=10_000):
    """(omega_g, omega_alpha) with wrench = -(omega_g xi + omega_alpha alpha_dot), by midpoint quadrature."""
    omega = np.zeros((3, 5))
    for pts, t, dpts, ds in _link_points(alpha, lengths, segments):
        K = c_n * np.eye(2) + (c_t - c_n) * np.outer(t, t)
        # velocity of each point for unit generalized velocity e_j, j over (vx, vy, w, a1dot, a2dot)
        vel = np.zeros((len(pts), 2, 5))
        vel[:, 0, 0] = 1.0
        vel[:, 1, 1] = 1.0
        vel[:, 0, 2] = -pts[:, 1]
        vel[:, 1, 2] = pts[:, 0]
        vel[:, :, 3:] = dpts
        force = np.einsum("ab,nbj->naj", K, vel)
        torque = pts[:, 0, None] * force[:, 1, :] - pts[:, 1, None] * force[:, 0, :]
        omega[:2] += force.sum(axis=0) * ds
        omega[2] += torque.sum(axis=0) * ds
    return omega[:, :3], omega[:, 3:]


def connection_quadrature(alpha, **kwargs):
    og, oa = drag_quadrature(alpha, **kwargs)
    return np.linalg.solve(og, oa)


def rollout_loop(g0, alpha0, controls, h, A_of):
    """Step-by-step rollout with matrix products and an ODE exponential per step."""
    g = mat(g0)
    alpha = np.asarray(alpha0, dtype=float).copy()
    poses = [unmat(g)]
    for u in controls:
        X = -h * A_of(alpha) @ u
        g = g @ mat(exp_ode(X))
        alpha = alpha + h * u
        poses.append(unmat(g))
    return np.array(poses)
