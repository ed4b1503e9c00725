"""Discrete Pontryagin conditions for the swimmer and a generic checker.

Costates at step k (k = 0..N-1):

* ``zeta[k]`` pairs with the algebra increment ``X_k = -h A(alpha_k) u_k``,
* ``rho[k] = M(X_k)^T zeta[k]`` is its pull-back through the trivialized
  log-derivative (see :func:`purcell.se2.dlog_star`),
* ``xi[k]`` pairs with ``alpha_{k+1}``.

With ``nu`` in {-1, 0} the Hamiltonian is::

    H = (h nu / 2)|u|^2 - h <zeta, A(alpha) u> + <xi, alpha + h u>

and the conditions checked are

* ``rho[k-1] = Ad*_{exp(-X_k)} rho[k]``  (coadjoint transport back across step k),
* ``xi[k-1]  = xi[k] - h d/dalpha <zeta[k], A(alpha) u_k>`` at ``alpha_k``,
* ``D_u H = h nu u - h A^T zeta + h xi = 0``, i.e. ``u = xi - A^T zeta`` when ``nu = -1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import se2
from .errors import FixedPointDiverged, InjectivityRadius
from .integrator import StateTrajectory, accumulate, increments
from .swimmer import SwimmerGeometry, connection


@dataclass
class Costates:
    zeta: np.ndarray  # (N, 3)
    rho: np.ndarray  # (N, 3)
    xi: np.ndarray  # (N, 2)
    nu: float = -1.0

    def __post_init__(self):
        if self.nu not in (-1, 0):
            raise ValueError(f"nu must be -1 or 0, got {self.nu!r}")

    @property
    def N(self) -> int:
        return len(self.xi)

    @classmethod
    def zeros(cls, N: int, nu: float = -1.0) -> "Costates":
        return cls(np.zeros((N, 3)), np.zeros((N, 3)), np.zeros((N, 2)), nu)


def _shape_gradient(zeta, dA, u):
    """[<zeta, dA/dalpha_i u>]_i for stacked inputs."""
    return np.einsum("...a,...iab,...b->...i", zeta, dA, u)


def hamiltonian(zeta, xi, alpha, u, nu, h, geom: SwimmerGeometry) -> float:
    A = connection(geom, alpha, check_domain=False).A
    u = np.asarray(u, dtype=float)
    return float(
        0.5 * h * nu * u @ u - h * np.asarray(zeta) @ (A @ u) + np.asarray(xi) @ (np.asarray(alpha) + h * u)
    )


def hamiltonian_grad_u(zeta, xi, alpha, u, nu, h, geom: SwimmerGeometry):
    A = connection(geom, alpha, check_domain=False).A
    return h * nu * np.asarray(u, dtype=float) - h * np.einsum("...ij,...i->...j", A, zeta) + h * np.asarray(xi)


def optimal_control(zeta, xi, alpha, geom: SwimmerGeometry):
    """Stationary point of the normal Hamiltonian: u = xi - A(alpha)^T zeta."""
    A = connection(geom, alpha, check_domain=False).A
    return np.asarray(xi, dtype=float) - np.einsum("...ij,...i->...j", A, zeta)


def adjoint_step_rho_backward(rho_k, alpha_k, u_k, h, geom: SwimmerGeometry):
    X = increments(geom, alpha_k, u_k, h, check_domain=False)
    return se2.coAd(se2.exp(-X), rho_k)


def adjoint_step_rho_forward(rho_prev, alpha_k, u_k, h, geom: SwimmerGeometry):
    X = increments(geom, alpha_k, u_k, h, check_domain=False)
    return se2.coAd(se2.exp(X), rho_prev)


def adjoint_step_xi_backward(xi_k, zeta_k, alpha_k, u_k, h, geom: SwimmerGeometry):
    dA = connection(geom, alpha_k, check_domain=False).dA_dalpha
    return np.asarray(xi_k, dtype=float) - h * _shape_gradient(np.asarray(zeta_k, dtype=float), dA, np.asarray(u_k, dtype=float))


def zeta_from_rho(rho_k, xi_k, alpha_k, h, geom: SwimmerGeometry, tol: float = 1e-12, max_iter: int = 50):
    """Solve ``zeta = dlog_star_inv(X(u), rho)``, ``u = xi - A^T zeta`` by fixed-point iteration.

    Returns ``(zeta, u, iterations)``.
    """
    rho_k = np.asarray(rho_k, dtype=float)
    A = connection(geom, alpha_k, check_domain=False).A
    zeta = rho_k.copy()
    for it in range(1, max_iter + 1):
        u = xi_k - A.T @ zeta
        try:
            new = se2.dlog_star_inv(-h * A @ u, rho_k)
        except InjectivityRadius as exc:
            raise FixedPointDiverged(f"zeta/rho iterate left the exponential chart (h={h}): {exc}") from exc
        if np.max(np.abs(new - zeta)) <= tol:
            zeta = new
            return zeta, xi_k - A.T @ zeta, it
        zeta = new
    raise FixedPointDiverged(f"zeta/rho coupling did not converge in {max_iter} iterations (h={h})")


def forward_costate_step(rho_prev, xi_prev, alpha_k, u_guess, h, geom: SwimmerGeometry, tol: float = 1e-13, max_iter: int = 50):
    """Invert both backward recursions across step k.

    Given ``rho[k-1], xi[k-1]`` and ``alpha_k``, find ``(zeta[k], rho[k], xi[k], u_k)``
    consistent with the transport, the shape recursion, the rho definition and the
    normal stationarity condition. Fixed-point iteration on ``u_k``.
    """
    conn = connection(geom, alpha_k, check_domain=False)
    A, dA = conn.A, conn.dA_dalpha
    u = np.asarray(u_guess, dtype=float)
    try:
        return _forward_costate_iteration(rho_prev, xi_prev, A, dA, u, h, tol, max_iter)
    except InjectivityRadius as exc:
        raise FixedPointDiverged(f"forward costate iterate left the exponential chart (h={h}): {exc}") from exc


def _forward_costate_iteration(rho_prev, xi_prev, A, dA, u, h, tol, max_iter):
    for _ in range(max_iter):
        X = -h * A @ u
        rho = se2.coAd(se2.exp(X), rho_prev)
        zeta = se2.dlog_star_inv(X, rho)
        xi = xi_prev + h * _shape_gradient(zeta, dA, u)
        new = xi - A.T @ zeta
        if np.max(np.abs(new - u)) <= tol * max(1.0, np.max(np.abs(new))):
            u = new
            X = -h * A @ u
            rho = se2.coAd(se2.exp(X), rho_prev)
            zeta = se2.dlog_star_inv(X, rho)
            xi = xi_prev + h * _shape_gradient(zeta, dA, u)
            return zeta, rho, xi, u
        u = new
    raise FixedPointDiverged(f"forward costate step did not converge in {max_iter} iterations (h={h})")


def propagate_extremal(alpha0, g0, rho0, xi0, N: int, h: float, geom: SwimmerGeometry):
    """Build a normal extremal forward from initial costates ``(rho0, xi0)``.

    Returns ``(trajectory, costates)``; every PMP condition holds by construction.
    """
    alphas = np.empty((N + 1, 2))
    alphas[0] = alpha0
    controls = np.empty((N, 2))
    zeta = np.empty((N, 3))
    rho = np.empty((N, 3))
    xi = np.empty((N, 2))
    rho[0] = rho0
    xi[0] = xi0
    zeta[0], controls[0], _ = zeta_from_rho(rho0, np.asarray(xi0, dtype=float), alphas[0], h, geom)
    alphas[1] = alphas[0] + h * controls[0]
    for k in range(1, N):
        zeta[k], rho[k], xi[k], controls[k] = forward_costate_step(rho[k - 1], xi[k - 1], alphas[k], controls[k - 1], h, geom)
        alphas[k + 1] = alphas[k] + h * controls[k]
    X = increments(geom, alphas[:-1], controls, h, check_domain=False)
    traj = StateTrajectory(alphas=alphas, poses=accumulate(g0, X), controls=controls, h=h)
    return traj, Costates(zeta=zeta, rho=rho, xi=xi, nu=-1.0)


@dataclass
class PMPReport:
    state: float
    rho_definition: float
    rho_recursion: float
    xi_recursion: float
    stationarity: float
    nontrivial: bool
    stationarity_per_step: np.ndarray = field(repr=False, default=None)

    def rows(self):
        return [
            ("state dynamics", self.state),
            ("rho definition", self.rho_definition),
            ("rho recursion", self.rho_recursion),
            ("xi recursion", self.xi_recursion),
            ("stationarity", self.stationarity),
        ]

    def passed(self, tol: float = 1e-6) -> bool:
        return self.nontrivial and all(value <= tol for _, value in self.rows())

    def to_table(self, tol: float = 1e-6) -> str:
        lines = [f"{'condition':<18} {'max residual':>24}  {'tolerance':>10}  verdict"]
        for name, value in self.rows():
            lines.append(f"{name:<18} {value:>24.17g}  {tol:>10.3g}  {'pass' if value <= tol else 'FAIL'}")
        lines.append(f"{'non-triviality':<18} {'':>24}  {'':>10}  {'pass' if self.nontrivial else 'FAIL'}")
        return "\n".join(lines)


def _max_norm(a) -> float:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(a, axis=-1)))


def pmp_residuals(traj: StateTrajectory, costates: Costates, geom: SwimmerGeometry, nu: Optional[float] = None) -> PMPReport:
    """Max-norm residuals of every discrete optimality condition along a trajectory."""
    nu = costates.nu if nu is None else nu
    h = traj.h
    N = traj.N
    if costates.N != N:
        raise ValueError(f"costates cover {costates.N} steps, trajectory has {N}")
    u = traj.controls
    alphas = traj.alphas
    conn = connection(geom, alphas[:-1], check_domain=False)
    X = increments(geom, alphas[:-1], u, h, conn=conn)

    shape_res = alphas[1:] - alphas[:-1] - h * u
    step_actual = se2.compose(se2.inverse(traj.poses[:-1]), traj.poses[1:])
    group_res = se2.log(se2.compose(se2.exp(-X), step_actual))
    state = max(_max_norm(shape_res), _max_norm(group_res))

    rho_def = _max_norm(costates.rho - se2.dlog_star(X, costates.zeta))
    rho_rec = _max_norm(costates.rho[:-1] - se2.coAd(se2.exp(-X[1:]), costates.rho[1:]))
    xi_prev = costates.xi[1:] - h * _shape_gradient(costates.zeta[1:], conn.dA_dalpha[1:], u[1:])
    xi_rec = _max_norm(costates.xi[:-1] - xi_prev)

    grad = h * nu * u - h * np.einsum("kij,ki->kj", conn.A, costates.zeta) + h * costates.xi
    per_step = np.linalg.norm(grad, axis=-1)
    scale = max(np.max(np.abs(costates.zeta), initial=0.0), np.max(np.abs(costates.xi), initial=0.0), abs(nu))
    return PMPReport(
        state=state,
        rho_definition=rho_def,
        rho_recursion=rho_rec,
        xi_recursion=xi_rec,
        stationarity=float(per_step.max(initial=0.0)),
        nontrivial=bool(scale > 0),
        stationarity_per_step=per_step,
    )


# ---------------------------------------------------------------------------
# generic checker for x_{t+1} = f_t(q, x, u), q_{t+1} = q_t s_t(q, x, u)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box bounds must have equal shape and lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def vertices(self) -> np.ndarray:
        n = len(self.lower)
        corners = np.array(np.meshgrid(*[[0, 1]] * n, indexing="ij")).reshape(n, -1).T
        return np.where(corners == 1, self.upper, self.lower)

    def project(self, u):
        return np.clip(u, self.lower, self.upper)


@dataclass
class ControlSystem:
    """Callbacks ``f(t, q, x, u) -> x_next``, ``s(t, q, x, u) -> pose increment``, ``c(t, q, x, u) -> cost``.

    ``gradients(t, zeta, xi, q, x, u, nu) -> (D_q H, D_x H, D_u H)`` may supply
    exact Hamiltonian derivatives (``D_q`` left-trivialized); otherwise they are
    taken by central differences with step ``fd_step``.
    """

    f: Callable
    s: Callable
    c: Callable
    gradients: Optional[Callable] = None
    fd_step: float = 1e-6

    def hamiltonian(self, t, zeta, xi, q, x, u, nu):
        return nu * self.c(t, q, x, u) + se2.pair(zeta, se2.log(self.s(t, q, x, u))) + float(np.dot(xi, self.f(t, q, x, u)))

    def hamiltonian_gradients(self, t, zeta, xi, q, x, u, nu):
        if self.gradients is not None:
            return self.gradients(t, zeta, xi, q, x, u, nu)
        eps = self.fd_step

        def H(q_, x_, u_):
            return self.hamiltonian(t, zeta, xi, q_, x_, u_, nu)

        Dq = np.array([(H(se2.compose(q, se2.exp(eps * e)), x, u) - H(se2.compose(q, se2.exp(-eps * e)), x, u)) / (2 * eps) for e in np.eye(3)])
        Dx = np.array([(H(q, x + eps * e, u) - H(q, x - eps * e, u)) / (2 * eps) for e in np.eye(len(x))])
        Du = np.array([(H(q, x, u + eps * e) - H(q, x, u - eps * e)) / (2 * eps) for e in np.eye(len(u))])
        return Dq, Dx, Du


@dataclass
class GenericReport:
    state: float
    rho_definition: float
    rho_recursion: float
    xi_recursion: float
    gradient_condition: float
    vertex_max: float
    nontrivial: bool

    def rows(self):
        return [
            ("M-a state", self.state),
            ("rho definition", self.rho_definition),
            ("M-b rho", self.rho_recursion),
            ("M-b xi", self.xi_recursion),
            ("M-c gradient", self.gradient_condition),
        ]

    def passed(self, tol: float = 1e-6) -> bool:
        return self.nontrivial and all(v <= tol for _, v in self.rows())

    def to_table(self, tol: float = 1e-6) -> str:
        lines = [f"{'condition':<16} {'max residual':>24}  verdict"]
        for name, value in self.rows():
            lines.append(f"{name:<16} {value:>24.17g}  {'pass' if value <= tol else 'FAIL'}")
        lines.append(f"{'M-c vertex max':<16} {self.vertex_max:>24.17g}  {'pass' if self.vertex_max <= tol else 'FAIL'}")
        lines.append(f"{'M-d nontrivial':<16} {'':>24}  {'pass' if self.nontrivial else 'FAIL'}")
        return "\n".join(lines)


def generic_pmp_check(system: ControlSystem, boxes: Sequence[Box], poses, states, controls, costates: Costates, nu=None) -> GenericReport:
    """Check the discrete maximum principle for a system on G x R^n.

    ``poses`` and ``states`` have N+1 rows, ``controls`` and the costates N.
    The gradient condition ``<D_u H, w - u_t> <= 0`` for all ``w`` in the box is
    reported two ways: the norm of the projected-gradient step
    ``|P(u + D_u H) - u|`` (equal to ``|D_u H|`` at interior points) and the
    largest value of the linear form over the box vertices.
    """
    nu = costates.nu if nu is None else nu
    poses = np.asarray(poses, dtype=float)
    states = np.asarray(states, dtype=float)
    controls = np.asarray(controls, dtype=float)
    N = len(controls)
    state = rho_def = rho_rec = xi_rec = grad_cond = 0.0
    vertex_max = -np.inf
    Dq = np.zeros((N, 3))
    Dx = np.zeros((N, states.shape[1]))
    for t in range(N):
        q, x, u = poses[t], states[t], controls[t]
        inc = system.s(t, q, x, u)
        state = max(
            state,
            float(np.linalg.norm(states[t + 1] - system.f(t, q, x, u))),
            float(np.linalg.norm(se2.log(se2.compose(se2.inverse(se2.compose(q, inc)), poses[t + 1])))),
        )
        X = se2.log(inc)
        rho_def = max(rho_def, float(np.linalg.norm(costates.rho[t] - se2.dlog_star(X, costates.zeta[t]))))
        Dq[t], Dx[t], Du = system.hamiltonian_gradients(t, costates.zeta[t], costates.xi[t], q, x, u, nu)
        box = boxes[t]
        grad_cond = max(grad_cond, float(np.linalg.norm(box.project(u + Du) - u)))
        vertex_max = max(vertex_max, float(np.max((box.vertices() - u) @ Du)))
        if t > 0:
            transported = se2.coAd(se2.inverse(inc), costates.rho[t]) + Dq[t]
            rho_rec = max(rho_rec, float(np.linalg.norm(costates.rho[t - 1] - transported)))
            xi_rec = max(xi_rec, float(np.linalg.norm(costates.xi[t - 1] - Dx[t])))
    scale = max(np.max(np.abs(costates.zeta), initial=0.0), np.max(np.abs(costates.xi), initial=0.0), abs(nu))
    return GenericReport(state, rho_def, rho_rec, xi_rec, grad_cond, max(vertex_max, 0.0) if N else 0.0, bool(scale > 0))


def purcell_system(geom: SwimmerGeometry, h: float) -> ControlSystem:
    """The swimmer written as a generic system with exact Hamiltonian derivatives."""

    def f(t, q, x, u):
        return x + h * u

    def s(t, q, x, u):
        return se2.exp(increments(geom, x, u, h, check_domain=False))

    def c(t, q, x, u):
        return 0.5 * h * float(u @ u)

    def gradients(t, zeta, xi, q, x, u, nu):
        conn = connection(geom, x, check_domain=False)
        Dx = xi - h * _shape_gradient(zeta, conn.dA_dalpha, u)
        Du = h * nu * u - h * conn.A.T @ zeta + h * xi
        return np.zeros(3), Dx, Du

    return ControlSystem(f=f, s=s, c=c, gradients=gradients)
