"""Fixed-endpoint discrete isoholonomic problem.

Find controls ``u_0..u_{N-1}`` minimizing ``sum (h/2)|u_k|^2`` such that the
shape loop closes at ``alpha_bar`` and the holonomy equals ``g_bar``.

Two solvers are provided:

* :func:`solve_direct` -- augmented Lagrangian over the 2N controls with an
  L-BFGS inner loop. Gradients come from one backward sweep of the discrete
  adjoint; costates for the optimality certificate are read off the same sweep.
* :func:`solve_shooting` -- Newton on the 5 unknown initial costates
  ``(rho_0, xi_0)``, propagating the extremal forward.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np
from scipy.optimize import minimize

from . import se2
from .errors import FixedPointDiverged, InjectivityRadius, ShapeOutOfDomain, SingularJacobian
from .integrator import (
    DiscretizationParams,
    StateTrajectory,
    accumulate,
    cost,
    holonomy,
    increments,
    rollout,
    shapes,
)
from .pmp import Costates, PMPReport, _shape_gradient, pmp_residuals, propagate_extremal
from .swimmer import SwimmerGeometry, check_shape, connection

logger = logging.getLogger(__name__)


@dataclass
class ProblemSpec:
    geometry: SwimmerGeometry = field(default_factory=SwimmerGeometry)
    params: DiscretizationParams = field(default_factory=DiscretizationParams)
    alpha_bar: np.ndarray = field(default_factory=lambda: np.zeros(2))
    g_bar: np.ndarray = field(default_factory=lambda: np.array([0.1, 0.1, 0.0]))
    g0: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.alpha_bar = np.asarray(self.alpha_bar, dtype=float).reshape(2)
        self.g_bar = np.asarray(self.g_bar, dtype=float).reshape(3)
        self.g0 = np.asarray(self.g0, dtype=float).reshape(3)
        check_shape(self.alpha_bar)
        if abs(se2.wrap_angle(self.g_bar[2])) >= np.pi - se2.THETA_MARGIN:
            raise ValueError("target holonomy rotation must satisfy |theta| < pi")

    def mirrored(self) -> "ProblemSpec":
        """The same problem reflected about the body x-axis."""
        return replace(
            self,
            alpha_bar=-self.alpha_bar,
            g_bar=self.g_bar * np.array([1.0, -1.0, -1.0]),
            g0=self.g0 * np.array([1.0, -1.0, -1.0]),
        )


@dataclass
class SolverConfig:
    method: str = "direct"
    max_outer_iterations: int = 40
    max_inner_iterations: int = 5000
    constraint_tolerance: float = 1e-6
    stationarity_tolerance: float = 1e-6
    initial_guess: str = "sinusoid"  # zero | sinusoid | file
    seed_amplitude: float = 0.01
    initial_guess_file: Optional[str] = None
    penalty_initial: float = 10.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e8
    lbfgs_memory: int = 20
    backtracking_ratio: float = 0.5
    sufficient_decrease: float = 1e-4
    fd_step: float = 1e-7
    pmp_tolerance: float = 1e-6

    def __post_init__(self):
        if self.method not in ("direct", "shooting"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.initial_guess not in ("zero", "sinusoid", "file"):
            raise ValueError(f"unknown initial guess {self.initial_guess!r}")
        for name in ("constraint_tolerance", "stationarity_tolerance", "penalty_initial", "penalty_max", "fd_step", "pmp_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.penalty_growth > 1:
            raise ValueError("penalty_growth must exceed 1")
        if not 0 < self.backtracking_ratio < 1 or not 0 < self.sufficient_decrease < 1:
            raise ValueError("line-search parameters must lie in (0, 1)")


@dataclass
class IterationRecord:
    iteration: int
    cost: float
    constraint: float
    stationarity: float

    def line(self) -> str:
        return f"{self.iteration:5d} {self.cost:.17g} {self.constraint:.6e} {self.stationarity:.6e}"


@dataclass
class Solution:
    trajectory: StateTrajectory
    costates: Costates
    cost: float
    report: PMPReport
    status: str  # converged | max_iterations | diverged | singular_jacobian
    method: str
    log: List[IterationRecord] = field(default_factory=list)
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(5))
    terminal_residual: np.ndarray = field(default_factory=lambda: np.zeros(5))
    monotone: bool = True

    @property
    def nu(self) -> float:
        return self.costates.nu

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def controls(self) -> np.ndarray:
        return self.trajectory.controls


def terminal_residual(traj: StateTrajectory, spec: ProblemSpec) -> np.ndarray:
    """``(alpha_N - alpha_bar, log(g_bar^{-1} * holonomy))``; zero iff the boundary conditions hold."""
    mismatch = se2.compose(se2.inverse(spec.g_bar), holonomy(traj))
    return np.concatenate([traj.alphas[-1] - spec.alpha_bar, se2.log(mismatch)])


@dataclass
class _Evaluation:
    value: float
    cost: float
    residual: np.ndarray
    grad: np.ndarray  # (N, 2)
    zeta: np.ndarray  # gradient-convention costates, see _costates
    mu: np.ndarray
    lam: np.ndarray


def _evaluate(u, spec: ProblemSpec, multipliers, penalty) -> _Evaluation:
    """Augmented objective and its exact gradient by one adjoint sweep.

    The group costate is transported with the closed form
    ``mu_{k+1} = Ad(g_{k+1})^T Ad(g_N)^{-T} mu_N``, which is the backward
    recursion ``mu_k = Ad(exp(-X_k))^T mu_{k+1}`` unrolled.
    """
    h = spec.params.h
    geom = spec.geometry
    u = np.asarray(u, dtype=float).reshape(-1, 2)
    alphas = shapes(spec.alpha_bar, u, h)
    conn = connection(geom, alphas[:-1], check_domain=False)
    X = increments(geom, alphas[:-1], u, h, conn=conn)
    poses = accumulate(se2.IDENTITY, X)
    r_g = se2.log(se2.compose(se2.inverse(spec.g_bar), poses[-1]))
    r = np.concatenate([alphas[-1] - spec.alpha_bar, r_g])
    J = cost(u, h)
    multipliers = np.asarray(multipliers, dtype=float)
    w = multipliers + penalty * r
    value = J + float(multipliers @ r) + 0.5 * penalty * float(r @ r)

    mu_N = se2.dlog_star(r_g, w[2:])
    spatial = se2.coAd(se2.inverse(poses[-1]), mu_N)
    mu = se2.coAd(poses[1:], spatial)
    zeta = se2.dlog_star_inv(X, mu)
    d = _shape_gradient(zeta, conn.dA_dalpha, u)
    tail = np.cumsum(d[::-1], axis=0)[::-1]
    lam = w[:2] - h * (tail - d)
    grad = h * u - h * np.einsum("kij,ki->kj", conn.A, zeta) + h * lam
    return _Evaluation(value=value, cost=J, residual=r, grad=grad, zeta=zeta, mu=mu, lam=lam)


def objective_and_gradient(controls, spec: ProblemSpec, multipliers=None, penalty: float = 0.0):
    """``cost + <multipliers, r> + penalty/2 |r|^2`` and its gradient with respect to every ``u_k``."""
    multipliers = np.zeros(5) if multipliers is None else multipliers
    ev = _evaluate(controls, spec, multipliers, penalty)
    return ev.value, ev.grad


def _costates(ev: _Evaluation) -> Costates:
    # the maximum-principle costates are the negated gradients of the terminal penalty
    return Costates(zeta=-ev.zeta, rho=-ev.mu, xi=-ev.lam, nu=-1.0)


def initial_controls(spec: ProblemSpec, config: SolverConfig) -> np.ndarray:
    N = spec.params.N
    if config.initial_guess == "zero":
        return np.zeros((N, 2))
    if config.initial_guess == "file":
        if config.initial_guess_file is None:
            raise ValueError("initial_guess = file requires initial_guess_file")
        from .tables import read_controls

        u = read_controls(config.initial_guess_file)
        if len(u) != N:
            raise ValueError(f"initial guess file has {len(u)} rows, expected {N}")
        return u
    phase = 2.0 * np.pi * np.arange(N) / N
    return config.seed_amplitude * np.stack([np.sin(phase), np.cos(phase)], axis=-1)


def _finish(spec, u, costates, status, method, log, multipliers, monotone=True) -> Solution:
    traj = rollout(spec.g0, spec.alpha_bar, u, spec.params, spec.geometry, check_domain=False)
    report = pmp_residuals(traj, costates, spec.geometry)
    return Solution(
        trajectory=traj,
        costates=costates,
        cost=cost(u, spec.params.h),
        report=report,
        status=status,
        method=method,
        log=log,
        multipliers=np.asarray(multipliers, dtype=float),
        terminal_residual=terminal_residual(traj, spec),
        monotone=monotone,
    )


def _zero_is_feasible(spec: ProblemSpec) -> bool:
    """Zero controls keep the shape at alpha_bar and the holonomy at the identity."""
    x, y, theta = spec.g_bar
    return x == 0.0 and y == 0.0 and se2.wrap_angle(theta) == 0.0


def _zero_solution(spec: ProblemSpec, method: str) -> Solution:
    N = spec.params.N
    rec = IterationRecord(0, 0.0, 0.0, 0.0)
    return _finish(spec, np.zeros((N, 2)), Costates.zeros(N), "converged", method, [rec], np.zeros(5))


_WALL = 1e30


def _stationarity(grad) -> float:
    return float(np.max(np.linalg.norm(grad, axis=-1)))


def solve_direct(spec: ProblemSpec, config: Optional[SolverConfig] = None, initial=None, progress: Optional[Callable[[IterationRecord], None]] = None) -> Solution:
    """Augmented-Lagrangian direct method; ``initial`` overrides the configured initial guess."""
    config = config or SolverConfig()
    if _zero_is_feasible(spec):
        return _zero_solution(spec, "direct")
    N, h = spec.params.N, spec.params.h
    u = initial_controls(spec, config) if initial is None else np.asarray(initial, dtype=float).reshape(N, 2)
    scale = math.sqrt(h)  # z = sqrt(h) u makes the cost an unweighted 1/2|z|^2
    inner_gtol = 0.5 * config.stationarity_tolerance / math.sqrt(2.0 * h)

    multipliers = np.zeros(5)
    penalty = config.penalty_initial
    log: List[IterationRecord] = []
    monotone = True
    previous_violation = np.inf
    status = "max_iterations"
    z = (scale * u).ravel()
    ev = _evaluate(u, spec, multipliers, penalty)

    for outer in range(1, config.max_outer_iterations + 1):
        values: List[float] = []

        def fun(zz):
            try:
                e = _evaluate(zz.reshape(N, 2) / scale, spec, multipliers, penalty)
            except InjectivityRadius:
                # trial point left the log chart: report a wall so the line search backtracks
                return _WALL, np.zeros_like(zz)
            return e.value, (e.grad / scale).ravel()

        def record(intermediate_result):
            values.append(float(intermediate_result.fun))

        try:
            res = minimize(
                fun,
                z,
                jac=True,
                method="L-BFGS-B",
                callback=record,
                options={"maxiter": config.max_inner_iterations, "maxcor": config.lbfgs_memory, "gtol": inner_gtol, "ftol": 0.0},
            )
        except (InjectivityRadius, FloatingPointError) as exc:
            logger.warning("direct solve diverged: %s", exc)
            status = "diverged"
            break
        z = res.x
        if any(b > a + 1e-12 * max(1.0, abs(a)) for a, b in zip(values, values[1:])):
            monotone = False
        ev = _evaluate(z.reshape(N, 2) / scale, spec, multipliers, penalty)
        violation = float(np.linalg.norm(ev.residual))
        stationarity = _stationarity(ev.grad)
        rec = IterationRecord(outer, ev.cost, violation, stationarity)
        log.append(rec)
        logger.info("outer %s", rec.line())
        if progress is not None:
            progress(rec)
        if violation <= config.constraint_tolerance and stationarity <= config.stationarity_tolerance:
            status = "converged"
            break
        if not np.all(np.isfinite(z)):
            status = "diverged"
            break
        multipliers = multipliers + penalty * ev.residual
        if violation > config.constraint_tolerance and violation > 0.25 * previous_violation:
            penalty = min(penalty * config.penalty_growth, config.penalty_max)
        previous_violation = violation

    u = z.reshape(N, 2) / scale
    return _finish(spec, u, _costates(ev), status, "direct", log, multipliers + penalty * ev.residual, monotone)


def _shoot(spec: ProblemSpec, v):
    traj, cs = propagate_extremal(spec.alpha_bar, se2.IDENTITY, v[:3], v[3:], spec.params.N, spec.params.h, spec.geometry)
    return terminal_residual(traj, spec), traj, cs


def solve_shooting(spec: ProblemSpec, config: Optional[SolverConfig] = None, initial_costate=None, progress=None) -> Solution:
    """Newton shooting on the initial costates ``(rho_0, xi_0)``.

    Without ``initial_costate`` the unknowns are seeded from a direct solve at a
    loose tolerance.
    """
    config = config or SolverConfig(method="shooting")
    if _zero_is_feasible(spec):
        return _zero_solution(spec, "shooting")
    if initial_costate is None:
        warm = solve_direct(spec, replace(config, method="direct", constraint_tolerance=1e-4, stationarity_tolerance=1e-4))
        initial_costate = np.concatenate([warm.costates.rho[0], warm.costates.xi[0]])
    v = np.asarray(initial_costate, dtype=float).reshape(5)

    log: List[IterationRecord] = []
    status = "max_iterations"
    r, traj, cs = _shoot(spec, v)
    norm = float(np.linalg.norm(r))
    for it in range(1, config.max_outer_iterations + 1):
        rec = IterationRecord(it - 1, cost(traj.controls, spec.params.h), norm, pmp_residuals(traj, cs, spec.geometry).stationarity)
        log.append(rec)
        if progress is not None:
            progress(rec)
        if norm <= config.constraint_tolerance:
            status = "converged"
            break
        jac = np.empty((5, 5))
        for j in range(5):
            step = config.fd_step * max(1.0, abs(v[j]))
            e = np.zeros(5)
            e[j] = step
            jac[:, j] = (_shoot(spec, v + e)[0] - _shoot(spec, v - e)[0]) / (2 * step)
        if np.linalg.cond(jac) > 1e14:
            status = "singular_jacobian"
            break
        direction = np.linalg.solve(jac, -r)
        t = 1.0
        while True:
            try:
                trial = _shoot(spec, v + t * direction)
                trial_norm = float(np.linalg.norm(trial[0]))
            except (FixedPointDiverged, InjectivityRadius):
                trial_norm = np.inf
            if trial_norm <= (1.0 - config.sufficient_decrease * t) * norm:
                break
            t *= config.backtracking_ratio
            if t < 1e-10:
                status = "diverged"
                break
        if status == "diverged":
            break
        v = v + t * direction
        r, traj, cs = trial
        norm = trial_norm
    else:
        rec = IterationRecord(config.max_outer_iterations, cost(traj.controls, spec.params.h), norm, 0.0)
        log.append(rec)
    return _finish(spec, traj.controls, cs, status, "shooting", log, np.concatenate([cs.rho[-1], cs.xi[-1]]))


def solve(spec: ProblemSpec, config: Optional[SolverConfig] = None, **kwargs) -> Solution:
    config = config or SolverConfig()
    if config.method == "shooting":
        return solve_shooting(spec, config, **kwargs)
    return solve_direct(spec, config, **kwargs)


@dataclass
class VerifyReport:
    holonomy: np.ndarray
    cost: float
    terminal_residual: float
    pmp: PMPReport
    shapes_in_domain: bool
    replay_error: float
    passed: bool
    constraint_tolerance: float
    pmp_tolerance: float

    def to_table(self) -> str:
        rows = [
            f"holonomy            {self.holonomy[0]:.17g} {self.holonomy[1]:.17g} {self.holonomy[2]:.17g}",
            f"cost                {self.cost:.17g}",
            f"terminal residual   {self.terminal_residual:.6e}  tol {self.constraint_tolerance:.3g}  "
            f"{'pass' if self.terminal_residual <= self.constraint_tolerance else 'FAIL'}",
            f"shape domain        {'pass' if self.shapes_in_domain else 'FAIL (|alpha| >= pi)'}",
            f"replay error        {self.replay_error:.3e}",
            self.pmp.to_table(self.pmp_tolerance),
            f"certified           {'yes' if self.passed else 'no'}",
        ]
        return "\n".join(rows)


def verify(solution: Solution, spec: ProblemSpec, constraint_tolerance: float = 1e-6, pmp_tolerance: float = 1e-6) -> VerifyReport:
    """Re-roll the controls and certify boundary conditions and the maximum principle."""
    traj = rollout(spec.g0, spec.alpha_bar, solution.controls, spec.params, spec.geometry, check_domain=False)
    replay = max(
        float(np.max(np.abs(traj.alphas - solution.trajectory.alphas))),
        float(np.max(np.abs(traj.poses - solution.trajectory.poses))),
    )
    residual = float(np.linalg.norm(terminal_residual(traj, spec)))
    report = pmp_residuals(traj, solution.costates, spec.geometry)
    in_domain = bool(np.all(np.abs(traj.alphas) < np.pi))
    passed = residual <= constraint_tolerance and report.passed(pmp_tolerance) and in_domain and replay <= 1e-12
    return VerifyReport(
        holonomy=holonomy(traj),
        cost=cost(traj.controls, spec.params.h),
        terminal_residual=residual,
        pmp=report,
        shapes_in_domain=in_domain,
        replay_error=replay,
        passed=passed,
        constraint_tolerance=constraint_tolerance,
        pmp_tolerance=pmp_tolerance,
    )
