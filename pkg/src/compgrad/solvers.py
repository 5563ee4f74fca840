"""Discrete solvers and the continuous-time flow for two-player games.

All discrete updates move by z' = z - eta * g, where g is the plain game
gradient (df/dx, -df/dy) for gda/omda and the competitive gradient g_alpha
for cgo/ocgo; cgd is cgo with alpha tied to the step size.  omda and ocgo
are two-stage: a half step from z, then a full step from z using the
gradient at the half point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .competitive import DEFAULT_SOLVE, SolveSettings, competitive_gradient, proximal_map
from .errors import ConfigError, SolveError
from .problems import IteratePoint, ProblemOracle

CONVERGED = "converged"
MAX_ITERS = "max_iters"
DIVERGED = "diverged"

ALGORITHMS = ("gda", "cgd", "cgo", "omda", "ocgo")


@dataclass(frozen=True)
class StepSchedule:
    """Step-size schedule.  eta_at(n) is indexed from n = 1.

    constant: eta_at(n) = eta.
    robbins_monro: eta_at(n) = c / (n + n0)**p with p in (0.5, 1], c > 0,
    n0 >= 0 (square-summable but not summable, so p = 0.5 is rejected).
    """

    kind: Literal["constant", "robbins_monro"] = "constant"
    eta: float = 0.05
    c: float = 0.5
    n0: float = 10.0
    p: float = 1.0

    def __post_init__(self):
        if self.kind == "constant":
            if not (np.isfinite(self.eta) and self.eta > 0):
                raise ConfigError("schedule.eta must be a positive finite scalar")
        elif self.kind == "robbins_monro":
            if not (np.isfinite(self.c) and self.c > 0):
                raise ConfigError("schedule.c must be > 0")
            if not (np.isfinite(self.n0) and self.n0 >= 0):
                raise ConfigError("schedule.n0 must be >= 0")
            if not (0.5 < self.p <= 1.0):
                raise ConfigError("schedule.p must lie in (0.5, 1]; "
                                  f"got {self.p} (p = 0.5 is not square-summable-compatible)")
        else:
            raise ConfigError(f"schedule.kind must be 'constant' or 'robbins_monro', "
                              f"got {self.kind!r}")

    def eta_at(self, n: int) -> float:
        if self.kind == "constant":
            return self.eta
        return self.c / (n + self.n0) ** self.p


def constant_schedule(eta: float = 0.05) -> StepSchedule:
    return StepSchedule(kind="constant", eta=eta)


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str
    alpha: float = 0.0
    schedule: StepSchedule = field(default_factory=constant_schedule)
    max_iters: int = 100
    grad_tol: float = 0.0
    divergence_threshold: float = 1e6
    solve: SolveSettings = field(default_factory=SolveSettings)
    record_half_steps: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"solver.algorithm must be one of {ALGORITHMS}, "
                              f"got {self.algorithm!r}")
        if not np.isfinite(self.alpha):
            raise ConfigError("solver.alpha must be finite")
        if self.max_iters < 1:
            raise ConfigError("solver.max_iters must be >= 1")
        if not (self.grad_tol >= 0):
            raise ConfigError("solver.grad_tol must be >= 0")
        if not (self.divergence_threshold > 0):
            raise ConfigError("solver.divergence_threshold must be > 0")


@dataclass(eq=False)
class Trajectory:
    """A recorded run.  points[i] are the full iterates, z0 included.

    g_norms[i] is the step gradient norm at points[i] (the gradient the
    algorithm would step with from there), so len(g_norms) == len(points);
    half iterates of the two-stage algorithms are only kept when the run
    was configured with record_half_steps.  Flows additionally carry times
    and the recorded Lyapunov series g0_sq = ||g_0(z(t))||^2.
    """

    points: list
    g_norms: np.ndarray
    x_norms: np.ndarray
    y_norms: np.ndarray
    status: str
    config_echo: SolverConfig | None = None
    times: np.ndarray | None = None
    g0_sq: np.ndarray | None = None
    half_points: list | None = None

    @property
    def final_point(self) -> IteratePoint:
        return self.points[-1]

    def __len__(self) -> int:
        return len(self.points)


def _stepped(z: IteratePoint, gx: np.ndarray, gy: np.ndarray, eta: float):
    return z.x - eta * gx, z.y - eta * gy


def gda_step(oracle: ProblemOracle, z: IteratePoint, eta: float) -> IteratePoint:
    """x' = x - eta * df/dx,  y' = y + eta * df/dy."""
    fx, fy = oracle.grad(z)
    return IteratePoint(*_stepped(z, fx, -fy, eta))


def cgo_step(oracle: ProblemOracle, z: IteratePoint, alpha: float, eta: float,
             settings: SolveSettings = DEFAULT_SOLVE) -> IteratePoint:
    """z' = z - eta * g_alpha(z)."""
    g = competitive_gradient(oracle, z, alpha, settings)
    return IteratePoint(*_stepped(z, g.gx, g.gy, eta))


def cgd_step(oracle: ProblemOracle, z: IteratePoint, eta: float,
             settings: SolveSettings = DEFAULT_SOLVE) -> IteratePoint:
    """cgo with the interaction weight tied to the step size (alpha = eta)."""
    return cgo_step(oracle, z, eta, eta, settings)


def omda_step(oracle: ProblemOracle, z: IteratePoint, eta: float,
              prev_half_grad: np.ndarray | None = None):
    """Optimistic mirror descent-ascent with the Euclidean potential.

    z_half = prox(z, -eta * g) with g the game gradient at z, then
    z_next = prox(z, -eta * g_0(z_half)).  Passing prev_half_grad replaces
    g in the leading half step (the memory form of optimism); by default
    the gradient is evaluated fresh at z.

    Returns (z_next, z_half).
    """
    if prev_half_grad is None:
        fx, fy = oracle.grad(z)
        g = np.concatenate([fx, -fy])
    else:
        g = np.asarray(prev_half_grad, dtype=np.float64)
    z_half = proximal_map(z, -eta * g).point
    hx, hy = oracle.grad(z_half)
    g_half = np.concatenate([hx, -hy])
    z_next = proximal_map(z, -eta * g_half).point
    return z_next, z_half


def ocgo_step(oracle: ProblemOracle, z: IteratePoint, alpha: float, eta: float,
              settings: SolveSettings = DEFAULT_SOLVE):
    """Optimistic variant of cgo: half step with g_alpha(z), full step from z
    with g_alpha at the half point.  Returns (z_next, z_half)."""
    g = competitive_gradient(oracle, z, alpha, settings)
    z_half = IteratePoint(*_stepped(z, g.gx, g.gy, eta))
    g_half = competitive_gradient(oracle, z_half, alpha, settings)
    z_next = IteratePoint(*_stepped(z, g_half.gx, g_half.gy, eta))
    return z_next, z_half


def _effective_alpha(config: SolverConfig, eta: float) -> float:
    if config.algorithm in ("gda", "omda"):
        return 0.0
    if config.algorithm == "cgd":
        return eta
    return config.alpha


def run_solver(oracle: ProblemOracle, z0: IteratePoint, config: SolverConfig) -> Trajectory:
    """Iterate the configured algorithm from z0.

    Stops when the step gradient norm falls to grad_tol (converged), the
    iterate norm reaches divergence_threshold or goes non-finite (diverged),
    or max_iters steps have been taken (max_iters).
    """
    oracle._check_point(z0)
    two_stage = config.algorithm in ("omda", "ocgo")

    points = [z0]
    g_norms = []
    x_norms = [z0.norm_x()]
    y_norms = [z0.norm_y()]
    halves = [] if (two_stage and config.record_half_steps) else None
    status = MAX_ITERS

    z = z0
    for n in range(1, config.max_iters + 1):
        eta = config.schedule.eta_at(n)
        alpha = _effective_alpha(config, eta)
        g = competitive_gradient(oracle, z, alpha, config.solve)
        g_norms.append(g.norm())
        if g_norms[-1] <= config.grad_tol:
            status = CONVERGED
            break

        if two_stage:
            hx_arr, hy_arr = _stepped(z, g.gx, g.gy, eta)
            if not (np.isfinite(hx_arr).all() and np.isfinite(hy_arr).all()):
                status = DIVERGED
                break
            z_half = IteratePoint(hx_arr, hy_arr)
            if halves is not None:
                halves.append(z_half)
            g_half = competitive_gradient(oracle, z_half, alpha, config.solve)
            new_x, new_y = _stepped(z, g_half.gx, g_half.gy, eta)
        else:
            new_x, new_y = _stepped(z, g.gx, g.gy, eta)

        if not (np.isfinite(new_x).all() and np.isfinite(new_y).all()):
            status = DIVERGED
            break
        z = IteratePoint(new_x, new_y)
        points.append(z)
        x_norms.append(z.norm_x())
        y_norms.append(z.norm_y())
        if z.norm() >= config.divergence_threshold:
            status = DIVERGED
            break

    # keep one gradient norm per stored point
    while len(g_norms) < len(points):
        eta = config.schedule.eta_at(len(g_norms) + 1)
        try:
            g_norms.append(
                competitive_gradient(oracle, points[len(g_norms)],
                                     _effective_alpha(config, eta), config.solve).norm())
        except SolveError:
            g_norms.append(float("inf"))

    return Trajectory(
        points=points,
        g_norms=np.asarray(g_norms),
        x_norms=np.asarray(x_norms),
        y_norms=np.asarray(y_norms),
        status=status,
        config_echo=config,
        half_points=halves,
    )


def integrate_flow(oracle: ProblemOracle, z0: IteratePoint, alpha: float,
                   beta: float = 1.0, dt: float = 1e-3, t_end: float = 1.0,
                   settings: SolveSettings = DEFAULT_SOLVE) -> Trajectory:
    """Integrate dz/dt = -beta * g_alpha(z) with fixed-step RK4.

    The step count is round(t_end / dt); samples are recorded at every
    node, including ||g_alpha|| and the Lyapunov series ||g_0(z(t))||^2.
    A non-finite state aborts the integration with status diverged.
    """
    oracle._check_point(z0)
    if not (np.isfinite(beta) and beta > 0):
        raise ConfigError("flow.beta must be > 0")
    if not (np.isfinite(dt) and dt > 0):
        raise ConfigError("flow.dt must be > 0")
    if not (np.isfinite(t_end) and t_end > 0):
        raise ConfigError("flow.t_end must be > 0")
    n_steps = max(1, int(round(t_end / dt)))
    m = oracle.m

    def field_at(vec: np.ndarray) -> np.ndarray | None:
        if not np.isfinite(vec).all():
            return None
        g = competitive_gradient(oracle, IteratePoint.from_vector(vec, m), alpha, settings)
        return -beta * g.vector

    def g0_sq_at(point: IteratePoint) -> float:
        fx, fy = oracle.grad(point)
        return float(fx @ fx + fy @ fy)

    points = [z0]
    times = [0.0]
    g_norms = []
    g0_sq = [g0_sq_at(z0)]
    x_norms = [z0.norm_x()]
    y_norms = [z0.norm_y()]
    status = MAX_ITERS

    z = z0.vector
    # escaping trajectories overflow on purpose; the isfinite checks catch them
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n_steps):
            k1 = field_at(z)
            if k1 is None:
                status = DIVERGED
                break
            g_norms.append(float(np.linalg.norm(k1)) / beta)
            k2 = field_at(z + 0.5 * dt * k1)
            k3 = field_at(z + 0.5 * dt * k2) if k2 is not None else None
            k4 = field_at(z + dt * k3) if k3 is not None else None
            if k4 is None:
                status = DIVERGED
                break
            z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.isfinite(z).all():
                status = DIVERGED
                break
            point = IteratePoint.from_vector(z, m)
            points.append(point)
            times.append((i + 1) * dt)
            g0_sq.append(g0_sq_at(point))
            x_norms.append(point.norm_x())
            y_norms.append(point.norm_y())

    while len(g_norms) < len(points):
        g_norms.append(
            competitive_gradient(oracle, points[len(g_norms)], alpha, settings).norm())

    return Trajectory(
        points=points,
        g_norms=np.asarray(g_norms),
        x_norms=np.asarray(x_norms),
        y_norms=np.asarray(y_norms),
        status=status,
        config_echo=None,
        times=np.asarray(times),
        g0_sq=np.asarray(g0_sq),
    )
