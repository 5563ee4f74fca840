"""The competitive gradient g_alpha and the Euclidean proximal machinery.

g_alpha solves the block system

    [[ I,          alpha*D_xy ],   [ gx ]   [  df/dx ]
     [ -alpha*D_yx, I         ]] @ [ gy ] = [ -df/dy ]

with D_xy the mixed Hessian block and D_yx its transpose, which reduces to
two symmetric positive-definite systems:

    (I + alpha^2 D_xy D_yx) gx =  df/dx + alpha * D_xy @ (df/dy)
    (I + alpha^2 D_yx D_xy) gy = -df/dy + alpha * D_yx @ (df/dx)

At alpha = 0 this is exactly (df/dx, -df/dy).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg

from .errors import ConfigError, DimensionError, SolveError
from .problems import IteratePoint, ProblemOracle

DENSE_SIZE_LIMIT = 256  # m+n above this defaults to the matrix-free route


@dataclass(frozen=True)
class SolveSettings:
    """How to solve the two SPD systems behind g_alpha.

    method "auto" picks dense when m+n <= 256 and conjugate gradients
    otherwise.  cg_max_iters defaults to (m+n) + 50.
    """

    method: Literal["auto", "dense", "matrix_free"] = "auto"
    cg_tol: float = 1e-10
    cg_max_iters: int | None = None

    def __post_init__(self):
        if self.method not in ("auto", "dense", "matrix_free"):
            raise ConfigError(f"solve.method must be 'auto', 'dense' or 'matrix_free', "
                              f"got {self.method!r}")
        if not (self.cg_tol > 0):
            raise ConfigError("solve.cg_tol must be > 0")
        if self.cg_max_iters is not None and self.cg_max_iters < 1:
            raise ConfigError("solve.cg_max_iters must be >= 1")

    def resolve_method(self, dim: int) -> str:
        if self.method == "auto":
            return "dense" if dim <= DENSE_SIZE_LIMIT else "matrix_free"
        return self.method


DEFAULT_SOLVE = SolveSettings()


@dataclass(frozen=True, eq=False)
class CompetitiveGradient:
    """Result of a g_alpha evaluation.

    residual is the largest relative residual of the two SPD solves
    (0 for the exact alpha = 0 shortcut).
    """

    gx: np.ndarray
    gy: np.ndarray
    alpha: float
    method: str
    residual: float

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.gx, self.gy])

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


def _solve_spd(M: np.ndarray, b: np.ndarray) -> np.ndarray:
    if M.shape[0] == 1:
        return b / M[0, 0]
    return scipy.linalg.solve(M, b, assume_a="pos")


def _cg(matvec, b: np.ndarray, tol: float, max_iters: int):
    """Plain conjugate gradients on an SPD operator; returns (x, rel_residual)."""
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros_like(b), 0.0
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    for _ in range(max_iters):
        if np.sqrt(rs) / b_norm <= tol:
            break
        Ap = matvec(p)
        alpha = rs / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    # report the true residual, not the recursively updated one
    rel = float(np.linalg.norm(b - matvec(x))) / b_norm
    return x, rel


def competitive_gradient(oracle: ProblemOracle, z: IteratePoint, alpha: float,
                         settings: SolveSettings = DEFAULT_SOLVE) -> CompetitiveGradient:
    """Evaluate g_alpha at z.

    Dense route factorizes the SPD matrices I + alpha^2 * D D^T; the
    matrix-free route runs conjugate gradients using only Hessian-vector
    products.  Raises SolveError if CG cannot reach tolerance.
    """
    oracle._check_point(z)
    alpha = float(alpha)
    if not np.isfinite(alpha):
        raise ConfigError("alpha must be finite")
    fx, fy = oracle.grad(z)

    method = settings.resolve_method(oracle.m + oracle.n)
    if alpha == 0.0:
        return CompetitiveGradient(gx=fx, gy=-fy, alpha=0.0, method=method, residual=0.0)

    a2 = alpha * alpha
    bx = fx + alpha * oracle.hvp_xy(z, fy)
    by = -fy + alpha * oracle.hvp_yx(z, fx)

    if method == "dense":
        D = oracle.hess_xy(z)
        Mx = np.eye(oracle.m) + a2 * (D @ D.T)
        My = np.eye(oracle.n) + a2 * (D.T @ D)
        gx = _solve_spd(Mx, bx)
        gy = _solve_spd(My, by)
        rx = np.linalg.norm(bx - Mx @ gx) / max(np.linalg.norm(bx), np.finfo(float).tiny)
        ry = np.linalg.norm(by - My @ gy) / max(np.linalg.norm(by), np.finfo(float).tiny)
        residual = float(max(rx, ry))
    else:
        max_iters = settings.cg_max_iters
        if max_iters is None:
            max_iters = oracle.m + oracle.n + 50

        def mat_x(v):
            return v + a2 * oracle.hvp_xy(z, oracle.hvp_yx(z, v))

        def mat_y(v):
            return v + a2 * oracle.hvp_yx(z, oracle.hvp_xy(z, v))

        gx, rx = _cg(mat_x, bx, settings.cg_tol, max_iters)
        gy, ry = _cg(mat_y, by, settings.cg_tol, max_iters)
        residual = float(max(rx, ry))
        if residual > settings.cg_tol:
            raise SolveError(
                f"conjugate gradients stalled at relative residual {residual:.3e} "
                f"(tol {settings.cg_tol:.3e}, max_iters {max_iters})",
                residual=residual)

    return CompetitiveGradient(gx=gx, gy=gy, alpha=alpha, method=method, residual=residual)


def bregman_divergence(p: np.ndarray, q: np.ndarray, potential: str = "euclidean") -> float:
    """D(p, q) under the chosen potential; Euclidean gives 0.5*||p - q||^2.

    Only the Euclidean potential is implemented; the argument exists so
    mirror-map variants can slot in without an interface change.
    """
    if potential != "euclidean":
        raise ConfigError(f"potential {potential!r} is not implemented (only 'euclidean')")
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionError(f"bregman_divergence operands differ in shape: {p.shape} vs {q.shape}")
    diff = p - q
    return float(0.5 * (diff @ diff))


@dataclass(frozen=True, eq=False)
class ProximalResult:
    point: IteratePoint
    clamped: bool


def proximal_map(z: IteratePoint, p_vec: np.ndarray, box=None,
                 potential: str = "euclidean") -> ProximalResult:
    """argmin_w  -<p_vec, w> + D(w, z), i.e. z + p_vec for the Euclidean potential.

    If `box` is given ((m+n, 2) per-coordinate bounds) the result is clamped
    into it and the clamp flag reports whether any coordinate moved.
    """
    if potential != "euclidean":
        raise ConfigError(f"potential {potential!r} is not implemented (only 'euclidean')")
    p_vec = np.asarray(p_vec, dtype=np.float64)
    if p_vec.shape != (z.m + z.n,):
        raise DimensionError(f"p_vec must have shape ({z.m + z.n},), got {p_vec.shape}")
    w = z.vector + p_vec
    clamped = False
    if box is not None:
        box = np.asarray(box, dtype=np.float64)
        if box.shape != (w.size, 2):
            raise DimensionError(f"box must have shape ({w.size}, 2), got {box.shape}")
        w_clamped = np.clip(w, box[:, 0], box[:, 1])
        clamped = bool((w_clamped != w).any())
        w = w_clamped
    return ProximalResult(point=IteratePoint.from_vector(w, z.m), clamped=clamped)
