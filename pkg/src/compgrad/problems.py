"""Problem oracles for smooth two-player zero-sum games.

A problem is min over x of max over y of f(x, y) with x in R^m, y in R^n.
Oracles expose value, per-player gradients, Hessian blocks, and
Hessian-vector products; benchmark families ship exact Lipschitz constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, EvaluationError

DEFAULT_BOX_HALF_WIDTH = 10.0


def _as_vector(a, name: str) -> np.ndarray:
    v = np.atleast_1d(np.asarray(a, dtype=np.float64))
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"{name} must be a non-empty 1-D vector, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise EvaluationError(f"{name} has non-finite entries", point=v)
    return v


@dataclass(frozen=True, eq=False)
class IteratePoint:
    """A joint iterate z = (x, y).  Entries are finite float64."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_vector(self.x, "x"))
        object.__setattr__(self, "y", _as_vector(self.y, "y"))

    @property
    def m(self) -> int:
        return self.x.size

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @classmethod
    def from_vector(cls, z: np.ndarray, m: int) -> "IteratePoint":
        z = np.asarray(z, dtype=np.float64)
        return cls(z[:m], z[m:])

    def norm_x(self) -> float:
        return float(np.linalg.norm(self.x))

    def norm_y(self) -> float:
        return float(np.linalg.norm(self.y))

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


@dataclass(frozen=True)
class LipschitzConstants:
    """Smoothness constants of f over the domain box.

    L bounds the gradient norm, L_prime the gradient's Lipschitz constant,
    and L_xx / L_yy / L_xy the Lipschitz constants of the Hessian blocks
    (zero for constant-Hessian families).
    """

    L: float
    L_prime: float
    L_xx: float = 0.0
    L_yy: float = 0.0
    L_xy: float = 0.0


def default_box(dim: int, half_width: float = DEFAULT_BOX_HALF_WIDTH) -> np.ndarray:
    box = np.empty((dim, 2))
    box[:, 0] = -half_width
    box[:, 1] = half_width
    return box


def _check_box(box, dim: int) -> np.ndarray:
    b = np.asarray(box, dtype=np.float64)
    if b.shape != (dim, 2):
        raise DimensionError(f"domain_box must have shape ({dim}, 2), got {b.shape}")
    if not (b[:, 0] <= b[:, 1]).all():
        raise ConfigError("domain_box has lo > hi in some coordinate")
    return b


class ProblemOracle:
    """Base oracle.  Subclasses fill in value/grad/Hessian blocks.

    hess_yx defaults to hess_xy transposed and hvp_* to dense products;
    matrix-free families override the hvp methods.
    """

    constant_hessian = False

    def __init__(self, m: int, n: int, domain_box=None, lipschitz: LipschitzConstants | None = None):
        if m < 1 or n < 1:
            raise DimensionError(f"player dimensions must be >= 1, got ({m}, {n})")
        self.m = int(m)
        self.n = int(n)
        self.domain_box = (
            default_box(self.m + self.n) if domain_box is None else _check_box(domain_box, self.m + self.n)
        )
        self.lipschitz = lipschitz

    @property
    def dims(self) -> tuple[int, int]:
        return (self.m, self.n)

    def _check_point(self, z: IteratePoint) -> IteratePoint:
        if z.m != self.m or z.n != self.n:
            raise DimensionError(f"point dims ({z.m}, {z.n}) do not match problem dims ({self.m}, {self.n})")
        return z

    def value(self, z: IteratePoint) -> float:
        raise NotImplementedError

    def grad(self, z: IteratePoint) -> tuple[np.ndarray, np.ndarray]:
        """Per-player gradients (d f/d x, d f/d y)."""
        raise NotImplementedError

    def hess_xx(self, z: IteratePoint) -> np.ndarray:
        raise NotImplementedError

    def hess_yy(self, z: IteratePoint) -> np.ndarray:
        raise NotImplementedError

    def hess_xy(self, z: IteratePoint) -> np.ndarray:
        raise NotImplementedError

    def hess_yx(self, z: IteratePoint) -> np.ndarray:
        return self.hess_xy(z).T

    def hvp_xy(self, z: IteratePoint, v: np.ndarray) -> np.ndarray:
        return self.hess_xy(z) @ v

    def hvp_yx(self, z: IteratePoint, u: np.ndarray) -> np.ndarray:
        return self.hess_yx(z) @ u


class BilinearProblem(ProblemOracle):
    """f(x, y) = x^T A y.  Constant Hessian; hvp routes through A only."""

    constant_hessian = True

    def __init__(self, A, domain_box=None):
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.size == 0:
            raise DimensionError(f"A must be a non-empty matrix, got shape {A.shape}")
        if not np.isfinite(A).all():
            raise EvaluationError("A has non-finite entries")
        m, n = A.shape
        super().__init__(m, n, domain_box)
        self.A = A
        sigma_max = float(np.linalg.norm(A, 2)) if min(m, n) > 0 else 0.0
        corner = np.max(np.abs(self.domain_box), axis=1)
        # ||(A y, A^T x)|| <= sigma_max(A) * ||z||, so this bounds the gradient on the box
        self.lipschitz = LipschitzConstants(
            L=sigma_max * float(np.linalg.norm(corner)), L_prime=sigma_max
        )

    def value(self, z: IteratePoint) -> float:
        self._check_point(z)
        return float(z.x @ self.A @ z.y)

    def grad(self, z: IteratePoint):
        self._check_point(z)
        return self.A @ z.y, self.A.T @ z.x

    def hess_xx(self, z: IteratePoint) -> np.ndarray:
        return np.zeros((self.m, self.m))

    def hess_yy(self, z: IteratePoint) -> np.ndarray:
        return np.zeros((self.n, self.n))

    def hess_xy(self, z: IteratePoint) -> np.ndarray:
        return self.A

    def hvp_xy(self, z: IteratePoint, v: np.ndarray) -> np.ndarray:
        return self.A @ v

    def hvp_yx(self, z: IteratePoint, u: np.ndarray) -> np.ndarray:
        return self.A.T @ u


class QuadraticScalarProblem(ProblemOracle):
    """f(x, y) = (k/2)(x^2 - y^2) + x*y on R x R.

    k > 0 is strongly convex-concave; k < 0 flips the curvature so the
    interaction term has to do the stabilising.
    """

    constant_hessian = True

    def __init__(self, k: float, domain_box=None):
        k = float(k)
        if not np.isfinite(k):
            raise EvaluationError("k must be finite")
        super().__init__(1, 1, domain_box)
        self.k = k
        # gradient map [[k, 1], [1, -k]] has all singular values sqrt(k^2+1)
        grad_gain = float(np.sqrt(k * k + 1.0))
        corner = np.max(np.abs(self.domain_box), axis=1)
        self.lipschitz = LipschitzConstants(
            L=grad_gain * float(np.linalg.norm(corner)), L_prime=grad_gain
        )

    def value(self, z: IteratePoint) -> float:
        self._check_point(z)
        x, y = z.x[0], z.y[0]
        return float(0.5 * self.k * (x * x - y * y) + x * y)

    def grad(self, z: IteratePoint):
        self._check_point(z)
        x, y = z.x[0], z.y[0]
        return np.array([self.k * x + y]), np.array([-self.k * y + x])

    def hess_xx(self, z: IteratePoint) -> np.ndarray:
        return np.array([[self.k]])

    def hess_yy(self, z: IteratePoint) -> np.ndarray:
        return np.array([[-self.k]])

    def hess_xy(self, z: IteratePoint) -> np.ndarray:
        return np.array([[1.0]])

    def hvp_xy(self, z: IteratePoint, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=np.float64).copy()

    def hvp_yx(self, z: IteratePoint, u: np.ndarray) -> np.ndarray:
        return np.asarray(u, dtype=np.float64).copy()


class FiniteDifferenceProblem(ProblemOracle):
    """Wraps a black-box scalar f(x, y) with central-difference derivatives.

    Gradients use `step`; Hessian blocks are central differences of the
    finite-difference gradient with `hess_step`, and the diagonal blocks are
    symmetrized by averaging with their transpose.  hess_yx is differenced
    independently of hess_xy, so their transpose defect measures FD noise.
    """

    constant_hessian = False

    def __init__(self, value_fn, dims, step: float = 1e-5, hess_step: float | None = None,
                 domain_box=None):
        m, n = dims
        super().__init__(m, n, domain_box)
        if not (step > 0 and np.isfinite(step)):
            raise ConfigError("step must be a positive finite scalar")
        self.value_fn = value_fn
        self.step = float(step)
        self.hess_step = float(hess_step) if hess_step is not None else 1e-4

    def _eval(self, x: np.ndarray, y: np.ndarray) -> float:
        v = float(self.value_fn(x, y))
        if not np.isfinite(v):
            raise EvaluationError(
                "value_fn returned a non-finite value", point=np.concatenate([x, y])
            )
        return v

    def value(self, z: IteratePoint) -> float:
        self._check_point(z)
        return self._eval(z.x, z.y)

    def _grad_arrays(self, x: np.ndarray, y: np.ndarray):
        h = self.step
        gx = np.empty(self.m)
        gy = np.empty(self.n)
        for i in range(self.m):
            e = np.zeros(self.m)
            e[i] = h
            gx[i] = (self._eval(x + e, y) - self._eval(x - e, y)) / (2 * h)
        for j in range(self.n):
            e = np.zeros(self.n)
            e[j] = h
            gy[j] = (self._eval(x, y + e) - self._eval(x, y - e)) / (2 * h)
        return gx, gy

    def grad(self, z: IteratePoint):
        self._check_point(z)
        return self._grad_arrays(z.x, z.y)

    def _hess_block(self, z: IteratePoint, out_block: str, wrt: str) -> np.ndarray:
        h = self.hess_step
        rows = self.m if out_block == "x" else self.n
        cols = self.m if wrt == "x" else self.n
        H = np.empty((rows, cols))
        for j in range(cols):
            if wrt == "x":
                e = np.zeros(self.m)
                e[j] = h
                gp = self._grad_arrays(z.x + e, z.y)
                gm = self._grad_arrays(z.x - e, z.y)
            else:
                e = np.zeros(self.n)
                e[j] = h
                gp = self._grad_arrays(z.x, z.y + e)
                gm = self._grad_arrays(z.x, z.y - e)
            pick = 0 if out_block == "x" else 1
            H[:, j] = (gp[pick] - gm[pick]) / (2 * h)
        return H

    def hess_xx(self, z: IteratePoint) -> np.ndarray:
        self._check_point(z)
        H = self._hess_block(z, "x", "x")
        return 0.5 * (H + H.T)

    def hess_yy(self, z: IteratePoint) -> np.ndarray:
        self._check_point(z)
        H = self._hess_block(z, "y", "y")
        return 0.5 * (H + H.T)

    def hess_xy(self, z: IteratePoint) -> np.ndarray:
        self._check_point(z)
        return self._hess_block(z, "x", "y")

    def hess_yx(self, z: IteratePoint) -> np.ndarray:
        self._check_point(z)
        return self._hess_block(z, "y", "x")


def make_bilinear(A, domain_box=None) -> BilinearProblem:
    """Bilinear game f(x, y) = x^T A y.

    Parameters
    ----------
    A : (m, n) array_like
        Interaction matrix.
    domain_box : (m+n, 2) array_like, optional
        Per-coordinate [lo, hi]; defaults to [-10, 10] everywhere.
    """
    return BilinearProblem(A, domain_box)


def make_quadratic_family(k: float, domain_box=None) -> QuadraticScalarProblem:
    """Scalar quadratic game f(x, y) = (k/2)(x^2 - y^2) + x*y."""
    return QuadraticScalarProblem(k, domain_box)


def make_random_bilinear(m: int, n: int, seed: int, domain_box=None) -> BilinearProblem:
    """Bilinear game with A drawn i.i.d. standard normal from `seed`.

    The draw is a single (m, n) standard_normal from numpy's default_rng,
    so the same seed always yields the same problem.
    """
    A = np.random.default_rng(seed).standard_normal((m, n))
    return BilinearProblem(A, domain_box)


def make_finite_difference_oracle(value_fn, dims, step: float = 1e-5,
                                  hess_step: float | None = None,
                                  domain_box=None) -> FiniteDifferenceProblem:
    """Wrap a black-box f(x, y) -> scalar in central-difference derivatives."""
    return FiniteDifferenceProblem(value_fn, dims, step, hess_step, domain_box)


@dataclass
class ConsistencyReport:
    """Max deviation per contract, measured over the probe points."""

    defects: dict = field(default_factory=dict)
    tols: dict = field(default_factory=dict)

    @property
    def failures(self) -> list:
        return sorted(name for name, d in self.defects.items() if d > self.tols[name])

    @property
    def passed(self) -> bool:
        return not self.failures


def _rel(err: float, scale: float) -> float:
    return err / max(1.0, scale)


def check_oracle_consistency(oracle: ProblemOracle, points, tol: float = 1e-8,
                             fd_tol: float | None = None, seed: int = 0) -> ConsistencyReport:
    """Probe an oracle's internal contracts at the given points.

    Contracts: symmetry of hess_xx/hess_yy, hess_yx against hess_xy
    transposed, hvp_* against the dense blocks, and grad against a central
    difference of value.  `fd_tol` (default 100*tol) relaxes only the
    gradient-vs-value contract, which carries finite-difference noise.
    """
    rng = np.random.default_rng(seed)
    d = {
        "hess_xx symmetry": 0.0,
        "hess_yy symmetry": 0.0,
        "hess_yx transpose": 0.0,
        "hvp_xy dense": 0.0,
        "hvp_yx dense": 0.0,
        "grad finite difference": 0.0,
    }
    h = 1e-5
    for z in points:
        oracle._check_point(z)
        Hxx = oracle.hess_xx(z)
        Hyy = oracle.hess_yy(z)
        Dxy = oracle.hess_xy(z)
        Dyx = oracle.hess_yx(z)
        d["hess_xx symmetry"] = max(
            d["hess_xx symmetry"], _rel(np.linalg.norm(Hxx - Hxx.T), np.linalg.norm(Hxx)))
        d["hess_yy symmetry"] = max(
            d["hess_yy symmetry"], _rel(np.linalg.norm(Hyy - Hyy.T), np.linalg.norm(Hyy)))
        d["hess_yx transpose"] = max(
            d["hess_yx transpose"], _rel(np.linalg.norm(Dyx - Dxy.T), np.linalg.norm(Dxy)))
        v = rng.standard_normal(oracle.n)
        u = rng.standard_normal(oracle.m)
        d["hvp_xy dense"] = max(
            d["hvp_xy dense"], _rel(np.linalg.norm(oracle.hvp_xy(z, v) - Dxy @ v),
                                    np.linalg.norm(Dxy @ v)))
        d["hvp_yx dense"] = max(
            d["hvp_yx dense"], _rel(np.linalg.norm(oracle.hvp_yx(z, u) - Dyx @ u),
                                    np.linalg.norm(Dyx @ u)))
        gx, gy = oracle.grad(z)
        g = np.concatenate([gx, gy])
        fd = np.empty_like(g)
        zv = z.vector
        for i in range(zv.size):
            e = np.zeros(zv.size)
            e[i] = h
            zp = IteratePoint.from_vector(zv + e, oracle.m)
            zm = IteratePoint.from_vector(zv - e, oracle.m)
            fd[i] = (oracle.value(zp) - oracle.value(zm)) / (2 * h)
        d["grad finite difference"] = max(
            d["grad finite difference"], _rel(np.linalg.norm(g - fd), np.linalg.norm(g)))

    fd_tol = 100 * tol if fd_tol is None else fd_tol
    tols = {name: tol for name in d}
    tols["grad finite difference"] = fd_tol
    if isinstance(oracle, FiniteDifferenceProblem):
        # FD oracles carry differencing noise in every contract
        tols["hess_yx transpose"] = max(tols["hess_yx transpose"], 1e-6)
    return ConsistencyReport(defects=d, tols=tols)


_BLACKBOX_NAMESPACE = {"np": np, "abs": abs, "min": min, "max": max}


def problem_from_config(cfg: dict) -> ProblemOracle:
    """Build an oracle from a problem-config mapping.

    Schema: {"family": str, "params": {...}, "seed": int, "domain_box": [[lo, hi], ...]}.
    Families: bilinear (params.A), quadratic_k (params.k), random_bilinear
    (params.m, params.n, top-level seed), blackbox (params.expr over x, y
    with numpy as np; params.dims; optional params.step / params.hess_step).
    """
    if not isinstance(cfg, dict):
        raise ConfigError("problem must be a mapping")
    family = cfg.get("family")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("problem.params must be a mapping")
    box = cfg.get("domain_box")

    if family == "bilinear":
        if "A" not in params:
            raise ConfigError("problem.params.A is required for family 'bilinear'")
        return make_bilinear(params["A"], domain_box=box)
    if family == "quadratic_k":
        if "k" not in params:
            raise ConfigError("problem.params.k is required for family 'quadratic_k'")
        return make_quadratic_family(params["k"], domain_box=box)
    if family == "random_bilinear":
        if "m" not in params or "n" not in params:
            raise ConfigError("problem.params.m and problem.params.n are required "
                              "for family 'random_bilinear'")
        if "seed" not in cfg:
            raise ConfigError("problem.seed is required for family 'random_bilinear'")
        return make_random_bilinear(int(params["m"]), int(params["n"]), int(cfg["seed"]),
                                    domain_box=box)
    if family == "blackbox":
        if "expr" not in params or "dims" not in params:
            raise ConfigError("problem.params.expr and problem.params.dims are required "
                              "for family 'blackbox'")
        expr = str(params["expr"])
        code = compile(expr, "<problem.params.expr>", "eval")

        def value_fn(x, y, _code=code):
            scope = dict(_BLACKBOX_NAMESPACE)
            scope.update({"x": x, "y": y})
            return eval(_code, {"__builtins__": {}}, scope)

        return make_finite_difference_oracle(
            value_fn, tuple(int(v) for v in params["dims"]),
            step=float(params.get("step", 1e-5)),
            hess_step=params.get("hess_step"),
            domain_box=box)
    raise ConfigError(f"problem.family {family!r} is not one of "
                      "'bilinear', 'quadratic_k', 'random_bilinear', 'blackbox'")
