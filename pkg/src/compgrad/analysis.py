"""Convergence-rate formulas, parameter bounds, and coherence probes.

The rate formulas consume a SpectralSummary of the Hessian blocks:
lam_xx / lam_yy are eigenvalue ranges of the diagonal blocks, lam_xy /
lam_yx the eigenvalue ranges of D_xy D_yx and D_yx D_xy (squared singular
values of the mixed block, zero-padded on the larger side).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .competitive import DEFAULT_SOLVE, SolveSettings, competitive_gradient
from .errors import ConfigError, DimensionError, SolveError, UnsupportedProblemError
from .problems import IteratePoint, LipschitzConstants, ProblemOracle
from .solvers import ALGORITHMS, StepSchedule

STRICTLY_COHERENT = "StrictlyCoherent"
NULL_COHERENT = "NullCoherent"
COHERENT_NONSTRICT = "CoherentNonstrict"
VIOLATED = "Violated"


@dataclass(frozen=True)
class SpectralSummary:
    """Extremal curvature data of the Hessian blocks at a point."""

    lam_xx_min: float
    lam_xx_max: float
    lam_yy_min: float
    lam_yy_max: float
    lam_xy_min: float
    lam_xy_max: float
    lam_yx_min: float
    lam_yx_max: float

    @property
    def lam_bar_1(self) -> float:
        return max(self.lam_xx_max, -self.lam_yy_min)

    @property
    def lam_bar_2(self) -> float:
        return max(self.lam_xx_max, self.lam_yy_max)


def _probe_point(oracle: ProblemOracle) -> IteratePoint:
    mid = oracle.domain_box.mean(axis=1)
    return IteratePoint.from_vector(mid, oracle.m)


def spectral_summary(oracle: ProblemOracle, z: IteratePoint | None = None) -> SpectralSummary:
    """Extremal eigenvalues of the Hessian blocks at z.

    z may be omitted for constant-Hessian problems (the box midpoint is
    probed); otherwise a probe point is required.
    """
    if z is None:
        if not oracle.constant_hessian:
            raise UnsupportedProblemError(
                "spectral_summary needs a probe point for non-constant-Hessian problems")
        z = _probe_point(oracle)
    oracle._check_point(z)

    Hxx = oracle.hess_xx(z)
    Hyy = oracle.hess_yy(z)
    D = oracle.hess_xy(z)
    exx = np.linalg.eigvalsh(0.5 * (Hxx + Hxx.T))
    eyy = np.linalg.eigvalsh(0.5 * (Hyy + Hyy.T))
    svals = np.linalg.svd(D, compute_uv=False)
    s2_max = float(svals.max() ** 2)
    s2_min = float(svals.min() ** 2)
    m, n = D.shape
    # D D^T is m x m: when m > n it picks up m - n zero eigenvalues (and
    # symmetrically for D^T D), so the min drops to zero on the larger side
    lam_xy_min = s2_min if m <= n else 0.0
    lam_yx_min = s2_min if n <= m else 0.0
    return SpectralSummary(
        lam_xx_min=float(exx.min()), lam_xx_max=float(exx.max()),
        lam_yy_min=float(eyy.min()), lam_yy_max=float(eyy.max()),
        lam_xy_min=lam_xy_min, lam_xy_max=s2_max,
        lam_yx_min=lam_yx_min, lam_yx_max=s2_max,
    )


def rate_continuous(summary: SpectralSummary, alpha: float, beta: float = 1.0) -> float:
    """Guaranteed exponential rate of the flow: ||z - z*|| decays like exp(-lam*t/2).

    Positive lam certifies convergence; the interaction term enters through
    c, which vanishes at alpha = 0 leaving the convex-concave condition
    beta * min(2 lam_xx_min, -2 lam_yy_max).
    """
    if not (np.isfinite(alpha) and alpha >= 0):
        raise ConfigError("alpha must be >= 0")
    if not (np.isfinite(beta) and beta > 0):
        raise ConfigError("beta must be > 0")
    c = beta * (alpha - 2 * alpha**2 * summary.lam_bar_1 - 2 * alpha**3 * summary.lam_bar_2**2)
    branch_x = (2 * summary.lam_xx_min - 2 * alpha * summary.lam_xx_max**2
                + c * summary.lam_xy_min / (1 + alpha**2 * summary.lam_xy_min))
    branch_y = (-2 * summary.lam_yy_max - 2 * alpha * summary.lam_yy_max**2
                + c * summary.lam_yx_min / (1 + alpha**2 * summary.lam_yx_min))
    return float(beta * min(branch_x, branch_y))


@dataclass(frozen=True)
class DiscreteRateReport:
    """lam with the interaction bookkeeping of the discrete bound.

    k is the closed-form interaction coefficient; the bound applies it with
    an overall sign flip, so the coefficient actually multiplying the
    lam_xy / lam_yx terms is c = -k.  Both are surfaced.
    """

    lam: float
    k: float
    c: float
    branch_x: float
    branch_y: float
    alpha: float
    eta: float


def discrete_rate_report(summary: SpectralSummary, alpha: float, eta: float) -> DiscreteRateReport:
    """Per-step contraction bound for the discrete optimistic update.

    ||z_n - z*||^2 contracts by (1 - lam) per step when lam > 0.  alpha = 0
    is outside the optimistic bound's derivation (it divides by alpha) and
    falls back to the plain descent-ascent condition
    lam = eta * min(2 lam_xx_min, -2 lam_yy_max) with k = c = 0.
    """
    if not (np.isfinite(alpha) and alpha >= 0):
        raise ConfigError("alpha must be >= 0")
    if not (np.isfinite(eta) and eta > 0):
        raise ConfigError("eta must be > 0")
    if alpha == 0.0:
        lam = eta * min(2 * summary.lam_xx_min, -2 * summary.lam_yy_max)
        return DiscreteRateReport(lam=float(lam), k=0.0, c=0.0,
                                  branch_x=float(eta * 2 * summary.lam_xx_min),
                                  branch_y=float(-eta * 2 * summary.lam_yy_max),
                                  alpha=alpha, eta=eta)
    k = (eta * ((11 * eta + 16 * alpha**2 * summary.lam_bar_1) / 8 - (15 / 8) * alpha)
         + 2 * (10 * eta + 8 * alpha) * alpha**2 * eta * summary.lam_bar_2**2)
    c = -k
    q = (10 * eta + 8 * alpha) / eta
    branch_x = (eta * (2 * summary.lam_xx_min - 2 * q * summary.lam_xx_max**2)
                + c * summary.lam_xy_min / (1 + alpha**2 * summary.lam_xy_min))
    branch_y = (-eta * (2 * summary.lam_yy_min + 2 * q * summary.lam_yy_max**2)
                + c * summary.lam_yx_min / (1 + alpha**2 * summary.lam_yx_min))
    return DiscreteRateReport(lam=float(min(branch_x, branch_y)), k=float(k), c=float(c),
                              branch_x=float(branch_x), branch_y=float(branch_y),
                              alpha=alpha, eta=eta)


def rate_discrete(summary: SpectralSummary, alpha: float, eta: float) -> float:
    """Scalar lam of discrete_rate_report (per-step contraction 1 - lam)."""
    return discrete_rate_report(summary, alpha, eta).lam


class EtaMax(NamedTuple):
    value: float
    admissible: bool


@dataclass(frozen=True)
class OcgoBounds:
    """Sufficient parameter region for the optimistic competitive update.

    alpha_sq_max bounds alpha^2 (infinite, with alpha_unbounded set, when
    L_xy * L = 0); eta_max(alpha) gives the largest admissible step size,
    returning (0.0, admissible=False) when the bound's radicand is negative
    so no step size is certified.
    """

    alpha_sq_max: float
    alpha_unbounded: bool
    eta_max: Callable[[float], EtaMax]


def ocgo_param_bounds(constants: LipschitzConstants) -> OcgoBounds:
    L = float(constants.L)
    Lp = float(constants.L_prime)
    Lxy = float(constants.L_xy)
    if not (Lp > 0):
        raise ConfigError("L_prime must be > 0")
    if L < 0 or Lxy < 0:
        raise ConfigError("L and L_xy must be >= 0")

    coupling = Lxy**2 * L**2
    if coupling == 0.0:
        alpha_sq_max = float("inf")
        unbounded = True
    else:
        alpha_sq_max = (np.sqrt(Lp**4 + 4 * coupling) - Lp**2) / (2 * coupling)
        unbounded = False

    def eta_max(alpha: float) -> EtaMax:
        a2 = float(alpha) ** 2
        radicand = a2 * coupling + Lp**2 - 2 * a2**2 * L**2 * Lp**2 * Lxy**2 - a2 * Lp**4
        if radicand < 0:
            return EtaMax(0.0, False)
        value = (np.sqrt(radicand) - float(alpha) ** 3 * coupling) / (a2 * coupling + Lp**2)
        if value <= 0:
            return EtaMax(0.0, False)
        return EtaMax(float(value), True)

    return OcgoBounds(alpha_sq_max=float(alpha_sq_max), alpha_unbounded=unbounded,
                      eta_max=eta_max)


def robbins_monro_schedule(c: float = 0.5, n0: float = 10.0, p: float = 1.0) -> StepSchedule:
    """Diminishing step schedule eta_n = c / (n + n0)**p, p in (0.5, 1]."""
    return StepSchedule(kind="robbins_monro", c=c, n0=n0, p=p)


@dataclass(eq=False)
class CoherenceReport:
    """Outcome of a sampled variational-inequality probe around z_star."""

    alpha: float
    min_inner: float
    argmin: IteratePoint
    classification: str
    samples: int
    seed: int
    region: np.ndarray
    tol: float
    max_abs_inner: float
    failed_samples: int
    inners: np.ndarray
    dist_sq: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "min_inner": self.min_inner,
            "argmin": self.argmin.vector.tolist(),
            "classification": self.classification,
            "samples": self.samples,
            "seed": self.seed,
            "region": self.region.tolist(),
        }


def _sample_region(rng, region: np.ndarray, count: int) -> np.ndarray:
    return rng.uniform(region[:, 0], region[:, 1], size=(count, region.shape[0]))


def _resolve_region(oracle: ProblemOracle, region) -> np.ndarray:
    if region is None:
        return oracle.domain_box
    region = np.asarray(region, dtype=np.float64)
    d = oracle.m + oracle.n
    if region.shape != (d, 2):
        raise DimensionError(f"region must have shape ({d}, 2), got {region.shape}")
    return region


def _default_tol(region: np.ndarray, z_star: np.ndarray) -> float:
    # circumradius of the region around z_star sets the scale of ||z - z*||^2
    reach = np.maximum(np.abs(region[:, 0] - z_star), np.abs(region[:, 1] - z_star))
    return 1e-9 * (1.0 + float(reach @ reach))


def mvi_probe(oracle: ProblemOracle, z_star: IteratePoint, alpha: float,
              region=None, samples: int = 1000, seed: int = 0,
              tol: float | None = None,
              settings: SolveSettings = DEFAULT_SOLVE) -> CoherenceReport:
    """Sample <g_alpha(z), z - z_star> over the region and classify.

    min_inner > tol everywhere is StrictlyCoherent; inner products that are
    zero to tolerance throughout are NullCoherent; a min inside [-tol, tol]
    (with non-null spread) is CoherentNonstrict; a min below -tol is
    Violated.  z_star itself is excluded by a ball of radius
    1e-6 * (1 + ||z_star||); failed inner solves are skipped and counted.
    """
    oracle._check_point(z_star)
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    region = _resolve_region(oracle, region)
    zs = z_star.vector
    if tol is None:
        tol = _default_tol(region, zs)

    rng = np.random.default_rng(seed)
    exclusion = 1e-6 * (1.0 + float(np.linalg.norm(zs)))
    draws = _sample_region(rng, region, samples)
    for _ in range(100):
        close = np.linalg.norm(draws - zs, axis=1) <= exclusion
        if not close.any():
            break
        draws[close] = _sample_region(rng, region, int(close.sum()))
    else:
        raise ConfigError("could not sample the region away from z_star; "
                          "is the region degenerate at z_star?")

    inners = np.empty(samples)
    dist_sq = np.empty(samples)
    failed = 0
    kept = 0
    best = np.inf
    argmin_vec = None
    for row in draws:
        z = IteratePoint.from_vector(row, oracle.m)
        try:
            g = competitive_gradient(oracle, z, alpha, settings)
        except SolveError:
            failed += 1
            continue
        diff = row - zs
        inner = float(g.vector @ diff)
        inners[kept] = inner
        dist_sq[kept] = float(diff @ diff)
        if inner < best:
            best = inner
            argmin_vec = row
        kept += 1
    if kept == 0:
        raise SolveError("every probe sample failed its inner solve")
    inners = inners[:kept]
    dist_sq = dist_sq[:kept]

    min_inner = float(inners.min())
    max_abs = float(np.abs(inners).max())
    if min_inner > tol:
        label = STRICTLY_COHERENT
    elif max_abs <= tol:
        label = NULL_COHERENT
    elif min_inner >= -tol:
        label = COHERENT_NONSTRICT
    else:
        label = VIOLATED

    return CoherenceReport(
        alpha=float(alpha), min_inner=min_inner,
        argmin=IteratePoint.from_vector(argmin_vec, oracle.m),
        classification=label, samples=samples, seed=seed, region=region,
        tol=float(tol), max_abs_inner=max_abs, failed_samples=failed,
        inners=inners, dist_sq=dist_sq)


@dataclass(frozen=True, eq=False)
class SviReport:
    """Weak-solution residual: inner products of the fixed g_alpha(z_star)."""

    min_inner: float
    box_min: float
    g_alpha_norm: float
    samples: int
    seed: int


def svi_residual(oracle: ProblemOracle, z_star: IteratePoint, alpha: float,
                 region=None, samples: int = 1000, seed: int = 0,
                 settings: SolveSettings = DEFAULT_SOLVE) -> SviReport:
    """min over sampled z of <g_alpha(z_star), z - z_star>.

    box_min is the exact minimum over the region (the objective is linear
    in z, so it is attained at a corner and separates per coordinate).
    """
    oracle._check_point(z_star)
    if samples < 1:
        raise ConfigError("samples must be >= 1")
    region = _resolve_region(oracle, region)
    g = competitive_gradient(oracle, z_star, alpha, settings).vector
    zs = z_star.vector
    draws = _sample_region(np.random.default_rng(seed), region, samples)
    inners = (draws - zs) @ g
    box_min = float(np.sum(np.minimum(g * (region[:, 0] - zs), g * (region[:, 1] - zs))))
    return SviReport(min_inner=float(inners.min()), box_min=box_min,
                     g_alpha_norm=float(np.linalg.norm(g)), samples=samples, seed=seed)


@dataclass(frozen=True, eq=False)
class LinearStepMap:
    """Exact one-step linear map z -> M z of a solver on a constant-Hessian problem."""

    matrix: np.ndarray
    algorithm: str
    alpha: float
    eta: float

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.matrix)).max())


def linear_step_matrix(oracle: ProblemOracle, algorithm: str, alpha: float,
                       eta: float) -> LinearStepMap:
    """Exact step matrix M for constant-Hessian problems.

    Single-stage updates give M = I - eta*A and the two-stage optimistic
    updates M = I - eta*A + eta^2*A^2, where A maps z to g_alpha(z).
    """
    if not oracle.constant_hessian:
        raise UnsupportedProblemError(
            "linear_step_matrix requires a constant-Hessian problem")
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    if not (np.isfinite(eta) and eta > 0):
        raise ConfigError("eta must be > 0")
    if algorithm in ("gda", "omda"):
        alpha_used = 0.0
    elif algorithm == "cgd":
        alpha_used = float(eta)
    else:
        alpha_used = float(alpha)

    z = _probe_point(oracle)
    Hxx = oracle.hess_xx(z)
    Hyy = oracle.hess_yy(z)
    D = oracle.hess_xy(z)
    m, n = D.shape
    G = np.block([[Hxx, D], [-D.T, -Hyy]])
    K = np.block([[np.eye(m), alpha_used * D], [-alpha_used * D.T, np.eye(n)]])
    A = np.linalg.solve(K, G)
    eye = np.eye(m + n)
    if algorithm in ("omda", "ocgo"):
        M = eye - eta * A + eta**2 * (A @ A)
    else:
        M = eye - eta * A
    return LinearStepMap(matrix=M, algorithm=algorithm, alpha=alpha_used, eta=eta)
