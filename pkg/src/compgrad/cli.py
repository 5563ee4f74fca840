"""Experiment command line: compgrad run|sweep|flow|rates|coherence.

Every command reads a JSON config (see README for the schema), writes CSV
and/or JSON artifacts with 17-significant-digit floats, and exits 0 on a
converged or budget-exhausted run, 2 on divergence, 1 on config or internal
errors.  Outputs are byte-identical across reruns of the same config.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import logging
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from .analysis import (discrete_rate_report, mvi_probe, ocgo_param_bounds,
                       rate_continuous, spectral_summary)
from .competitive import SolveSettings
from .errors import CompgradError, ConfigError
from .problems import IteratePoint, ProblemOracle, problem_from_config
from .solvers import (CONVERGED, DIVERGED, MAX_ITERS, SolverConfig,
                      StepSchedule, Trajectory, integrate_flow, run_solver)

log = logging.getLogger("compgrad")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DIVERGED = 2

_RANDOM_Z0 = re.compile(r"^random\((\d+)\)$")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _configure_logging() -> None:
    level_name = os.environ.get("COMPGRAD_LOG", "error")
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        raise ConfigError(f"COMPGRAD_LOG must be one of {sorted(levels)}, got {level_name!r}")
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(levels[level_name])


def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigError(f"{path}.{key} is required")
    return mapping[key]


def _as_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path} must be a mapping")
    return value


def _parse_schedule(solver_cfg: dict) -> StepSchedule:
    if "schedule" in solver_cfg:
        sched = _as_mapping(solver_cfg["schedule"], "solver.schedule")
        kind = sched.get("kind", "constant")
        if kind == "constant":
            return StepSchedule(kind="constant", eta=float(sched.get("eta", 0.05)))
        if kind == "robbins_monro":
            return StepSchedule(kind="robbins_monro",
                                c=float(sched.get("c", 0.5)),
                                n0=float(sched.get("n0", 10.0)),
                                p=float(sched.get("p", 1.0)))
        raise ConfigError(f"solver.schedule.kind must be 'constant' or 'robbins_monro', "
                          f"got {kind!r}")
    return StepSchedule(kind="constant", eta=float(solver_cfg.get("eta", 0.05)))


def _parse_solve(cfg: dict, path: str) -> SolveSettings:
    if "solve" not in cfg:
        return SolveSettings()
    s = _as_mapping(cfg["solve"], f"{path}.solve")
    max_iters = s.get("cg_max_iters")
    return SolveSettings(method=s.get("method", "auto"),
                         cg_tol=float(s.get("cg_tol", 1e-10)),
                         cg_max_iters=None if max_iters is None else int(max_iters))


def _parse_solver(cfg: dict) -> SolverConfig:
    solver_cfg = _as_mapping(_require(cfg, "solver", "config"), "solver")
    algorithm = _require(solver_cfg, "algorithm", "solver")
    return SolverConfig(
        algorithm=algorithm,
        alpha=float(solver_cfg.get("alpha", 0.0)),
        schedule=_parse_schedule(solver_cfg),
        max_iters=int(solver_cfg.get("max_iters", 100)),
        grad_tol=float(solver_cfg.get("grad_tol", 0.0)),
        divergence_threshold=float(solver_cfg.get("divergence_threshold", 1e6)),
        solve=_parse_solve(solver_cfg, "solver"),
        record_half_steps=bool(solver_cfg.get("record_half_steps", False)),
    )


def _parse_z0(cfg: dict, oracle: ProblemOracle) -> IteratePoint:
    z0 = _require(cfg, "z0", "config")
    d = oracle.m + oracle.n
    if isinstance(z0, str):
        match = _RANDOM_Z0.match(z0.strip())
        if not match:
            raise ConfigError("z0 must be a vector or the string 'random(<seed>)'")
        vec = np.random.default_rng(int(match.group(1))).standard_normal(d)
        return IteratePoint.from_vector(vec, oracle.m)
    vec = np.asarray(z0, dtype=np.float64)
    if vec.shape != (d,):
        raise ConfigError(f"z0 must have {d} entries for this problem, got shape {vec.shape}")
    return IteratePoint.from_vector(vec, oracle.m)


@dataclass
class ExperimentConfig:
    raw: dict
    oracle: ProblemOracle
    trajectory_csv: str | None
    report_json: str | None

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        raw = _as_mapping(raw, "config")
        oracle = problem_from_config(_as_mapping(_require(raw, "problem", "config"), "problem"))
        outputs = _as_mapping(raw.get("outputs", {}), "outputs")
        return cls(raw=raw, oracle=oracle,
                   trajectory_csv=outputs.get("trajectory_csv"),
                   report_json=outputs.get("report_json"))

    def require_csv(self) -> str:
        if not self.trajectory_csv:
            raise ConfigError("outputs.trajectory_csv is required for this command")
        return self.trajectory_csv

    def require_json(self) -> str:
        if not self.report_json:
            raise ConfigError("outputs.report_json is required for this command")
        return self.report_json


def _open_out(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")


def _write_trajectory_csv(path: str, traj: Trajectory, schedule: StepSchedule,
                          full_state: bool) -> None:
    header = "iter,eta,norm_x,norm_y,norm_g_alpha"
    if full_state:
        z0 = traj.points[0]
        header += "," + ",".join(
            [f"x{i}" for i in range(z0.m)] + [f"y{j}" for j in range(z0.n)])
    with _open_out(path) as fh:
        fh.write(header + "\n")
        for i, point in enumerate(traj.points):
            row = [str(i), _fmt(schedule.eta_at(i + 1)),
                   _fmt(traj.x_norms[i]), _fmt(traj.y_norms[i]), _fmt(traj.g_norms[i])]
            if full_state:
                row.extend(_fmt(v) for v in point.vector)
            fh.write(",".join(row) + "\n")


def _write_flow_csv(path: str, traj: Trajectory) -> None:
    with _open_out(path) as fh:
        fh.write("t,norm_g0_sq,norm_x,norm_y\n")
        for i in range(len(traj.points)):
            fh.write(",".join([_fmt(traj.times[i]), _fmt(traj.g0_sq[i]),
                               _fmt(traj.x_norms[i]), _fmt(traj.y_norms[i])]) + "\n")


def _write_json(path: str, payload: dict) -> None:
    with _open_out(path) as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _status_exit(status: str) -> int:
    return EXIT_DIVERGED if status == DIVERGED else EXIT_OK


def _run_summary(traj: Trajectory, alpha: float, algorithm: str) -> dict:
    return {
        "algorithm": algorithm,
        "alpha": alpha,
        "status": traj.status,
        "iterations": len(traj.points) - 1,
        "final_norm_x": float(traj.x_norms[-1]),
        "final_norm_y": float(traj.y_norms[-1]),
        "final_norm_g_alpha": float(traj.g_norms[-1]),
    }


def cmd_run(config: ExperimentConfig, full_state: bool = False) -> int:
    solver = _parse_solver(config.raw)
    z0 = _parse_z0(config.raw, config.oracle)
    traj = run_solver(config.oracle, z0, solver)
    _write_trajectory_csv(config.require_csv(), traj, solver.schedule, full_state)
    if config.report_json:
        _write_json(config.report_json, _run_summary(traj, solver.alpha, solver.algorithm))
    log.info("run %s alpha=%s: %s after %d iters", solver.algorithm, solver.alpha,
             traj.status, len(traj.points) - 1)
    print(f"run: {traj.status} after {len(traj.points) - 1} iterations "
          f"(final |g| = {_fmt(traj.g_norms[-1])})")
    return _status_exit(traj.status)


def _sweep_csv_path(base: str, index: int) -> str:
    root, ext = os.path.splitext(base)
    return f"{root}_alpha{index}{ext or '.csv'}"


def cmd_sweep(config: ExperimentConfig, full_state: bool = False, jobs: int = 1) -> int:
    solver = _parse_solver(config.raw)
    z0 = _parse_z0(config.raw, config.oracle)
    grid = config.raw.get("alpha_grid")
    if not isinstance(grid, list) or not grid:
        raise ConfigError("alpha_grid must be a non-empty list for sweep")
    grid = [float(a) for a in grid]
    csv_base = config.require_csv()
    report_path = config.require_json()

    def one(index_alpha):
        index, alpha = index_alpha
        cfg_a = SolverConfig(
            algorithm=solver.algorithm, alpha=alpha, schedule=solver.schedule,
            max_iters=solver.max_iters, grad_tol=solver.grad_tol,
            divergence_threshold=solver.divergence_threshold, solve=solver.solve,
            record_half_steps=solver.record_half_steps)
        path = _sweep_csv_path(csv_base, index)
        try:
            traj = run_solver(config.oracle, z0, cfg_a)
        except CompgradError as exc:
            log.info("sweep alpha=%s failed: %s", alpha, exc)
            return alpha, {"status": "error", "error": str(exc), "trajectory_csv": path}
        _write_trajectory_csv(path, traj, cfg_a.schedule, full_state)
        entry = _run_summary(traj, alpha, solver.algorithm)
        del entry["algorithm"]
        del entry["alpha"]
        entry["trajectory_csv"] = path
        return alpha, entry

    tasks = list(enumerate(grid))
    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(t) for t in tasks]

    converged = [a for a, entry in results if entry.get("status") == CONVERGED]
    summary = {
        "algorithm": solver.algorithm,
        "alpha_grid": grid,
        "results": {_fmt(a): entry for a, entry in results},
        "smallest_converged_alpha": min(converged) if converged else None,
    }
    _write_json(report_path, summary)

    statuses = [entry.get("status") for _, entry in results]
    for alpha, entry in results:
        print(f"sweep alpha={_fmt(alpha)}: {entry.get('status')}")
    if any(s in (CONVERGED, MAX_ITERS) for s in statuses):
        return EXIT_OK
    if any(s == DIVERGED for s in statuses):
        return EXIT_DIVERGED
    return EXIT_ERROR


def cmd_flow(config: ExperimentConfig) -> int:
    flow_cfg = _as_mapping(_require(config.raw, "flow", "config"), "flow")
    z0 = _parse_z0(config.raw, config.oracle)
    traj = integrate_flow(
        config.oracle, z0,
        alpha=float(_require(flow_cfg, "alpha", "flow")),
        beta=float(flow_cfg.get("beta", 1.0)),
        dt=float(flow_cfg.get("dt", 1e-3)),
        t_end=float(_require(flow_cfg, "t_end", "flow")),
        settings=_parse_solve(flow_cfg, "flow"))
    _write_flow_csv(config.require_csv(), traj)
    print(f"flow: {traj.status} at t = {_fmt(traj.times[-1])} "
          f"(final |g0|^2 = {_fmt(traj.g0_sq[-1])})")
    return _status_exit(traj.status)


def cmd_rates(config: ExperimentConfig) -> int:
    rates_cfg = _as_mapping(config.raw.get("rates", {}), "rates")
    alpha = float(rates_cfg.get("alpha", 0.0))
    beta = float(rates_cfg.get("beta", 1.0))
    eta = float(rates_cfg.get("eta", 0.05))
    probe = rates_cfg.get("probe_point")
    z = None
    if probe is not None:
        vec = np.asarray(probe, dtype=np.float64)
        d = config.oracle.m + config.oracle.n
        if vec.shape != (d,):
            raise ConfigError(f"rates.probe_point must have {d} entries, got shape {vec.shape}")
        z = IteratePoint.from_vector(vec, config.oracle.m)

    summary = spectral_summary(config.oracle, z)
    report = discrete_rate_report(summary, alpha, eta)
    payload = {
        "alpha": alpha,
        "beta": beta,
        "eta": eta,
        "spectral_summary": {
            "lam_xx_min": summary.lam_xx_min, "lam_xx_max": summary.lam_xx_max,
            "lam_yy_min": summary.lam_yy_min, "lam_yy_max": summary.lam_yy_max,
            "lam_xy_min": summary.lam_xy_min, "lam_xy_max": summary.lam_xy_max,
            "lam_yx_min": summary.lam_yx_min, "lam_yx_max": summary.lam_yx_max,
            "lam_bar_1": summary.lam_bar_1, "lam_bar_2": summary.lam_bar_2,
        },
        "lambda_continuous": rate_continuous(summary, alpha, beta),
        "lambda_discrete": report.lam,
        "interaction_k": report.k,
        "interaction_c": report.c,
    }
    if config.oracle.lipschitz is None:
        payload["ocgo_alpha_sq_max"] = None
        payload["ocgo_eta_max"] = None
    else:
        bounds = ocgo_param_bounds(config.oracle.lipschitz)
        payload["ocgo_alpha_sq_max"] = ("unbounded" if bounds.alpha_unbounded
                                        else bounds.alpha_sq_max)
        eta_bound = bounds.eta_max(alpha)
        payload["ocgo_eta_max"] = {"value": eta_bound.value,
                                   "admissible": eta_bound.admissible}
    _write_json(config.require_json(), payload)
    print(f"rates: lambda_continuous = {_fmt(payload['lambda_continuous'])}, "
          f"lambda_discrete = {_fmt(payload['lambda_discrete'])}")
    return EXIT_OK


def cmd_coherence(config: ExperimentConfig) -> int:
    coh = _as_mapping(config.raw.get("coherence", {}), "coherence")
    alpha = float(coh.get("alpha", 0.0))
    d = config.oracle.m + config.oracle.n
    z_star_raw = coh.get("z_star")
    if z_star_raw is None:
        z_star = IteratePoint.from_vector(np.zeros(d), config.oracle.m)
    else:
        vec = np.asarray(z_star_raw, dtype=np.float64)
        if vec.shape != (d,):
            raise ConfigError(f"coherence.z_star must have {d} entries, got shape {vec.shape}")
        z_star = IteratePoint.from_vector(vec, config.oracle.m)
    tol = coh.get("tol")
    report = mvi_probe(
        config.oracle, z_star, alpha,
        region=coh.get("region"),
        samples=int(coh.get("samples", 1000)),
        seed=int(coh.get("seed", 0)),
        tol=None if tol is None else float(tol))
    _write_json(config.require_json(), report.to_json_dict())
    print(f"coherence: {report.classification} "
          f"(min inner product = {_fmt(report.min_inner)})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compgrad",
        description="Competitive-gradient experiments on two-player zero-sum games.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("run", "run one solver configuration and write its trajectory CSV"),
        ("sweep", "run the solver across alpha_grid; one CSV per alpha plus a summary JSON"),
        ("flow", "integrate the continuous-time flow and write its CSV"),
        ("rates", "evaluate rate formulas and parameter bounds; write a JSON report"),
        ("coherence", "sample the variational-inequality probe; write a JSON report"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON experiment config")
        if name in ("run", "sweep"):
            p.add_argument("--full-state", action="store_true",
                           help="append flattened x/y coordinates to trajectory CSVs")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1,
                           help="worker threads for the alpha grid (default 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _configure_logging()
        config = ExperimentConfig.load(args.config)
        if args.command == "run":
            return cmd_run(config, full_state=args.full_state)
        if args.command == "sweep":
            if args.jobs < 1:
                raise ConfigError("--jobs must be >= 1")
            return cmd_sweep(config, full_state=args.full_state, jobs=args.jobs)
        if args.command == "flow":
            return cmd_flow(config)
        if args.command == "rates":
            return cmd_rates(config)
        return cmd_coherence(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except CompgradError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
