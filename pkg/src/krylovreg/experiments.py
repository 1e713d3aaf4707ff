"""Experiment driver: run solver arms, write traces and summaries, verify."""

from __future__ import annotations

import csv
import dataclasses
import io
import time
from pathlib import Path

import numpy as np

from . import baselines, projnewton
from .config import ExperimentConfig
from .errors import ConfigError
from .linop import MATERIALIZE_GUARD
from .problems import ProblemInstance, make_problem, require_assumption
from .projnewton import PntResult

TRACE_HEADER = "k,lambda,merit_h,residual_mnorm,gamma,backtracks,cond_J,rel_error"

RESIDUAL_FLOOR_SLACK = 1e-12


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def _dense_fits(problem: ProblemInstance) -> bool:
    m, n = problem.a.shape
    return m * n <= MATERIALIZE_GUARD


@dataclasses.dataclass
class ArmResult:
    solver: str
    result: PntResult
    seconds: float


def _run_arm(solver: str, problem: ProblemInstance, cfg: ExperimentConfig) -> ArmResult:
    opts = dataclasses.replace(cfg.options, check_assumption=False)
    if solver == "proj-newton":
        opts = dataclasses.replace(opts, k0=1)
        start = time.perf_counter()
        result = projnewton.solve(problem, opts, record_errors=problem.x_true is not None)
        seconds = time.perf_counter() - start
    elif solver == "proj-newton-md":
        start = time.perf_counter()
        result = projnewton.solve(problem, opts, record_errors=problem.x_true is not None)
        seconds = time.perf_counter() - start
    elif solver == "full-newton":
        dense = baselines.DenseProblem.from_instance(problem, tau=cfg.options.tau)
        start = time.perf_counter()
        result = baselines.full_newton_solve(dense, opts, x_true=problem.x_true)
        seconds = time.perf_counter() - start
    else:
        raise ConfigError(f"unknown solver {solver!r}")
    return ArmResult(solver=solver, result=result, seconds=seconds)


def write_trace(path: Path, arms: list[ArmResult], tau_m: float, problem: str) -> None:
    """One file, one block of rows per solver, preceded by a provenance line."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# tau_m={_fmt(tau_m)} problem={problem}\n")
        fh.write(TRACE_HEADER + "\n")
        for arm in arms:
            for rec in arm.result.history:
                row = [
                    str(rec.k),
                    _fmt(rec.lam),
                    _fmt(rec.merit_h),
                    _fmt(rec.residual_m_norm),
                    _fmt(rec.gamma),
                    str(rec.backtracks),
                    _fmt(rec.jacobian_condition),
                    _fmt(rec.relative_error),
                ]
                fh.write(",".join(row) + "\n")


def run_experiment(cfg: ExperimentConfig, out_dir, *, figures: bool = True) -> dict:
    """Run every configured solver arm on one problem; write csv + figures.

    Returns a dict with the output paths and the per-arm results.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = make_problem(cfg.problem, **cfg.problem_kwargs())
    (out / "resolved_config.txt").write_text(cfg.echo(), encoding="utf-8")

    want_oracles = cfg.oracles == "on" or (cfg.oracles == "auto" and _dense_fits(problem))
    require_assumption(problem)

    arms = [_run_arm(name, problem, cfg) for name in cfg.solvers]

    oracle_rows = []
    oracle_solutions = {}
    if want_oracles:
        dense = baselines.DenseProblem.from_instance(problem, tau=cfg.options.tau)
        lam_dp, x_dp = baselines.dp_lambda_bisection(dense)
        oracle_solutions["dp-bisection"] = x_dp
        scale = float(np.linalg.norm(problem.x_true)) if problem.x_true is not None else None
        err_dp = (
            float(np.linalg.norm(x_dp - problem.x_true)) / scale if scale else None
        )
        oracle_rows.append(("dp-bisection", lam_dp, err_dp))
        if problem.x_true is not None:
            lam_opt, x_opt = baselines.optimal_lambda_grid(dense, problem.x_true)
            oracle_solutions["grid-optimal"] = x_opt
            err_opt = float(np.linalg.norm(x_opt - problem.x_true)) / scale
            oracle_rows.append(("grid-optimal", lam_opt, err_opt))

    tau_m = cfg.options.tau * problem.a.shape[0]
    trace_path = out / "trace.csv"
    write_trace(trace_path, arms, tau_m, cfg.problem)

    summary_path = out / "summary.csv"
    with open(summary_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solver", "lambda", "mu", "rel_error", "iterations", "seconds", "status"])
        for arm in arms:
            rec = arm.result.history[-1] if arm.result.history else None
            rel = rec.relative_error if rec else None
            writer.writerow(
                [
                    arm.solver,
                    _fmt(arm.result.lam),
                    _fmt(arm.result.mu),
                    _fmt(rel),
                    len(arm.result.history),
                    _fmt(arm.seconds),
                    arm.result.status,
                ]
            )
        for name, lam, err in oracle_rows:
            writer.writerow([name, _fmt(lam), _fmt(1.0 / lam), _fmt(err), "", "", "oracle"])

    solution_paths = {}
    for arm in arms:
        path = out / f"solution_{arm.solver}.txt"
        np.savetxt(path, arm.result.x, fmt="%.17g")
        solution_paths[arm.solver] = path
    for name, x_vec in oracle_solutions.items():
        np.savetxt(out / f"solution_{name}.txt", x_vec, fmt="%.17g")
    if problem.x_true is not None:
        np.savetxt(out / "x_true.txt", problem.x_true, fmt="%.17g")

    figure_paths = []
    if figures:
        from . import figures as figmod

        oracle_lambdas = {name: lam for name, lam, _ in oracle_rows}
        figure_paths = figmod.render_experiment_figures(
            out, cfg, problem, arms, oracle_lambdas, oracle_solutions
        )

    return {
        "problem": problem,
        "arms": arms,
        "oracles": {name: lam for name, lam, _ in oracle_rows},
        "trace": trace_path,
        "summary": summary_path,
        "solutions": solution_paths,
        "figures": figure_paths,
    }


def run_scaling(cfg: ExperimentConfig, sizes, out_dir, *, figures: bool = True) -> dict:
    """Time each solver arm across problem sizes; write a timing table.

    The projected arm runs at every size; the dense full-space arm only where
    the operator fits the materialization guard.  Timing wraps the solve call
    only.
    """
    if cfg.problem == "blur":
        raise ConfigError("scaling sweeps are defined for the 1-D problems")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.txt").write_text(cfg.echo(), encoding="utf-8")
    rows = []
    for n in sizes:
        problem = make_problem(cfg.problem, **cfg.problem_kwargs(n=n))
        dense_ok = _dense_fits(problem)
        if dense_ok:
            require_assumption(problem)
        for solver in cfg.solvers:
            if solver == "full-newton" and not dense_ok:
                continue
            arm = _run_arm(solver, problem, cfg)
            rows.append((n, solver, len(arm.result.history), arm.seconds))
    path = out / "scaling.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "solver", "iterations", "seconds"])
        for n, solver, iters, seconds in rows:
            writer.writerow([n, solver, iters, _fmt(seconds)])
    figure_paths = []
    if figures:
        from . import figures as figmod

        figure_paths = figmod.render_scaling_figure(out, rows)
    return {"rows": rows, "table": path, "figures": figure_paths}


def verify_trace(path) -> list[str]:
    """Re-check solver invariants on an emitted trace file.

    Returns a list of violation messages (empty when the trace is clean).
    Violations checked: merit monotonicity within each solver block and the
    weighted-residual floor sqrt(tau_m) * (1 - slack).
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"trace file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ConfigError("trace missing provenance header line")
    meta = dict(
        item.split("=", 1) for item in lines[0][1:].split() if "=" in item
    )
    try:
        tau_m = float(meta["tau_m"])
    except (KeyError, ValueError) as exc:
        raise ConfigError("trace header lacks a parseable tau_m") from exc
    reader = csv.DictReader(io.StringIO("\n".join(lines[1:])))
    if reader.fieldnames != TRACE_HEADER.split(","):
        raise ConfigError("trace header columns do not match the expected schema")
    floor = (tau_m**0.5) * (1.0 - RESIDUAL_FLOOR_SLACK)
    violations = []
    prev_k = None
    prev_merit = None
    for i, row in enumerate(reader, start=3):
        k = int(row["k"])
        merit = float(row["merit_h"])
        residual = float(row["residual_mnorm"])
        if prev_k is not None and k > prev_k:  # same solver block
            if merit > prev_merit:
                violations.append(f"line {i}: merit increased ({prev_merit!r} -> {merit!r})")
        if residual < floor:
            violations.append(f"line {i}: residual {residual!r} below floor {floor!r}")
        prev_k, prev_merit = k, merit
    return violations
