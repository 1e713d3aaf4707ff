"""Render convergence and solution figures next to the delimited output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update(
    {
        "figure.dpi": 110,
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "lines.linewidth": 1.4,
        "legend.fontsize": 8,
    }
)

_COLORS = {
    "proj-newton": "tab:blue",
    "proj-newton-md": "tab:cyan",
    "full-newton": "tab:red",
}


def _steps(arm):
    return [rec.k for rec in arm.result.history]


def render_experiment_figures(out_dir, cfg, problem, arms, oracle_lambdas, oracle_solutions):
    out = Path(out_dir)
    paths = []

    fig, axes = plt.subplots(1, 3, figsize=(11, 3.2), constrained_layout=True)
    ax_err, ax_lam, ax_merit = axes
    for arm in arms:
        ks = _steps(arm)
        color = _COLORS.get(arm.solver)
        errs = [rec.relative_error for rec in arm.result.history]
        if any(e is not None for e in errs):
            ax_err.semilogy(ks, errs, label=arm.solver, color=color)
        ax_lam.semilogy(ks, [rec.lam for rec in arm.result.history], label=arm.solver, color=color)
        ax_merit.semilogy(
            ks, [max(rec.merit_h, 1e-300) for rec in arm.result.history],
            label=arm.solver, color=color,
        )
    if "dp-bisection" in oracle_lambdas:
        ax_lam.axhline(oracle_lambdas["dp-bisection"], ls="--", c="k", lw=0.9, label="dp root")
    if "grid-optimal" in oracle_lambdas:
        ax_lam.axhline(oracle_lambdas["grid-optimal"], ls=":", c="gray", lw=0.9, label="grid optimal")
    ax_err.set_xlabel("iteration")
    ax_err.set_ylabel("relative error")
    ax_lam.set_xlabel("iteration")
    ax_lam.set_ylabel("multiplier")
    ax_merit.set_xlabel("iteration")
    ax_merit.set_ylabel("merit")
    for ax in axes:
        ax.legend(loc="best")
    path = out / "convergence.png"
    fig.savefig(path)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(4.2, 3.2), constrained_layout=True)
    for arm in arms:
        ax.semilogy(
            _steps(arm),
            [rec.jacobian_condition for rec in arm.result.history],
            label=arm.solver,
            color=_COLORS.get(arm.solver),
        )
    ax.set_xlabel("iteration")
    ax.set_ylabel("cond(J)")
    ax.legend(loc="best")
    path = out / "condition.png"
    fig.savefig(path)
    plt.close(fig)
    paths.append(path)

    paths.append(_render_solutions(out, cfg, problem, arms, oracle_solutions))
    return paths


def _render_solutions(out, cfg, problem, arms, oracle_solutions):
    if cfg.problem == "blur":
        side = cfg.side
        panels = []
        if problem.x_true is not None:
            panels.append(("true", problem.x_true))
        panels.append(("observed", problem.b))
        panels.extend((arm.solver, arm.result.x) for arm in arms)
        cols = len(panels)
        fig, axes = plt.subplots(1, cols, figsize=(2.6 * cols, 2.8), constrained_layout=True)
        if cols == 1:
            axes = [axes]
        for ax, (title, vec) in zip(axes, panels):
            ax.imshow(np.asarray(vec).reshape(side, side), cmap="gray")
            ax.set_title(title)
            ax.axis("off")
    else:
        fig, ax = plt.subplots(figsize=(5.2, 3.4), constrained_layout=True)
        grid = np.arange(1, problem.a.shape[1] + 1)
        if problem.x_true is not None:
            ax.plot(grid, problem.x_true, "k-", lw=1.0, label="true")
        for arm in arms:
            ax.plot(grid, arm.result.x, label=arm.solver, color=_COLORS.get(arm.solver))
        if "dp-bisection" in oracle_solutions:
            ax.plot(grid, oracle_solutions["dp-bisection"], "--", c="gray", lw=0.9, label="dp root")
        ax.set_xlabel("index")
        ax.set_ylabel("value")
        ax.legend(loc="best")
    path = Path(out) / "solution.png"
    fig.savefig(path)
    plt.close(fig)
    return path


def render_scaling_figure(out_dir, rows):
    by_solver: dict[str, list[tuple[int, float]]] = {}
    for n, solver, _, seconds in rows:
        by_solver.setdefault(solver, []).append((n, seconds))
    fig, ax = plt.subplots(figsize=(4.6, 3.4), constrained_layout=True)
    for solver, data in by_solver.items():
        data.sort()
        ax.loglog(
            [n for n, _ in data],
            [max(s, 1e-9) for _, s in data],
            "o-",
            label=solver,
            color=_COLORS.get(solver),
        )
    ax.set_xlabel("n")
    ax.set_ylabel("seconds")
    ax.legend(loc="best")
    path = Path(out_dir) / "scaling.png"
    fig.savefig(path)
    plt.close(fig)
    return [path]
