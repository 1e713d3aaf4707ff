"""Shared fixtures: desk problems solved once with full iteration audits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

import krylovreg as kr
from krylovreg.projnewton import IterationContext, PntOptions


@dataclass
class RunAudit:
    """A solved problem plus everything needed to audit each iteration."""

    name: str
    problem: kr.ProblemInstance
    opts: PntOptions
    result: kr.PntResult
    contexts: list[IterationContext]

    def iterate_x(self, ctx: IterationContext) -> np.ndarray:
        """Reconstruct the full-space iterate entering step ctx.k."""
        basis = ctx.bidiag.basis_v(cols=ctx.state.y_bar.size)
        return basis @ ctx.state.y_bar

    def direction_x(self, ctx: IterationContext) -> np.ndarray:
        basis = ctx.bidiag.basis_v(cols=ctx.dy.size)
        return basis @ ctx.dy


def _audit(name: str, problem: kr.ProblemInstance, opts: PntOptions | None = None) -> RunAudit:
    opts = opts or PntOptions()
    contexts: list[IterationContext] = []
    result = kr.solve(problem, opts, observer=contexts.append, record_errors=True)
    return RunAudit(name=name, problem=problem, opts=opts, result=result, contexts=contexts)


@pytest.fixture(scope="session")
def heat200() -> RunAudit:
    problem = kr.make_problem("heat", n=200, noise=kr.NoiseSpec(level=5e-2, seed=7))
    return _audit("heat", problem)


@pytest.fixture(scope="session")
def shaw200() -> RunAudit:
    problem = kr.make_problem(
        "shaw", n=200, noise=kr.NoiseSpec(level=1e-2, kind="diagonal-nonwhite", seed=7)
    )
    return _audit("shaw", problem)


@pytest.fixture(scope="session")
def blur32() -> RunAudit:
    problem = kr.make_problem("blur", side=32, noise=kr.NoiseSpec(level=5e-2, seed=7))
    return _audit("blur", problem)


@pytest.fixture(scope="session")
def desk_audits(heat200, shaw200, blur32) -> list[RunAudit]:
    return [heat200, shaw200, blur32]


@pytest.fixture(scope="session")
def heat200_dense_oracle(heat200):
    from .oracles import DenseOracle

    return DenseOracle(heat200.problem)


@pytest.fixture(scope="session")
def shaw200_dense_oracle(shaw200):
    from .oracles import DenseOracle

    return DenseOracle(shaw200.problem)


@pytest.fixture(scope="session")
def blur32_dense_oracle(blur32):
    from .oracles import DenseOracle

    return DenseOracle(blur32.problem)
