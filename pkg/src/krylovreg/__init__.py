"""Matrix-free solver for Bayesian linear inverse problems.

The central entry point is :func:`krylovreg.projnewton.solve`, which jointly
computes the regularized solution and the Lagrange multiplier of the noise
constraint on a growing Krylov subspace.  Dense desk-scale baselines live in
:mod:`krylovreg.baselines`; test problems in :mod:`krylovreg.problems`.
"""

from . import baselines, densela, errors, gkb, kernels, linop, problems, projnewton
from .kernels import KernelSpec
from .problems import NoiseSpec, ProblemInstance, make_problem
from .projnewton import PntOptions, PntResult, solve

__all__ = [
    "KernelSpec",
    "NoiseSpec",
    "PntOptions",
    "PntResult",
    "ProblemInstance",
    "baselines",
    "densela",
    "gkb",
    "kernels",
    "linop",
    "make_problem",
    "problems",
    "projnewton",
    "solve",
]

__version__ = "0.1.0"
