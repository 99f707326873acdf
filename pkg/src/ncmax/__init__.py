"""Maximal inequalities in finite-dimensional tracial algebras.

Majorants for families of positive maps built from weak-type projections,
envelope problems for the strong maximal norms, rearrangements of operator
sequences and the weak maximal quasi-norms, and explicit families that
separate them.
"""

from .algebra import Algebra, AlgebraError, Operator
from .envelope import EnvelopeProblem, solve_envelope
from .lambdas import OperatorSequence, k_functional, lambda_decompose, lambda_norm, mu_seq
from .marcin import (
    InterpolationParams,
    OracleViolation,
    ParameterError,
    WeightSequence,
    marcinkiewicz_majorant,
)
from .oracle import Filtration, Level, MapFamily, WeakTypeOracle
from .stepfn import StepFunction, lorentz_norm, mu

__all__ = [
    "Algebra",
    "AlgebraError",
    "EnvelopeProblem",
    "Filtration",
    "InterpolationParams",
    "Level",
    "MapFamily",
    "Operator",
    "OperatorSequence",
    "OracleViolation",
    "ParameterError",
    "StepFunction",
    "WeakTypeOracle",
    "WeightSequence",
    "k_functional",
    "lambda_decompose",
    "lambda_norm",
    "lorentz_norm",
    "marcinkiewicz_majorant",
    "mu",
    "mu_seq",
    "solve_envelope",
]
