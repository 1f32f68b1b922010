"""Pointwise verification of separability conditions and identities."""

from .brackets import PhasePoly, check_bracket_side_condition, pb_closed_form, poisson_bracket
from .conditions import b_exprs, candidate_BN, check_nonregular, check_regular, cij_numerator, cij_operator
from .nogo import NONFACTORIZABLE_TEXT, VectorPotentialResult, canonical_f, nogo2d_check, vectorpotential2d_compat
from .operators import SecondOrderOperator, multi_indices, operator_commutator_closure, stackel_operators
from .report import (
    DEGENERATE, FACTORIZABLE, FAIL, NONFACTORIZABLE, OBSTRUCTION, PASS, REGULAR, SKIPPED, SUCCESS,
    TOL_FIT, TOL_IDENTITY, CheckReport,
)

__all__ = [
    "CheckReport", "DEGENERATE", "FACTORIZABLE", "FAIL", "NONFACTORIZABLE", "NONFACTORIZABLE_TEXT",
    "OBSTRUCTION", "PASS", "PhasePoly", "REGULAR", "SKIPPED", "SUCCESS", "SecondOrderOperator", "TOL_FIT",
    "TOL_IDENTITY", "VectorPotentialResult", "b_exprs", "candidate_BN", "canonical_f",
    "check_bracket_side_condition", "check_nonregular", "check_regular", "cij_numerator", "cij_operator",
    "multi_indices", "nogo2d_check", "operator_commutator_closure", "pb_closed_form", "poisson_bracket",
    "stackel_operators", "vectorpotential2d_compat",
]
