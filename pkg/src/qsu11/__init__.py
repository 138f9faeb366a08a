"""Truncated Jacobi-matrix models of U_q(su(1,1)) discrete series operators.

Modules: ``qcore`` (q-series primitives), ``qpolys`` (q-orthogonal
polynomial families and overlap coefficients), ``operators`` (truncated
operator matrices), ``spectral`` (spectra and deficiency tests), ``ortho``
(orthogonality certification) and ``cli`` (command-line front end).
"""
from .operators import JacobiOperator, build_ladder, build_operator, reconstruct_basis
from .ortho import GramReport, MeasureSpec, gram_matrix, unitarity_check
from .qcore import QBase, basic_hyper, q_bracket, q_pochhammer, q_pochhammer_inf
from .qpolys import PolyFamily, RepParams, eval_poly
from .spectral import deficiency_test, eigen_truncated, spectrum_report

__all__ = [
    "GramReport", "JacobiOperator", "MeasureSpec", "PolyFamily", "QBase", "RepParams",
    "basic_hyper", "build_ladder", "build_operator", "deficiency_test", "eigen_truncated",
    "eval_poly", "gram_matrix", "q_bracket", "q_pochhammer", "q_pochhammer_inf",
    "reconstruct_basis", "spectrum_report", "unitarity_check",
]
__version__ = "0.1.0"
