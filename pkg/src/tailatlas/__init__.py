"""Atomic tail decompositions of fiber extensions of exact and K-mixing Markov systems."""

__version__ = "1.0.0"

from .decomposition import (Atom, Component, DecompositionReport, certify_exactness, decompose,
                            project_atoms, relabel_levels, report_to_dict, verify_theorem_invariants)
from .errors import TailAtlasError
from .fiber_extension import FiberAction, FiberSet, ProductSystem, build_product
from .k_quotient import TwoSidedSymbolicSystem, build_quotient, decompose_k
from .symbolic_base import SymbolicBaseSystem, base_from_matrix, full_shift

__all__ = [
    "__version__", "Atom", "Component", "DecompositionReport", "certify_exactness", "decompose",
    "project_atoms", "relabel_levels", "report_to_dict", "verify_theorem_invariants", "TailAtlasError",
    "FiberAction", "FiberSet", "ProductSystem", "build_product", "TwoSidedSymbolicSystem",
    "build_quotient", "decompose_k", "SymbolicBaseSystem", "base_from_matrix", "full_shift",
]
