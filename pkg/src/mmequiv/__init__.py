"""Equivalence, clustering and discretizability tools for polyadic
decompositions of matrix multiplication tensors."""

from .clustering import clustering_general, clustering_graph, clustering_vector
from .core import (
    Decomposition,
    MatMulTensor,
    build_tensor,
    cyclic_rotate,
    factor_span_check,
    fixture,
    verify_decomposition,
)
from .cpd import SolveConfig, decompose, sample_population
from .discretize import char_poly, criterion, nd_score
from .equivalence import (
    Tolerances,
    check_equivalence,
    check_equivalence_bruteforce,
    similarity_probe,
    solve_scaling_trace,
)
from .transforms import InvarianceTransform, apply, compose, inverse, random_transform

__all__ = [
    "Decomposition", "MatMulTensor", "build_tensor", "cyclic_rotate", "factor_span_check",
    "fixture", "verify_decomposition", "InvarianceTransform", "apply", "compose", "inverse",
    "random_transform", "clustering_general", "clustering_graph", "clustering_vector",
    "Tolerances", "check_equivalence", "check_equivalence_bruteforce", "similarity_probe",
    "solve_scaling_trace", "char_poly", "criterion", "nd_score", "SolveConfig", "decompose",
    "sample_population",
]
