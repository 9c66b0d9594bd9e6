"""Numerical generalized additive decompositions (GADs) of homogeneous forms."""

from .apolarity import ContractError, DualSeries, apolar_norm, apolar_product, check_f, hankel_family
from .decomposer import (
    ClusteringError,
    DecompositionReport,
    DecomposeOptions,
    DegreeBoundError,
    GADError,
    LocalizationError,
    NonNilpotentBlockError,
    gad_decompose,
)
from .invsystems import GAD, GADTerm, ell_rank, gad_rank, omega_dlv, reconstruct
from .polycore import CoordChange, LinearForm, Poly, format_poly, parse_poly

__version__ = "0.1.0"

__all__ = [
    "ClusteringError",
    "ContractError",
    "CoordChange",
    "DecompositionReport",
    "DecomposeOptions",
    "DegreeBoundError",
    "DualSeries",
    "GAD",
    "GADError",
    "GADTerm",
    "LinearForm",
    "LocalizationError",
    "NonNilpotentBlockError",
    "Poly",
    "apolar_norm",
    "apolar_product",
    "check_f",
    "ell_rank",
    "format_poly",
    "gad_decompose",
    "gad_rank",
    "hankel_family",
    "omega_dlv",
    "parse_poly",
    "reconstruct",
]
