"""Exact symplectic/orthogonal subspace geometry and certified toral spectra."""

from .scalars import QQ, Scalar, TowerContext, adjoin_sqrt, sign_of, sqrt_in_tower

__version__ = "0.1.0"

__all__ = [
    "QQ",
    "Scalar",
    "TowerContext",
    "adjoin_sqrt",
    "sign_of",
    "sqrt_in_tower",
    "__version__",
]
