"""Exact tensor rank and border rank tools for direct sums of small tensors."""

from __future__ import annotations

__version__ = "0.1.0"

from .exactalg import GF, QQ, Field, LaurentPoly, Matrix
from .tensor3 import MatrixSubspace, SimpleTensor, Splitting, Tensor3, direct_sum, mm_tensor, read_tensor, write_tensor

__all__ = [
    "__version__",
    "GF",
    "QQ",
    "Field",
    "LaurentPoly",
    "Matrix",
    "MatrixSubspace",
    "SimpleTensor",
    "Splitting",
    "Tensor3",
    "direct_sum",
    "mm_tensor",
    "read_tensor",
    "write_tensor",
]
