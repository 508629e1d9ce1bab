"""Sudler sine products over quadratic irrationals.

Exact quadratic-field arithmetic, convergents and spectral constants of
purely periodic continued fractions, high-precision evaluation of the
products P_N(alpha) = prod |2 sin(pi r alpha)|, their limit functions along
convergent-denominator subsequences, and certified upper bounds.
"""

from .quadfield import QuadExt, qx_arith, qx_floor, qx_frac, qx_to_float
from .cfrac import (
    PeriodSpec,
    SpectralData,
    convergents,
    permute,
    spectral,
    lambda_n,
    u_of_t,
    r_of_t,
)
from .limitfn import TruncatedProduct, c_k_closed, g_limit, g_of_x
from .bounds import SandwichResult, ScanRecord, ck_upper, sandwich, scan

__version__ = "0.1.0"

__all__ = [
    "QuadExt",
    "qx_arith",
    "qx_floor",
    "qx_frac",
    "qx_to_float",
    "PeriodSpec",
    "SpectralData",
    "convergents",
    "permute",
    "spectral",
    "lambda_n",
    "u_of_t",
    "r_of_t",
    "TruncatedProduct",
    "c_k_closed",
    "g_limit",
    "g_of_x",
    "SandwichResult",
    "ScanRecord",
    "ck_upper",
    "sandwich",
    "scan",
    "__version__",
]
