"""Numerical kernels.

The order-n tuple accumulation has a compiled implementation (Cython) and a
pure-Python fallback with identical semantics.  The compiled one is used when
the extension is importable, unless ``LOSCHMIDT_PURE_PYTHON=1`` is set.
"""
import os

from .fkernel import f_kernel, kernel, linear_coefficient
from .residues import accumulate_python, residue_coefficients

try:
    from ._tuples import accumulate as accumulate_compiled
except ImportError:  # extension not built
    accumulate_compiled = None

if accumulate_compiled is not None and os.environ.get("LOSCHMIDT_PURE_PYTHON", "") not in ("1", "true"):
    accumulate = accumulate_compiled
    BACKEND = "cython"
else:
    accumulate = accumulate_python
    BACKEND = "python"

__all__ = [
    "BACKEND",
    "accumulate",
    "accumulate_compiled",
    "accumulate_python",
    "f_kernel",
    "kernel",
    "linear_coefficient",
    "residue_coefficients",
]
