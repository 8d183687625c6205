"""Dense tensor arithmetic on row-major float64 numpy arrays."""

from __future__ import annotations

import numpy as np


def as_tensor(values) -> np.ndarray:
    """Coerce to a C-contiguous float64 array."""
    return np.ascontiguousarray(values, dtype=np.float64)


def matmul(a, b) -> np.ndarray:
    """Matrix product of a[m, k] and b[k, n] with 64-bit accumulation."""
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul needs 2-D operands, got shapes {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul inner dimension mismatch: {a.shape} x {b.shape}")
    return a @ b
