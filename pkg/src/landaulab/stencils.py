"""Finite-difference stencil helpers on the uniform velocity grid.

All interior stencils are the standard second-order centered ones; boundary
planes where a stencil would need one-sided differences are left at zero,
matching the convention that operator outputs are zeroed on the outermost
two-cell shell.
"""

from __future__ import annotations

import numpy as np


def centered_diff(field: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Centered first difference; boundary planes along ``axis`` are zero."""
    out = np.zeros_like(field)
    lo = [slice(None)] * field.ndim
    hi = [slice(None)] * field.ndim
    mid = [slice(None)] * field.ndim
    lo[axis] = slice(0, -2)
    hi[axis] = slice(2, None)
    mid[axis] = slice(1, -1)
    out[tuple(mid)] = (field[tuple(hi)] - field[tuple(lo)]) / (2.0 * h)
    return out


def centered_gradient(field: np.ndarray, h: float) -> np.ndarray:
    """Stacked centered differences, shape field.shape + (3,)."""
    return np.stack([centered_diff(field, a, h) for a in range(3)], axis=-1)


def second_diff(field: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Centered second difference; boundary planes are zero."""
    out = np.zeros_like(field)
    lo = [slice(None)] * field.ndim
    hi = [slice(None)] * field.ndim
    mid = [slice(None)] * field.ndim
    lo[axis] = slice(0, -2)
    hi[axis] = slice(2, None)
    mid[axis] = slice(1, -1)
    out[tuple(mid)] = (field[tuple(hi)] - 2.0 * field[tuple(mid)] + field[tuple(lo)]) / h**2
    return out


def cross_second_diff(field: np.ndarray, ax1: int, ax2: int, h: float) -> np.ndarray:
    """Symmetric 4-point cross stencil for the mixed second derivative."""
    out = np.zeros_like(field)

    def shifted(s1, s2):
        idx = [slice(1, -1)] * field.ndim
        idx[ax1] = slice(1 + s1, field.shape[ax1] - 1 + s1)
        idx[ax2] = slice(1 + s2, field.shape[ax2] - 1 + s2)
        return field[tuple(idx)]

    mid = [slice(1, -1)] * field.ndim
    out[tuple(mid)] = (
        shifted(1, 1) - shifted(1, -1) - shifted(-1, 1) + shifted(-1, -1)
    ) / (4.0 * h**2)
    return out


def face_diff(field: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Difference across each face along ``axis``; output is one shorter there."""
    lo = [slice(None)] * field.ndim
    hi = [slice(None)] * field.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    return (field[tuple(hi)] - field[tuple(lo)]) / h


def face_mean(field: np.ndarray, axis: int) -> np.ndarray:
    """Arithmetic mean of the two nodes adjacent to each face along ``axis``."""
    lo = [slice(None)] * field.ndim
    hi = [slice(None)] * field.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (field[tuple(hi)] + field[tuple(lo)])


def zero_shell(field: np.ndarray, depth: int = 2) -> np.ndarray:
    """Zero the outermost ``depth`` planes of a (N, N, N[, ...]) array in place."""
    for axis in range(3):
        idx = [slice(None)] * field.ndim
        idx[axis] = slice(0, depth)
        field[tuple(idx)] = 0.0
        idx[axis] = slice(-depth, None)
        field[tuple(idx)] = 0.0
    return field
