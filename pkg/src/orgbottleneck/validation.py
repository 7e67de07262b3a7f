"""Input validation helpers for probability vectors and matrices.

All helpers accept array-likes, coerce to float64, and return read-only
arrays. Normalization drift up to ``NORMALIZATION_ATOL`` is silently
corrected by renormalizing; anything larger is rejected so that caller
bugs are not masked.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError, ValidationError

# Absolute tolerance on sums that must equal 1.
NORMALIZATION_ATOL = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def check_probability_vector(values, *, name: str = "probs") -> np.ndarray:
    """Validate a pmf: 1-D, non-negative, sums to 1 within tolerance."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError(f"{name} must contain at least one entry")
    if not np.all(np.isfinite(arr)):
        i = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise ValidationError(f"{name}[{i}] is not finite ({arr[i]})")
    neg = np.flatnonzero(arr < 0.0)
    if neg.size:
        i = int(neg[0])
        raise ValidationError(f"{name}[{i}] is negative ({arr[i]})")
    total = float(arr.sum())
    if abs(total - 1.0) > NORMALIZATION_ATOL:
        raise ValidationError(
            f"{name} sums to {total!r}, expected 1 within {NORMALIZATION_ATOL}"
        )
    return _freeze(arr / total)


def check_joint_matrix(values, *, name: str = "joint") -> np.ndarray:
    """Validate a joint pmf matrix: 2-D, non-negative, total mass 1 within tolerance."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError(f"{name} must have at least one cell")
    if not np.all(np.isfinite(arr)):
        i, k = np.argwhere(~np.isfinite(arr))[0]
        raise ValidationError(f"{name}[{i},{k}] is not finite ({arr[i, k]})")
    neg = np.argwhere(arr < 0.0)
    if neg.size:
        i, k = neg[0]
        raise ValidationError(f"{name}[{i},{k}] is negative ({arr[i, k]})")
    total = float(arr.sum())
    if abs(total - 1.0) > NORMALIZATION_ATOL:
        raise ValidationError(
            f"{name} sums to {total!r}, expected 1 within {NORMALIZATION_ATOL}"
        )
    return _freeze(arr / total)


def check_transition_matrix(values, *, name: str = "channel") -> np.ndarray:
    """Validate a row-stochastic matrix: every row is a pmf within tolerance."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError(f"{name} must have at least one cell")
    if not np.all(np.isfinite(arr)):
        i, k = np.argwhere(~np.isfinite(arr))[0]
        raise ValidationError(f"{name}[{i},{k}] is not finite ({arr[i, k]})")
    neg = np.argwhere(arr < 0.0)
    if neg.size:
        i, k = neg[0]
        raise ValidationError(f"{name}[{i},{k}] is negative ({arr[i, k]})")
    sums = arr.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > NORMALIZATION_ATOL)
    if bad.size:
        r = int(bad[0])
        raise ValidationError(
            f"{name} row {r} sums to {sums[r]!r}, expected 1 within {NORMALIZATION_ATOL}"
        )
    return _freeze(arr / sums[:, None])
