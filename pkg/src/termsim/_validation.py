"""Input validation shared by the estimator wrappers."""
from __future__ import annotations

import numpy as np

from .exceptions import ValidationError
from .numeric import WORD_BITS, precision_range


def check_int_array(X, name: str = "X", precision: int = WORD_BITS, ndim=None) -> np.ndarray:
    """Return ``X`` as an ``int64`` array, rejecting non-integral or out-of-range data."""
    arr = np.asarray(getattr(X, "data", X))
    if arr.dtype == object or not (np.issubdtype(arr.dtype, np.integer)
                                   or np.issubdtype(arr.dtype, np.floating)
                                   or arr.dtype == bool):
        raise ValidationError(f"{name} must be numeric, got dtype {arr.dtype}")
    if np.issubdtype(arr.dtype, np.floating):
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise ValidationError(f"{name} must hold integer values")
    arr = arr.astype(np.int64)
    if ndim is not None and arr.ndim not in np.atleast_1d(ndim):
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    lo, hi = precision_range(precision)
    if arr.size and (arr.min() < lo or arr.max() > hi):
        raise ValidationError(f"{name} has values outside the {precision}-bit range [{lo}, {hi}]")
    return arr


def check_pairs(X, name: str = "X") -> tuple[np.ndarray, np.ndarray]:
    """Split an ``(n, 2)`` array of (activation, weight) pairs."""
    arr = check_int_array(X, name, ndim=2)
    if arr.shape[1] != 2:
        raise ValidationError(f"{name} must have two columns (activation, weight), got {arr.shape}")
    return arr[:, 0], arr[:, 1]


def required_precision(arr: np.ndarray) -> int:
    """Smallest two's complement width holding every element (at least 1)."""
    if not arr.size:
        return 1
    lo, hi = int(arr.min()), int(arr.max())
    bits = max(lo.bit_length() if lo >= 0 else (-lo - 1).bit_length(),
               hi.bit_length() if hi >= 0 else (-hi - 1).bit_length())
    return min(WORD_BITS, bits + 1)
