"""Small input-validation helpers used by the public entry points."""

import numpy as np

from .errors import InvalidArgumentError


def as_float_array(name, x, ndim=None, shape=None):
    """Coerce to a float64 ndarray and optionally pin ndim or shape.

    Entries must be finite. Raises InvalidArgumentError otherwise.
    """
    arr = np.asarray(x, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise InvalidArgumentError(f"{name}: expected ndim={ndim}, got {arr.ndim}")
    if shape is not None:
        for want, got in zip(shape, arr.shape):
            if want is not None and want != got:
                raise InvalidArgumentError(
                    f"{name}: expected shape {shape}, got {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name}: contains non-finite entries")
    return arr


def as_points(name, x, dim):
    """Normalize point input to shape (m, dim).

    1D callers may pass a flat array; 2D callers must pass (m, 2).
    """
    arr = np.asarray(x, dtype=float)
    if dim == 1:
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.ndim == 2 and arr.shape[1] == 1:
            arr = arr[:, 0]
        if arr.ndim != 1:
            raise InvalidArgumentError(f"{name}: expected flat 1D points, got shape {arr.shape}")
        return arr
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise InvalidArgumentError(f"{name}: expected shape (m, {dim}), got {arr.shape}")
    return arr


def check_positive_int(name, v, maximum=None):
    if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
        raise InvalidArgumentError(f"{name}: expected a positive integer, got {v!r}")
    if maximum is not None and v > maximum:
        raise InvalidArgumentError(f"{name}: must be <= {maximum}, got {v}")
    return int(v)


def check_positive_float(name, v):
    v = float(v)
    if not np.isfinite(v) or v <= 0.0:
        raise InvalidArgumentError(f"{name}: expected a positive finite value, got {v!r}")
    return v


def check_interval(name, interval):
    a, b = (float(interval[0]), float(interval[1]))
    if not (np.isfinite(a) and np.isfinite(b) and a < b):
        raise InvalidArgumentError(f"{name}: expected a < b, got ({a}, {b})")
    return (a, b)


def check_choice(name, value, options):
    if value not in options:
        raise InvalidArgumentError(f"{name}: expected one of {sorted(options)}, got {value!r}")
    return value
