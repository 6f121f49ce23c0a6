"""Input validation helpers shared by the estimators and the functional API."""

import numbers

import numpy as np


def check_image(image, name="image", copy=False):
    """Return ``image`` as a finite 2-D float64 array.

    Raises ``ValueError`` for wrong dimensionality, empty extent or
    non-finite values.
    """
    arr = np.array(image, dtype=np.float64, copy=copy) if copy else np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} has zero extent: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf values")
    return arr


def check_dual_field(field, shape=None, name="dual field"):
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 2:
        raise ValueError(f"{name} must have shape (2, H, W), got {arr.shape}")
    if shape is not None and arr.shape[1:] != tuple(shape):
        raise ValueError(f"{name} extent {arr.shape[1:]} does not match image extent {tuple(shape)}")
    return arr


def check_mask(mask, name="mask"):
    """Binary 2-D mask as a float64 array with values in {0, 1}."""
    arr = check_image(mask, name=name)
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} must be binary (values 0 or 1)")
    return arr


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return float(value)
