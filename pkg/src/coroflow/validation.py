"""Shared input-validation helpers.

Small, reusable checks used at public entry points. They normalise inputs
(array conversion, dtype coercion) and raise taxonomy errors with messages
that name the offending argument.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .errors import (
    AnisotropicSpacing,
    EmptyMask,
    InconsistentInputs,
    NonPositiveDiameter,
)


def check_mask(grid: np.ndarray, name: str = "mask") -> np.ndarray:
    """Coerce a lumen mask to a 2-D boolean array with >= 1 foreground pixel."""
    arr = np.asarray(grid)
    if arr.ndim != 2:
        raise InconsistentInputs(f"{name} must be 2-D, got shape {arr.shape}")
    arr = arr.astype(bool)
    if not arr.any():
        raise EmptyMask(f"{name} has no foreground pixels")
    return arr


def check_spacing(spacing, name: str = "spacing") -> float:
    """Validate isotropic pixel spacing in mm/px and return it as a float.

    Accepts a scalar or a 2-sequence; a 2-sequence must have equal entries.
    """
    arr = np.atleast_1d(np.asarray(spacing, dtype=float))
    if arr.size == 2 and arr[0] != arr[1]:
        raise AnisotropicSpacing(
            f"{name}: axes differ ({arr[0]!r} vs {arr[1]!r}); only isotropic pixels are supported"
        )
    value = float(arr.flat[0])
    if not np.isfinite(value) or value <= 0.0:
        raise InconsistentInputs(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_positive(value: float, name: str, exc=InconsistentInputs) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise exc(f"{name} must be > 0, got {value!r}")
    return value


def check_diameters(samples: Sequence[float], name: str = "diameters") -> np.ndarray:
    """Validate a diameter profile: 1-D, finite, strictly positive."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InconsistentInputs(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise NonPositiveDiameter(f"{name} contains non-finite samples")
    if np.any(arr <= 0.0):
        bad = int(np.argmax(arr <= 0.0))
        raise NonPositiveDiameter(f"{name}[{bad}] = {arr[bad]!r} is not > 0")
    return arr


def check_same_grid(a: np.ndarray, b: np.ndarray, step_a: float, step_b: float,
                    names: str = "profiles") -> None:
    """Two profiles being compared must share length and sampling step."""
    if len(a) != len(b):
        raise InconsistentInputs(f"{names} differ in length ({len(a)} vs {len(b)})")
    if step_a != step_b:
        raise InconsistentInputs(f"{names} differ in step ({step_a} vs {step_b})")


def check_probability(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise InconsistentInputs(f"{name} must lie strictly inside (0, 1), got {value!r}")
    return value


def as_float_array(values, name: str, ndim: int = 1) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != ndim:
        raise InconsistentInputs(f"{name} must be {ndim}-D, got shape {arr.shape}")
    return arr


def optional_positive(value: Optional[float], name: str, exc=InconsistentInputs) -> Optional[float]:
    if value is None:
        return None
    return check_positive(value, name, exc=exc)
