"""Input validation helpers shared across the package."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def check_series(x, name: str = "series", min_len: int = 1) -> np.ndarray:
    """Coerce to a 1-D float array of at least ``min_len`` entries."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size < min_len:
        raise ValueError(f"{name} must have at least {min_len} entries, "
                         f"got {arr.size}")
    return arr


def check_same_length(names: Sequence[str], *arrays: np.ndarray) -> None:
    lengths = {len(a) for a in arrays}
    if len(lengths) > 1:
        detail = ", ".join(f"{n}={len(a)}" for n, a in zip(names, arrays))
        raise ValueError(f"length mismatch: {detail}")


def check_event(X, name: str = "X"):
    """Require a CFEvent instance (used by the estimator API)."""
    from .trajectory import CFEvent

    if not isinstance(X, CFEvent):
        raise TypeError(f"{name} must be a CFEvent, got {type(X).__name__}; "
                        "build one with extract_cf_events or "
                        "CFEvent.from_trajectory")
    return X
