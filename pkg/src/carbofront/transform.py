"""Front-fixing change of variables y = x / s(t).

Maps profiles between the moving physical interval [0, s] and the fixed unit
interval [0, 1] sampled on a uniform grid.  Piecewise-linear interpolation is
used on both sides, so round trips are exact at node images.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidParameterError

__all__ = ["FixedGrid", "to_fixed", "to_physical"]


@dataclass(frozen=True)
class FixedGrid:
    """Uniform grid y_i = i / (n - 1) on [0, 1], n >= 3."""

    n_nodes: int

    def __post_init__(self):
        if self.n_nodes < 3:
            raise InvalidParameterError(f"grid needs at least 3 nodes, got {self.n_nodes}")

    @cached_property
    def nodes(self) -> np.ndarray:
        y = np.linspace(0.0, 1.0, self.n_nodes)
        y.setflags(write=False)
        return y

    @property
    def dy(self) -> float:
        return 1.0 / (self.n_nodes - 1)


def to_fixed(xs: np.ndarray, values: np.ndarray, s: float, grid: FixedGrid) -> np.ndarray:
    """Sample a physical profile given at points ``xs`` in [0, s] onto the unit grid.

    Output node i carries profile(s * y_i), interpolating piecewise linearly
    between the supplied samples (constant beyond their range).
    """
    if not s > 0.0:
        raise InvalidParameterError(f"front position must be positive, got s={s}")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    values = np.atleast_1d(np.asarray(values, dtype=float))
    return np.interp(s * grid.nodes, xs, values)


def to_physical(field: np.ndarray, s: float, x, grid: FixedGrid):
    """Evaluate a unit-grid field at physical position(s) x in [0, s]."""
    if not s > 0.0:
        raise InvalidParameterError(f"front position must be positive, got s={s}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > s * (1.0 + 1e-12)):
        raise InvalidParameterError(f"position outside the carbonated region [0, {s}]")
    out = np.interp(x / s, grid.nodes, field)
    return float(out) if np.ndim(x) == 0 else out
