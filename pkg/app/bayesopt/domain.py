"""Axis-aligned search boxes."""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from app.core.exceptions import InputError


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lower_1, upper_1] x ... x [lower_d, upper_d]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    _lower: np.ndarray = field(init=False, repr=False, compare=False)
    _upper: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if not lower or len(lower) != len(upper):
            raise InputError("box bounds must be nonempty and of equal length")
        if any(lo >= hi for lo, hi in zip(lower, upper, strict=True)):
            raise InputError(f"box lower bounds must be below upper bounds: {lower} / {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "_lower", np.asarray(lower))
        object.__setattr__(self, "_upper", np.asarray(upper))

    @classmethod
    def cube(cls, low: float, high: float, dim: int) -> "Box":
        """Returns the hypercube ``[low, high]^dim``."""
        return cls(lower=(low,) * dim, upper=(high,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lower_array(self) -> np.ndarray:
        return self._lower.copy()

    @property
    def upper_array(self) -> np.ndarray:
        return self._upper.copy()

    @property
    def widths(self) -> np.ndarray:
        return self._upper - self._lower

    @property
    def bounds(self) -> list[tuple[float, float]]:
        """Bounds in the ``[(low, high), ...]`` layout expected by `scipy.optimize`."""
        return list(zip(self.lower, self.upper, strict=True))

    def contains(self, points: np.ndarray | Sequence[float], atol: float = 0.0) -> np.ndarray | bool:
        """Checks coordinatewise inclusive membership of one point or a batch of points."""
        points = np.asarray(points, dtype=float)
        inside = (points >= self._lower - atol) & (points <= self._upper + atol)
        if points.ndim == 1:
            return bool(inside.all())
        return inside.all(axis=1)

    def clip(self, points: np.ndarray) -> np.ndarray:
        return np.clip(points, self._lower, self._upper)

    def from_unit(self, unit_points: np.ndarray) -> np.ndarray:
        """Maps points of ``[0, 1]^d`` affinely onto the box."""
        return self._lower + np.asarray(unit_points, dtype=float) * self.widths

    def sample_uniform(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draws `size` independent uniform points from the box, shape ``(size, d)``."""
        return self.from_unit(rng.random((size, self.dim)))


__all__ = ["Box"]
