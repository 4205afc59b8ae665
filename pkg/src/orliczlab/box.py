"""Axis-aligned boxes and point-array normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def as_points(x, dim: int) -> np.ndarray:
    """Return ``x`` as a float array of shape ``(m, dim)``.

    Scalars are accepted when ``dim == 1``; a flat array of length ``dim`` is a
    single point, and a flat array of any other length is read as ``m``
    one-dimensional points.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1, 1) if dim == 1 else np.full((1, dim), float(arr))
    if arr.ndim == 1:
        if dim == 1:
            return arr.reshape(-1, 1)
        if arr.shape[0] != dim:
            raise ValueError(f"point of length {arr.shape[0]} in dimension {dim}")
        return arr.reshape(1, dim)
    if arr.shape[-1] != dim:
        raise ValueError(f"points of dimension {arr.shape[-1]}, expected {dim}")
    return arr.reshape(-1, dim)


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValueError("box corners differ in dimension")
        if any(b < a for a, b in zip(lo, hi)):
            raise ValueError(f"empty box {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, dim: int = 2) -> "Box":
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lo_arr(self) -> np.ndarray:
        return np.array(self.lo)

    @property
    def hi_arr(self) -> np.ndarray:
        return np.array(self.hi)

    @property
    def widths(self) -> np.ndarray:
        return self.hi_arr - self.lo_arr

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    def contains(self, points, atol: float = 0.0) -> np.ndarray:
        pts = as_points(points, self.dim)
        return np.all((pts >= self.lo_arr - atol) & (pts <= self.hi_arr + atol), axis=1)

    def contains_box(self, other: "Box") -> bool:
        return all(a <= b for a, b in zip(self.lo, other.lo)) and all(
            a >= b for a, b in zip(self.hi, other.hi)
        )

    def project(self, points) -> np.ndarray:
        return np.clip(as_points(points, self.dim), self.lo_arr, self.hi_arr)

    def intersect(self, other: "Box") -> "Box | None":
        lo = np.maximum(self.lo_arr, other.lo_arr)
        hi = np.minimum(self.hi_arr, other.hi_arr)
        if np.any(hi <= lo):
            return None
        return Box(tuple(lo), tuple(hi))

    def grid(self, per_axis: int) -> np.ndarray:
        """Tensor grid including the box faces, shape ``(per_axis**dim, dim)``."""
        axes = [np.linspace(a, b, per_axis) for a, b in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell_centers(self, per_axis: int) -> tuple[np.ndarray, np.ndarray]:
        """Midpoints of a regular ``per_axis**dim`` partition and the cell widths."""
        h = self.widths / per_axis
        axes = [a + (np.arange(per_axis) + 0.5) * w for a, w in zip(self.lo, h)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1), h

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}
