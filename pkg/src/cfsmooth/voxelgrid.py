"""Workspace discretization: voxel grids, occupancy vectors, point clouds."""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

_OCC_MAGIC = b"OCC1"
_OCC_HEADER = struct.Struct("<4sIH3H")   # magic, V, ndim, dims (unused dims = 1)


@dataclass(frozen=True)
class VoxelGrid:
    """Axis-aligned grid of square/cubic cells covering the workspace.

    Cell indices are C-order raveled integer coordinates; every index maps to
    exactly one coordinate tuple and back.
    """

    origin: np.ndarray
    edge: float
    dims: tuple

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64)
        origin.flags.writeable = False
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "edge", float(self.edge))
        if self.edge <= 0:
            raise ValueError("edge must be positive")
        if len(self.dims) != len(origin) or len(self.dims) not in (2, 3):
            raise ValueError("dims and origin must both be 2D or 3D")
        if any(d < 1 for d in self.dims):
            raise ValueError("dims must be at least 1 per axis")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def V(self) -> int:
        return int(np.prod(self.dims))

    def coords_of(self, index: int) -> tuple:
        if not 0 <= index < self.V:
            raise IndexError(f"voxel index {index} out of range [0, {self.V})")
        return tuple(int(c) for c in np.unravel_index(index, self.dims))

    def index_of(self, coords) -> int:
        return int(np.ravel_multi_index(tuple(int(c) for c in coords), self.dims))

    def voxel_center(self, index: int) -> np.ndarray:
        coords = np.array(self.coords_of(index), dtype=np.float64)
        return self.origin + (coords + 0.5) * self.edge

    def centers(self) -> np.ndarray:
        """(V, ndim) centers in index order."""
        axes = [np.arange(d, dtype=np.float64) for d in self.dims]
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=1)
        return self.origin + (coords + 0.5) * self.edge

    def cell_bounds(self, indices) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners of the given cells: two (K, ndim) arrays."""
        indices = np.asarray(indices, dtype=np.int64)
        coords = np.stack(np.unravel_index(indices, self.dims), axis=-1).astype(np.float64)
        lo = self.origin + coords * self.edge
        return lo, lo + self.edge

    def upper(self) -> np.ndarray:
        return self.origin + self.edge * np.asarray(self.dims, dtype=np.float64)

    def signature(self) -> str:
        payload = {"origin": self.origin.tolist(), "edge": self.edge, "dims": list(self.dims)}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {"origin": self.origin.tolist(), "edge": self.edge, "dims": list(self.dims)}

    @classmethod
    def from_dict(cls, d: dict) -> "VoxelGrid":
        return cls(origin=d["origin"], edge=d["edge"], dims=tuple(d["dims"]))


class OccupancyVector:
    """Immutable snapshot of which voxels currently hold an obstacle."""

    __slots__ = ("bits", "dims", "_occupied")

    def __init__(self, bits, dims):
        bits = np.asarray(bits, dtype=bool).ravel()
        dims = tuple(int(d) for d in dims)
        if len(bits) != int(np.prod(dims)):
            raise ValueError("bit count does not match grid dims")
        bits.flags.writeable = False
        self.bits = bits
        self.dims = dims
        self._occupied = None

    @classmethod
    def empty(cls, grid: VoxelGrid) -> "OccupancyVector":
        return cls(np.zeros(grid.V, dtype=bool), grid.dims)

    @property
    def V(self) -> int:
        return len(self.bits)

    def count(self) -> int:
        return int(self.bits.sum())

    def occupied_indices(self) -> np.ndarray:
        if self._occupied is None:
            self._occupied = np.flatnonzero(self.bits)
        return self._occupied

    def __or__(self, other: "OccupancyVector") -> "OccupancyVector":
        if self.dims != other.dims:
            raise ValueError("occupancy dims differ")
        return OccupancyVector(self.bits | other.bits, self.dims)

    def __eq__(self, other):
        return isinstance(other, OccupancyVector) and self.dims == other.dims \
            and bool(np.array_equal(self.bits, other.bits))

    def to_bytes(self) -> bytes:
        dims3 = list(self.dims) + [1] * (3 - len(self.dims))
        header = _OCC_HEADER.pack(_OCC_MAGIC, self.V, len(self.dims), *dims3)
        return header + np.packbits(self.bits).tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "OccupancyVector":
        if len(blob) < _OCC_HEADER.size:
            raise ValueError("occupancy blob too short")
        magic, v, ndim, d0, d1, d2 = _OCC_HEADER.unpack(blob[:_OCC_HEADER.size])
        if magic != _OCC_MAGIC:
            raise ValueError("bad occupancy magic")
        dims = (d0, d1, d2)[:ndim]
        if int(np.prod(dims)) != v:
            raise ValueError("occupancy header dims inconsistent with V")
        body = np.frombuffer(blob[_OCC_HEADER.size:], dtype=np.uint8)
        if len(body) != (v + 7) // 8:
            raise ValueError("occupancy payload truncated")
        bits = np.unpackbits(body)[:v].astype(bool)
        return cls(bits, dims)


@dataclass(frozen=True)
class Box:
    center: np.ndarray
    half: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "half", np.asarray(self.half, dtype=np.float64))
        if not (np.all(np.isfinite(self.center)) and np.all(np.isfinite(self.half))):
            raise ValueError("box must be finite")

    def contains(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.all(np.abs(points - self.center) <= self.half, axis=1)

    def moved_to(self, center) -> "Box":
        return Box(center=center, half=self.half)

    def to_dict(self) -> dict:
        return {"kind": "box", "center": self.center.tolist(), "half": self.half.tolist()}


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "radius", float(self.radius))
        if not (np.all(np.isfinite(self.center)) and np.isfinite(self.radius)):
            raise ValueError("sphere must be finite")

    def contains(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.linalg.norm(points - self.center, axis=1) <= self.radius

    def moved_to(self, center) -> "Sphere":
        return Sphere(center=center, radius=self.radius)

    def to_dict(self) -> dict:
        return {"kind": "sphere", "center": self.center.tolist(), "radius": self.radius}


def shape_from_dict(d: dict):
    if d["kind"] == "box":
        return Box(center=d["center"], half=d["half"])
    if d["kind"] == "sphere":
        return Sphere(center=d["center"], radius=d["radius"])
    raise ValueError(f"unknown shape kind {d['kind']!r}")


def occupancy_from_points(grid: VoxelGrid, points, count_threshold: int) -> OccupancyVector:
    """Mark cells holding at least ``count_threshold`` cloud points.

    Points outside the grid are ignored. Used to suppress sensor noise when
    converting a raw point cloud into an obstacle snapshot.
    """
    if count_threshold < 1:
        raise ValueError("count_threshold must be at least 1")
    points = np.asarray(points, dtype=np.float64)
    bits = np.zeros(grid.V, dtype=bool)
    if points.size == 0:
        return OccupancyVector(bits, grid.dims)
    if not np.all(np.isfinite(points)):
        raise ValueError("point cloud must be finite")
    coords = np.floor((points - grid.origin) / grid.edge).astype(np.int64)
    inside = np.all((coords >= 0) & (coords < np.asarray(grid.dims)), axis=1)
    coords = coords[inside]
    if len(coords) == 0:
        return OccupancyVector(bits, grid.dims)
    flat = np.ravel_multi_index(tuple(coords.T), grid.dims)
    counts = np.bincount(flat, minlength=grid.V)
    bits = counts >= count_threshold
    return OccupancyVector(bits, grid.dims)


def occupancy_from_shapes(grid: VoxelGrid, shapes) -> OccupancyVector:
    """Mark cells whose center lies inside any of the given shapes."""
    bits = np.zeros(grid.V, dtype=bool)
    if shapes:
        centers = grid.centers()
        for shape in shapes:
            bits |= shape.contains(centers)
    return OccupancyVector(bits, grid.dims)


def load_point_cloud(path) -> np.ndarray:
    """Plain-text cloud: one point per line, comma or whitespace separated."""
    with open(path) as f:
        text = f.read()
    delimiter = "," if "," in text else None
    pts = np.loadtxt(text.splitlines(), delimiter=delimiter, ndmin=2)
    return pts


def save_point_cloud(path, points) -> None:
    np.savetxt(path, np.asarray(points, dtype=np.float64), delimiter=",", fmt="%.9g")
