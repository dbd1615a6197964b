"""Clearance training data: generation from the exact oracle, binary IO.

Records pair a configuration (float64) with its full exact clearance field
(float32). The header binds each file to one robot and one grid so stale
data cannot silently train a mismatched network.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .oracle import exact_clearance_field
from .robot import RobotModel, random_configuration
from .voxelgrid import VoxelGrid

_MAGIC = b"CFD1"
_VERSION = 1


@dataclass
class ClearanceDataset:
    X: np.ndarray            # (n, N) float64 configurations
    Y: np.ndarray            # (n, V) float32 exact clearances
    grid: VoxelGrid
    robot_signature: str

    def __len__(self) -> int:
        return self.X.shape[0]

    def split(self, n_train: int, n_val: int, n_test: int):
        """Deterministic contiguous split; sizes must not exceed the data."""
        if n_train + n_val + n_test > len(self):
            raise ValueError("split sizes exceed dataset size")
        a, b = n_train, n_train + n_val
        c = b + n_test
        return ((self.X[:a], self.Y[:a]), (self.X[a:b], self.Y[a:b]),
                (self.X[b:c], self.Y[b:c]))


def generate_dataset(model: RobotModel, grid: VoxelGrid, n: int,
                     seed: int = 0, log=None) -> ClearanceDataset:
    """Sample n uniform configurations and compute their exact fields."""
    rng = np.random.default_rng(seed)
    X = np.empty((n, model.dof))
    Y = np.empty((n, grid.V), dtype=np.float32)
    for i in range(n):
        q = random_configuration(model, rng)
        X[i] = q
        Y[i] = exact_clearance_field(model, q, grid)
        if log and (i + 1) % 2000 == 0:
            log(f"generated {i + 1}/{n} clearance fields")
    return ClearanceDataset(X=X, Y=Y, grid=grid, robot_signature=model.signature())


def save_dataset(path, ds: ClearanceDataset) -> None:
    n, n_joints = ds.X.shape
    v = ds.Y.shape[1]
    dims = list(ds.grid.dims) + [1] * (3 - ds.grid.ndim)
    origin = list(ds.grid.origin) + [0.0] * (3 - ds.grid.ndim)
    head = struct.pack("<4sIIII", _MAGIC, _VERSION, n, n_joints, v)
    geo = struct.pack("<HHHHd3d", ds.grid.ndim, *dims, ds.grid.edge, *origin)
    rsig = ds.robot_signature.encode().ljust(16, b"\0")[:16]
    rec = np.dtype([("q", "<f8", (n_joints,)), ("c", "<f4", (v,))])
    body = np.empty(n, dtype=rec)
    body["q"] = ds.X
    body["c"] = ds.Y
    with open(path, "wb") as f:
        f.write(head)
        f.write(geo)
        f.write(rsig)
        body.tofile(f)


def load_dataset(path) -> ClearanceDataset:
    with open(path, "rb") as f:
        head = f.read(20)
        if len(head) < 20 or head[:4] != _MAGIC:
            raise ValueError("not a clearance dataset file")
        _, version, n, n_joints, v = struct.unpack("<4sIIII", head)
        if version != _VERSION:
            raise ValueError(f"unsupported dataset version {version}")
        geo = f.read(struct.calcsize("<HHHHd3d"))
        ndim, d0, d1, d2, edge, o0, o1, o2 = struct.unpack("<HHHHd3d", geo)
        rsig = f.read(16).rstrip(b"\0").decode()
        rec = np.dtype([("q", "<f8", (n_joints,)), ("c", "<f4", (v,))])
        body = np.fromfile(f, dtype=rec)
    if len(body) != n:
        raise ValueError("dataset file truncated")
    dims = (d0, d1, d2)[:ndim]
    origin = (o0, o1, o2)[:ndim]
    grid = VoxelGrid(origin=origin, edge=edge, dims=dims)
    if grid.V != v:
        raise ValueError("dataset grid geometry inconsistent with V")
    return ClearanceDataset(X=body["q"].copy(), Y=body["c"].copy(), grid=grid,
                            robot_signature=rsig)
