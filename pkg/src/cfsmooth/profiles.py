"""Desk-scale experiment profiles: robots, grids, scenes, cached weights.

The planar desk profile is deliberately chunky: link radii are a large
fraction of link lengths so that the one-voxel-edge collision band stays
thin relative to the robot's own footprint. Training and benchmarks all run
against this profile; a 3D profile exercises the same code paths in tests.
"""

from __future__ import annotations

import hashlib
import time
import json
from pathlib import Path

import numpy as np

from .clearance_net import ClearanceNet, TrainConfig, init_output_layer, train
from .dataset import ClearanceDataset, generate_dataset, load_dataset, save_dataset
from .oracle import config_in_collision
from .robot import RobotModel, random_configuration
from .scene import DynamicShape, Scene
from .voxelgrid import Box, VoxelGrid

DESK_TRAIN = 20_000
DESK_VAL = 4_000
DESK_TEST = 4_000
DESK_DATA_SEED = 2024
DESK_ENCODING_LEVELS = 3
DESK_HIDDEN = (256, 256, 256, 256)
DESK_SKIP_LAYER = 2
DESK_EPOCHS = 50


def desk_robot() -> RobotModel:
    return RobotModel(
        link_lengths=[0.28, 0.24, 0.20],
        link_radii=[0.18, 0.15, 0.12],
        joint_lower=[-2.8, -2.8, -2.8],
        joint_upper=[2.8, 2.8, 2.8],
        vel_max=[1.0, 1.0, 1.0],
        acc_max=[2.0, 2.0, 2.0],
    )


def desk_grid() -> VoxelGrid:
    return VoxelGrid(origin=[-0.45, -0.45], edge=0.9 / 32, dims=(32, 32))


def desk_threshold(grid: VoxelGrid | None = None) -> float:
    """Smoothing threshold for the desk profile: one voxel edge.

    Clearances are measured to cell centers, so the threshold must cover at
    least the cell half-diagonal for thresholded inference to stay
    conservative; the 20 mm default of SmoothingConfig is too small for
    cells this large.
    """
    return (grid or desk_grid()).edge


def desk_train_config(epochs: int = DESK_EPOCHS, seed: int = 7) -> TrainConfig:
    return TrainConfig(learning_rate=1e-3, batch_size=50, epochs=epochs,
                       dropout_p=0.1, seed=seed)


def robot_3d() -> RobotModel:
    return RobotModel(
        link_lengths=[0.3, 0.25, 0.25, 0.2, 0.15, 0.1],
        link_radii=[0.06, 0.06, 0.05, 0.05, 0.04, 0.04],
        joint_lower=[-2.8] * 6,
        joint_upper=[2.8] * 6,
        vel_max=[1.5] * 6,
        acc_max=[3.0] * 6,
        workspace_dim=3,
    )


def grid_3d() -> VoxelGrid:
    return VoxelGrid(origin=[-0.6, -0.6, -0.6], edge=1.2 / 12, dims=(12, 12, 12))


# -- scenes ----------------------------------------------------------------

def _find_free_config(model, grid, occupancy, rng, tries=200):
    for _ in range(tries):
        q = random_configuration(model, rng)
        if not config_in_collision(model, q, grid, occupancy):
            return q
    raise RuntimeError("could not sample a collision-free configuration")


def desk_scene(name="desk", obstacles=(), dynamic=(), configs=None) -> Scene:
    return Scene(name=name, robot=desk_robot(), grid=desk_grid(),
                 static_shapes=list(obstacles), dynamic_shapes=list(dynamic),
                 configs=dict(configs or {}))


def desk_scene_corpus() -> list:
    """Hand-built static scenes for benchmarking, obstacles near the rim."""
    scenes = []
    scenes.append(desk_scene(
        "open",
        obstacles=[],
        configs={"A": [2.0, 0.6, 0.4], "B": [-1.2, -0.5, -0.3]},
    ))
    scenes.append(desk_scene(
        "post",
        obstacles=[Box(center=[0.0, 0.38], half=[0.05, 0.05])],
        configs={"A": [-1.67, 2.73, 1.45], "B": [-0.64, -2.69, -2.34]},
    ))
    scenes.append(desk_scene(
        "two-posts",
        obstacles=[Box(center=[-0.34, 0.3], half=[0.05, 0.06]),
                   Box(center=[0.36, -0.28], half=[0.06, 0.05])],
        configs={"A": [-2.67, -2.43, 2.6], "B": [-2.03, 2.71, -2.78]},
    ))
    scenes.append(desk_scene(
        "corner-block",
        obstacles=[Box(center=[0.36, 0.36], half=[0.08, 0.08])],
        configs={"A": [-1.25, -1.9, 2.63], "B": [-0.77, 1.46, -2.65]},
    ))
    return scenes


def random_desk_scene(seed: int):
    """Randomized scene plus endpoints for property-style acceptance runs."""
    rng = np.random.default_rng(seed)
    model = desk_robot()
    grid = desk_grid()
    n_obs = int(rng.integers(1, 4))
    obstacles = []
    for _ in range(n_obs):
        ang = rng.uniform(0, 2 * np.pi)
        rad = rng.uniform(0.30, 0.42)
        center = rad * np.array([np.cos(ang), np.sin(ang)])
        half = rng.uniform(0.03, 0.07, size=2)
        obstacles.append(Box(center=center, half=half))
    scene = desk_scene(f"random-{seed}", obstacles=obstacles)
    occ = scene.static_occupancy()
    q_start = _find_free_config(model, grid, occ, rng)
    q_goal = _find_free_config(model, grid, occ, rng)
    return scene, q_start, q_goal, rng


def service_scene() -> Scene:
    """Looping demo scene with one scripted crossing obstacle."""
    dyn = DynamicShape(
        shape_id="crossing",
        shape=Box(center=[0.38, -0.5], half=[0.05, 0.05]),
        keyframes=[(0.0, [0.38, -0.60]), (4.0, [0.38, 0.60]),
                   (8.0, [0.38, -0.60])],
    )
    return desk_scene(
        "service-loop",
        obstacles=[Box(center=[-0.38, 0.38], half=[0.05, 0.05])],
        dynamic=[dyn],
        configs={"A": [1.69, 0.45, 0.25], "B": [-0.4, -0.6, -0.3]},
    )


def crossing_scene() -> Scene:
    """Open scene whose scripted box cuts the A-to-B sweep mid-transit.

    The box enters the grid from above after the robot departs, crosses the
    band the arm sweeps through, and exits below, leaving an alternate route
    open the whole time.
    """
    dyn = DynamicShape(
        shape_id="crossing",
        shape=Box(center=[0.4, 1.2], half=[0.05, 0.05]),
        keyframes=[(0.0, [0.4, 1.2]), (0.5, [0.4, 0.55]),
                   (0.9, [0.4, -0.55]), (60.0, [0.4, -1.2])],
    )
    return desk_scene(
        "crossing",
        dynamic=[dyn],
        configs={"A": [1.69, 0.45, 0.25], "B": [-0.4, -0.6, -0.3]},
    )


# -- trained-weights cache -------------------------------------------------

def desk_cache_key(train_cfg: TrainConfig) -> str:
    payload = {
        "robot": desk_robot().signature(),
        "grid": desk_grid().signature(),
        "train": DESK_TRAIN, "val": DESK_VAL, "test": DESK_TEST,
        "data_seed": DESK_DATA_SEED,
        "levels": DESK_ENCODING_LEVELS,
        "hidden": list(DESK_HIDDEN),
        "skip": DESK_SKIP_LAYER,
        "cfg": vars(train_cfg),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def desk_dataset(cache_dir, log=None) -> ClearanceDataset:
    """Generate (or load) the full desk dataset: train + val + test."""
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    n = DESK_TRAIN + DESK_VAL + DESK_TEST
    name = f"desk-data-{desk_robot().signature()}-{desk_grid().signature()}-{n}-{DESK_DATA_SEED}.cfd"
    path = cache_dir / name
    if path.exists():
        return load_dataset(path)
    ds = generate_dataset(desk_robot(), desk_grid(), n, seed=DESK_DATA_SEED, log=log)
    save_dataset(path, ds)
    return ds


def desk_weights(cache_dir, train_cfg: TrainConfig | None = None, log=None):
    """Train (or load) the desk network; returns (net, history).

    Deterministic given the configuration, so the cache key fully identifies
    the artifact.
    """
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    cfg = train_cfg or desk_train_config()
    key = desk_cache_key(cfg)
    wpath = cache_dir / f"desk-{key}.cfn"
    hpath = cache_dir / f"desk-{key}.history.json"
    if wpath.exists() and hpath.exists():
        net = ClearanceNet.load(wpath, expect_grid=desk_grid().signature(),
                                expect_robot=desk_robot().signature())
        with open(hpath) as f:
            history = json.load(f)
        return net, history

    ds = desk_dataset(cache_dir, log=log)
    (Xtr, Ytr), (Xval, Yval), _ = ds.split(DESK_TRAIN, DESK_VAL, DESK_TEST)
    robot = desk_robot()
    net = ClearanceNet(
        n_joints=robot.dof, n_out=desk_grid().V,
        levels=DESK_ENCODING_LEVELS, hidden=DESK_HIDDEN,
        skip_layer=DESK_SKIP_LAYER, dropout_p=cfg.dropout_p,
        grid_signature=desk_grid().signature(),
        robot_signature=robot.signature(),
        input_lo=robot.joint_lower, input_hi=robot.joint_upper,
        dtype=np.float32, rng=np.random.default_rng(cfg.seed),
    )
    init_output_layer(net, Ytr)
    initial_val = float(np.mean(np.abs(net.infer(Xval) - Yval)))
    t0 = time.perf_counter()
    history = train(net, Xtr, Ytr, Xval, Yval, cfg, log=log)
    history["train_seconds"] = time.perf_counter() - t0
    history["initial_val"] = initial_val
    net.save(wpath)
    with open(hpath, "w") as f:
        json.dump(history, f)
    return net, history
