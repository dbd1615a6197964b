"""Command-line entry points: data generation, training, evaluation,
scene tools, benchmarks, and the realtime service."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import profiles
from .bench import (corpus_tasks, random_tasks, rows_to_csv, run_bench,
                    stats_first_candidate, summarize)
from .clearance_net import (ClearanceNet, TrainConfig, evaluate_classifier,
                            init_output_layer, train)
from .dataset import generate_dataset, load_dataset, save_dataset
from .oracle import ExactClearanceModel
from .planner import plan
from .scene import Scene
from .service import LoopConfig, build_app
from .smoother import SmoothingConfig, smooth


@click.group()
def main():
    """Trajectory smoothing with batched learned clearance inference."""


# -- cfn -------------------------------------------------------------------

@main.group()
def cfn():
    """Clearance network: data generation, training, evaluation."""


@cfn.command("gen-data")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--samples", default=profiles.DESK_TRAIN + profiles.DESK_VAL + profiles.DESK_TEST,
              show_default=True)
@click.option("--seed", default=profiles.DESK_DATA_SEED, show_default=True)
@click.option("--scene", "scene_path", type=click.Path(exists=True), default=None,
              help="Scene file providing robot and grid (default: desk profile).")
def cfn_gen_data(out, samples, seed, scene_path):
    """Sample configurations and store exact clearance fields."""
    robot, grid = _robot_grid(scene_path)
    ds = generate_dataset(robot, grid, samples, seed=seed, log=click.echo)
    save_dataset(out, ds)
    click.echo(f"wrote {samples} records to {out}")


def _robot_grid(scene_path):
    if scene_path:
        scene = Scene.load(scene_path)
        return scene.robot, scene.grid
    return profiles.desk_robot(), profiles.desk_grid()


@cfn.command("train")
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--train-size", default=profiles.DESK_TRAIN, show_default=True)
@click.option("--val-size", default=profiles.DESK_VAL, show_default=True)
@click.option("--test-size", default=profiles.DESK_TEST, show_default=True)
@click.option("--learning-rate", default=1e-3, show_default=True)
@click.option("--batch-size", default=50, show_default=True)
@click.option("--epochs", default=profiles.DESK_EPOCHS, show_default=True)
@click.option("--adam-beta1", default=0.9, show_default=True)
@click.option("--adam-beta2", default=0.999, show_default=True)
@click.option("--adam-epsilon", default=1e-8, show_default=True)
@click.option("--dropout", default=0.1, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--levels", default=profiles.DESK_ENCODING_LEVELS, show_default=True)
@click.option("--hidden", default=",".join(str(h) for h in profiles.DESK_HIDDEN),
              show_default=True, help="Comma-separated hidden layer widths.")
@click.option("--skip-layer", default=profiles.DESK_SKIP_LAYER, show_default=True)
@click.option("--scene", "scene_path", type=click.Path(exists=True), default=None)
@click.option("--history-out", type=click.Path(dir_okay=False), default=None)
def cfn_train(data, out, train_size, val_size, test_size, learning_rate,
              batch_size, epochs, adam_beta1, adam_beta2, adam_epsilon,
              dropout, seed, levels, hidden, skip_layer, scene_path, history_out):
    """Train the clearance network on a generated dataset."""
    robot, grid = _robot_grid(scene_path)
    ds = load_dataset(data)
    if ds.robot_signature != robot.signature():
        raise click.ClickException("dataset was generated for a different robot")
    if ds.grid.signature() != grid.signature():
        raise click.ClickException("dataset was generated for a different grid")
    (Xtr, Ytr), (Xval, Yval), _ = ds.split(train_size, val_size, test_size)
    cfg = TrainConfig(learning_rate=learning_rate, batch_size=batch_size,
                      epochs=epochs, adam_beta1=adam_beta1, adam_beta2=adam_beta2,
                      adam_epsilon=adam_epsilon, dropout_p=dropout, seed=seed)
    net = ClearanceNet(
        n_joints=robot.dof, n_out=grid.V, levels=levels,
        hidden=tuple(int(h) for h in hidden.split(",")),
        skip_layer=skip_layer, dropout_p=dropout,
        grid_signature=grid.signature(), robot_signature=robot.signature(),
        input_lo=robot.joint_lower, input_hi=robot.joint_upper,
        dtype=np.float32, rng=np.random.default_rng(seed))
    init_output_layer(net, Ytr)
    history = train(net, Xtr, Ytr, Xval, Yval, cfg, log=click.echo)
    net.save(out)
    click.echo(f"saved weights to {out} (final val L1 {history['val'][-1]:.5f})")
    if history_out:
        Path(history_out).write_text(json.dumps(history))


@cfn.command("eval")
@click.option("--weights", type=click.Path(exists=True), required=True)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--train-size", default=profiles.DESK_TRAIN, show_default=True)
@click.option("--val-size", default=profiles.DESK_VAL, show_default=True)
@click.option("--test-size", default=profiles.DESK_TEST, show_default=True)
@click.option("--threshold", default=None, type=float,
              help="Collision threshold in meters (default: one voxel edge).")
def cfn_eval(weights, data, train_size, val_size, test_size, threshold):
    """Report classification quality of thresholded inferred clearances."""
    ds = load_dataset(data)
    net = ClearanceNet.load(weights, expect_grid=ds.grid.signature(),
                            expect_robot=ds.robot_signature)
    _, _, (Xte, Yte) = ds.split(train_size, val_size, test_size)
    thr = threshold if threshold is not None else ds.grid.edge
    precision, recall, counts = evaluate_classifier(net, Xte, Yte, thr)
    click.echo(json.dumps({"threshold": thr, "precision": precision,
                           "recall": recall, **counts}))


# -- scene -----------------------------------------------------------------

@main.group()
def scene():
    """Scene file tools."""


@scene.command("validate")
@click.argument("scene_path", type=click.Path(exists=True))
def scene_validate(scene_path):
    """Check scene invariants; exits nonzero on problems."""
    s = Scene.load(scene_path)
    problems = s.validate()
    for p in problems:
        click.echo(f"problem: {p}")
    if problems:
        sys.exit(1)
    click.echo(f"scene {s.name!r} ok: {len(s.static_shapes)} static, "
               f"{len(s.dynamic_shapes)} dynamic, {len(s.configs)} configs")


@scene.command("run")
@click.argument("scene_path", type=click.Path(exists=True))
@click.option("--weights", type=click.Path(exists=True), default=None,
              help="Trained weights (default: exact geometric clearances).")
@click.option("--start", "start_name", default="A", show_default=True)
@click.option("--goal", "goal_name", default="B", show_default=True)
@click.option("--c", default=8, show_default=True)
@click.option("--threshold", default=None, type=float)
@click.option("--seed", default=0, show_default=True)
def scene_run(scene_path, weights, start_name, goal_name, c, threshold, seed):
    """Plan and smooth once between two named configurations."""
    s = Scene.load(scene_path)
    occ = s.static_occupancy()
    source = _clearance_source(s, weights)
    path = plan(s.robot, s.grid, occ, s.configs[start_name], s.configs[goal_name],
                seed=seed)
    if path is None:
        raise click.ClickException("planner found no path")
    thr = threshold if threshold is not None else s.grid.edge
    cfg = SmoothingConfig(c=c, clearance_threshold=thr)
    _, report = smooth(s.robot, s.grid, occ, path, source, cfg)
    click.echo(json.dumps(report.to_dict(), indent=2))


@scene.command("export-desk")
@click.argument("out", type=click.Path(dir_okay=False))
@click.option("--name", default="service-loop", show_default=True,
              help="Which built-in scene to export.")
def scene_export_desk(out, name):
    """Write one of the built-in desk scenes to a JSON file."""
    known = {s.name: s for s in profiles.desk_scene_corpus()}
    known["service-loop"] = profiles.service_scene()
    if name not in known:
        raise click.ClickException(f"unknown scene {name!r}; choose from {sorted(known)}")
    known[name].save(out)
    click.echo(f"wrote scene {name!r} to {out}")


def _clearance_source(scene_obj, weights_path):
    if weights_path:
        return ClearanceNet.load(weights_path,
                                 expect_grid=scene_obj.grid.signature(),
                                 expect_robot=scene_obj.robot.signature())
    return ExactClearanceModel(scene_obj.robot, scene_obj.grid)


# -- bench -----------------------------------------------------------------

@main.group()
def bench():
    """Benchmarks comparing the batch smoother against the baseline."""


def _load_desk_weights(weights, cache):
    if weights:
        return ClearanceNet.load(weights,
                                 expect_grid=profiles.desk_grid().signature(),
                                 expect_robot=profiles.desk_robot().signature())
    click.echo("no --weights given; training or loading cached desk network")
    net, _ = profiles.desk_weights(cache, log=click.echo)
    return net


@bench.command("run")
@click.option("--weights", type=click.Path(exists=True), default=None)
@click.option("--cache", type=click.Path(file_okay=False), default=".cache",
              show_default=True)
@click.option("--c-values", default="2,4,8,16", show_default=True)
@click.option("--iter-values", default="10,30,100,300", show_default=True)
@click.option("--reps", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--dt-sample", default=0.04, show_default=True)
@click.option("--threshold", default=None, type=float,
              help="Clearance threshold in meters (default: one voxel edge).")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="CSV output path (default: stdout).")
def bench_run(weights, cache, c_values, iter_values, reps, seed, dt_sample,
              threshold, out):
    """Sweep both smoothers over the desk scene corpus."""
    net = _load_desk_weights(weights, cache)
    tasks = corpus_tasks(profiles.desk_scene_corpus(), reps=reps, seed=seed)
    rows = run_bench(tasks, net,
                     c_values=tuple(int(x) for x in c_values.split(",")),
                     iter_values=tuple(int(x) for x in iter_values.split(",")),
                     dt_sample=dt_sample, threshold=threshold,
                     log=click.echo)
    text = rows_to_csv(rows)
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {len(rows)} rows to {out}")
    else:
        click.echo(text)
    for cell in summarize(rows):
        click.echo(json.dumps(cell))


@bench.command("stats")
@click.option("--weights", type=click.Path(exists=True), default=None)
@click.option("--cache", type=click.Path(file_okay=False), default=".cache",
              show_default=True)
@click.option("--trials", default=36, show_default=True)
@click.option("--c", default=8, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--exact", is_flag=True,
              help="Use exact geometric clearances instead of the network.")
def bench_stats(weights, cache, trials, c, seed, exact):
    """Histogram of which Dijkstra retry produced the accepted trajectory."""
    if exact:
        source = ExactClearanceModel(profiles.desk_robot(), profiles.desk_grid())
    else:
        source = _load_desk_weights(weights, cache)
    tasks = random_tasks(trials, seed=seed)
    cfg = SmoothingConfig(c=c, clearance_threshold=profiles.desk_threshold())
    stats = stats_first_candidate(tasks, source, cfg, log=click.echo)
    click.echo(json.dumps(stats, indent=2, default=str))


@bench.command("plot-data")
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def bench_plot_data(csv_path, out):
    """Aggregate a bench CSV into plot-ready (ratio, time) points."""
    import csv as csv_mod

    with open(csv_path) as f:
        rows = list(csv_mod.DictReader(f))
    for row in rows:
        row["ratio"] = float(row["ratio"])
        row["wall_ms"] = float(row["wall_ms"])
        row["inference_ms"] = float(row["inference_ms"])
        row["check_ms"] = float(row["check_ms"])
        row["param"] = int(row["param"])
    cells = summarize(rows)
    columns = ("method", "param", "n", "ratio_mean", "ratio_std",
               "wall_ms_mean", "wall_ms_std", "inference_ms_mean",
               "check_ms_mean")
    lines = [",".join(columns)]
    for cell in cells:
        lines.append(",".join(str(cell[k]) for k in columns))
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {len(cells)} cells to {out}")
    else:
        click.echo(text)


# -- serve -----------------------------------------------------------------

@main.command("serve")
@click.option("--scene", "scene_path", type=click.Path(exists=True), default=None,
              help="Scene file (default: built-in service loop scene).")
@click.option("--weights", type=click.Path(exists=True), default=None)
@click.option("--cache", type=click.Path(file_okay=False), default=".cache",
              show_default=True)
@click.option("--exact", is_flag=True,
              help="Use exact geometric clearances instead of the network.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8700, show_default=True)
@click.option("--tick", default=0.05, show_default=True)
@click.option("--c", default=8, show_default=True)
def serve(scene_path, weights, cache, exact, host, port, tick, c):
    """Run the realtime loop behind a websocket."""
    import uvicorn

    s = Scene.load(scene_path) if scene_path else profiles.service_scene()
    if exact:
        source = ExactClearanceModel(s.robot, s.grid)
    elif weights:
        source = ClearanceNet.load(weights, expect_grid=s.grid.signature(),
                                   expect_robot=s.robot.signature())
    else:
        if s.robot.signature() != profiles.desk_robot().signature() or \
                s.grid.signature() != profiles.desk_grid().signature():
            raise click.ClickException(
                "scene does not match the desk profile; pass --weights or --exact")
        source = _load_desk_weights(None, cache)
    cfg = LoopConfig(tick=tick, smoothing=SmoothingConfig(
        c=c, clearance_threshold=s.grid.edge))
    app = build_app(s, source, cfg)
    click.echo(f"serving scene {s.name!r} on ws://{host}:{port}/ws")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
