"""Command line interface: graph generation, path sampling, simulation, replay, serving."""

from __future__ import annotations

import json
import sys
from dataclasses import fields, replace
from pathlib import Path

import click

from .engine import GazeSample, NavEngine, Technique, TechniqueConfig
from .generate import generate_small_world, load_metro, make_metro_graph
from .graph import load_graph
from .paths import sample_task_path
from .simulate import ExperimentPlan, run_experiment, run_trial, summarize
from .trajectory import TrajectoryProfile, gen_trajectory

TECHNIQUES = [t.value for t in Technique]


def _load_graph_arg(spec: str):
    """A graph argument is either a file path or a built-in kind."""
    if spec == "metro":
        return load_metro()
    if spec == "small-world":
        return generate_small_world(180, 4, 0.1, seed=1)
    return load_graph(spec)


@click.group()
def main() -> None:
    """Gaze-driven graph navigation: engine, simulator, and demo server."""


@main.command("gen-graph")
@click.option("--kind", type=click.Choice(["small-world", "metro"]), default="small-world")
@click.option("--n", default=180, show_default=True, help="node count (small-world)")
@click.option("--k", default=4, show_default=True, help="ring-lattice degree (small-world)")
@click.option("--p", default=0.1, show_default=True, help="rewiring probability")
@click.option("--seed", default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen_graph(kind: str, n: int, k: int, p: float, seed: int, out: str) -> None:
    """Generate a graph file."""
    if kind == "small-world":
        g = generate_small_world(n, k, p, seed=seed)
    else:
        g = make_metro_graph(seed=7)
    g.save(out)
    click.echo(f"wrote {out}: {len(g.nodes)} nodes, {len(g.links)} links")


@main.command("sample-path")
@click.argument("graph")
@click.option("--kind", type=click.Choice(["weighted", "homogeneous"]), default="weighted")
@click.option("--seed", default=0, show_default=True)
@click.option("--length", default=7, show_default=True)
@click.option("--require-long-link", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), help="write the path document here")
@click.option("--out-graph", type=click.Path(dir_okay=False), help="write the reweighted graph here")
def sample_path(graph, kind, seed, length, require_long_link, out, out_graph) -> None:
    """Sample a task path on GRAPH (a file, or 'metro' / 'small-world')."""
    g = _load_graph_arg(graph)
    path, g2 = sample_task_path(
        g, length=length, kind=kind, require_long_link=require_long_link, seed=seed
    )
    doc = {
        "version": 1,
        "graph": graph,
        "kind": kind,
        "seed": seed,
        "nodes": list(path.nodes),
        "links": list(path.links),
        "start": path.start_node,
    }
    text = json.dumps(doc, indent=1)
    if out:
        Path(out).write_text(text + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(text)
    if out_graph:
        g2.save(out_graph)
        click.echo(f"wrote {out_graph}")


def _profile_from_doc(doc: dict) -> TrajectoryProfile:
    names = {f.name for f in fields(TrajectoryProfile)}
    unknown = set(doc) - names
    if unknown:
        raise click.ClickException(f"unknown profile fields: {sorted(unknown)}")
    return replace(TrajectoryProfile(), **doc)


@main.command()
@click.option("--plan", "plan_file", type=click.Path(exists=True, dir_okay=False), help="JSON plan file")
@click.option("--techniques", default=",".join(TECHNIQUES), show_default=True)
@click.option("--graphs", default="metro,small-world", show_default=True)
@click.option("--path-kinds", default="weighted,homogeneous", show_default=True)
@click.option("--tasks", default="selection,tracing", show_default=True)
@click.option("--trials", default=6, show_default=True)
@click.option("--master-seed", default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def simulate(plan_file, techniques, graphs, path_kinds, tasks, trials, master_seed, out) -> None:
    """Run the experiment grid and write a results table."""
    if plan_file:
        doc = json.loads(Path(plan_file).read_text())
        profile = _profile_from_doc(doc.pop("profile", {}))
        known = {f.name for f in fields(ExperimentPlan)}
        unknown = set(doc) - known
        if unknown:
            raise click.ClickException(f"unknown plan fields: {sorted(unknown)}")
        for key in ("techniques", "graphs", "path_kinds", "tasks"):
            if key in doc:
                doc[key] = tuple(doc[key])
        if "small_world" in doc:
            doc["small_world"] = tuple(doc["small_world"])
        plan = replace(ExperimentPlan(), profile=profile, **doc)
    else:
        plan = ExperimentPlan(
            techniques=tuple(techniques.split(",")),
            graphs=tuple(graphs.split(",")),
            path_kinds=tuple(path_kinds.split(",")),
            tasks=tuple(tasks.split(",")),
            trials=trials,
            master_seed=master_seed,
        )
    results = run_experiment(plan, out_path=out)
    click.echo(f"wrote {out} ({len(results)} trials)")
    for row in summarize(results):
        click.echo(
            f"  {row['technique']:16s} {row['graph']:12s} {row['path_kind']:12s} "
            f"{row['task']:9s} mean={row['mean_time_s']:8.3f}s "
            f"completed={row['completed']}/{row['n']}"
        )


@main.command()
@click.argument("trajectory", type=click.Path(exists=True, dir_okay=False))
@click.option("--graph", default="metro", show_default=True)
@click.option("--technique", type=click.Choice(TECHNIQUES), required=True)
@click.option("--out", type=click.Path(dir_okay=False), help="write the event log here")
def replay(trajectory, graph, technique, out) -> None:
    """Replay a trajectory file against the engine, printing the event log."""
    doc = json.loads(Path(trajectory).read_text())
    if doc.get("version") != 1:
        raise click.ClickException("unsupported trajectory file version")
    g = _load_graph_arg(graph)
    engine = NavEngine(technique, g)
    state = engine.initial_state()
    lines = []
    for s in doc["samples"]:
        sample = GazeSample(float(s["t"]), (float(s["x"]), float(s["y"])))
        state, frame, events = engine.step(state, sample)
        for e in events:
            payload = {
                k: v
                for k, v in (("node", e.node), ("link", e.link), ("subpath", e.subpath))
                if v is not None
            }
            lines.append(json.dumps({"t": sample.t, "kind": e.kind, **payload}, separators=(",", ":")))
    text = "\n".join(lines)
    if out:
        Path(out).write_text(text + "\n")
        click.echo(f"wrote {out} ({len(lines)} events)")
    else:
        click.echo(text)


@main.command("gen-trajectory")
@click.option("--graph", default="metro", show_default=True)
@click.option("--kind", type=click.Choice(["weighted", "homogeneous"]), default="weighted")
@click.option("--task", type=click.Choice(["selection", "tracing"]), default="tracing")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen_trajectory_cmd(graph, kind, task, seed, out) -> None:
    """Generate a scripted trajectory file along a sampled path."""
    g = _load_graph_arg(graph)
    path, g2 = sample_task_path(g, kind=kind, seed=seed)
    profile = TrajectoryProfile(seed=seed)
    samples = gen_trajectory(path, g2, profile, task)
    doc = {
        "version": 1,
        "profile": {f.name: getattr(profile, f.name) for f in fields(TrajectoryProfile)},
        "samples": [{"t": s.t, "x": s.pos[0], "y": s.pos[1]} for s in samples],
    }
    Path(out).write_text(json.dumps(doc) + "\n")
    click.echo(f"wrote {out} ({len(samples)} samples)")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
def serve(host: str, port: int) -> None:
    """Start the interactive demo session endpoint."""
    from .protocol import run_server

    click.echo(f"session endpoint on ws://{host}:{port}")
    run_server(host, port)


if __name__ == "__main__":
    main()
