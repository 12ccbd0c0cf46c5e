"""Command line entry points: run, render, eval, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
from PIL import Image

from .backends import BackendSet, registry
from .config import RunConfig
from .errors import VisAgentError
from .events import EventLog
from .evaluation.benchmark import load_benchmark
from .evaluation.runs import evaluate_run
from .image.pipeline import run_image_module
from .image.types import SceneAssembly
from .orchestrator.engine import Engine
from .orchestrator.state import GATE_PHASES, Phase
from .story.instructions import DEFAULT_IMAGE_INSTRUCTIONS
from .story.serialization import distillation_from_dict, distillation_to_dict
from .story.types import Story


@click.group()
def main() -> None:
    """Story visualization pipeline: distill a story, render its scenes."""


def _load_config(config_path: str | None, **overrides) -> RunConfig:
    config = RunConfig.from_file(config_path) if config_path else RunConfig()
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    if not config.backend_names:
        config.backend_names = {
            "text": registry.default_text_backend_name(),
            "image": registry.default_image_backend_name(),
        }
    return config


@main.command()
@click.option("--story", "story_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--auto-approve", is_flag=True, default=False)
@click.option("--seed", type=int, default=None)
@click.option("--num-scenes", type=int, default=None)
@click.option("--emit-distillation", "distillation_path", type=click.Path())
@click.option("--title", default=None)
def run(story_path, config_path, out_dir, auto_approve, seed, num_scenes, distillation_path, title):
    """Run the full pipeline on a plain-text story."""
    config = _load_config(config_path, seed=seed, num_scenes=num_scenes)
    if auto_approve:
        config.auto_approve = True
    story = Story(text=Path(story_path).read_text(encoding="utf-8"), title=title)
    engine = Engine(out_dir)
    try:
        run_state = engine.create_run(story, config)
        run_state = engine.run_until_blocked(run_state.run_id)
    except VisAgentError as exc:
        raise click.ClickException(str(exc)) from exc

    if distillation_path and run_state.prompts:
        from .story.types import StoryDistillation

        distillation = StoryDistillation(
            story=run_state.story,
            scenes=tuple(run_state.scenes),
            characters=tuple(run_state.characters),
            prompts=tuple(run_state.prompts),
            report=run_state.report,
        )
        Path(distillation_path).write_text(
            json.dumps(distillation_to_dict(distillation), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        click.echo(f"distillation written to {distillation_path}")

    if run_state.phase in GATE_PHASES:
        click.echo(
            f"run {run_state.run_id} is waiting at gate {run_state.open_gates()}; "
            "resume it with `visagent serve` and the console, or rerun with --auto-approve"
        )
    elif run_state.phase == Phase.FAILED:
        raise click.ClickException(f"run {run_state.run_id} failed: {run_state.error}")
    else:
        click.echo(f"run {run_state.run_id} finished: {run_state.phase.value}")
        click.echo(f"artifacts under {engine.store.run_dir(run_state.run_id)}")


@main.command()
@click.option("--distillation", "distillation_path", required=True, type=click.Path(exists=True))
@click.option("--backend", "backend_name", default=None, help="image backend name")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0)
@click.option("--steps", type=int, default=30)
def render(distillation_path, backend_name, out_dir, seed, steps):
    """Render scenes from an emitted distillation document."""
    doc = json.loads(Path(distillation_path).read_text(encoding="utf-8"))
    distillation = distillation_from_dict(doc)
    backend_name = backend_name or registry.default_image_backend_name()

    config = RunConfig(seed=seed, steps=steps, num_scenes=len(distillation.prompts))
    if steps != 30:
        config.schedule_entries = [{"from": 1, "to": steps, "lambda": 0.5}]
    backends = BackendSet.from_names(
        {"image": backend_name}, {"image": {"canvas": list(config.canvas)}}
    )
    assemblies: list[SceneAssembly] = []
    events = EventLog()
    try:
        rendered = run_image_module(
            list(distillation.prompts),
            DEFAULT_IMAGE_INSTRUCTIONS,
            backends,
            config=config.renderer_config(),
            events=events,
            assemblies=assemblies,
        )
    except VisAgentError as exc:
        raise click.ClickException(str(exc)) from exc

    out = Path(out_dir)
    for assembly in assemblies:
        scene_dir = out / f"scene_{assembly.scene_index}"
        scene_dir.mkdir(parents=True, exist_ok=True)
        for element in assembly.elements:
            name = "bg.png" if element.character_id is None else f"fg_{element.character_id}.png"
            Image.fromarray(element.pixels).save(scene_dir / name)
        if assembly.stitched is not None:
            Image.fromarray(assembly.stitched.pixels).save(scene_dir / "stitched.png")
        if assembly.rendered is not None:
            Image.fromarray(assembly.rendered.pixels).save(scene_dir / "final.png")
    layouts = {
        a.scene_index: [
            {"character_id": l.character_id, "bbox": list(l.bbox), "z_order": l.z_order}
            for l in a.layouts
        ]
        for a in assemblies
    }
    (out / "layouts.json").write_text(json.dumps(layouts, indent=2) + "\n", encoding="utf-8")
    click.echo(f"rendered {len(rendered)} scene(s) to {out}")


@main.command(name="eval")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True))
@click.option("--benchmark", "benchmark_path", type=click.Path(exists=True))
@click.option("--report", "report_path", type=click.Path())
def eval_cmd(run_dir, benchmark_path, report_path):
    """Compute TIS/FID/CCS over a finished run directory."""
    backends = BackendSet.mocks()
    benchmark_cases = None
    if benchmark_path:
        benchmark_cases = load_benchmark(benchmark_path)
        click.echo(f"benchmark loaded: {len(benchmark_cases)} case(s)")
    try:
        report = evaluate_run(run_dir, backends.embedding)
    except VisAgentError as exc:
        raise click.ClickException(str(exc)) from exc
    doc = report.to_dict()
    if benchmark_cases is not None:
        doc["benchmark_cases"] = len(benchmark_cases)
    text = json.dumps(doc, indent=2) + "\n"
    if report_path:
        Path(report_path).write_text(text, encoding="utf-8")
        click.echo(f"report written to {report_path}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--port", type=int, default=8000)
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--static", "static_dir", type=click.Path(), default=None)
@click.option("--host", default="127.0.0.1")
def serve(port, store_dir, static_dir, host):
    """Serve the console API (and the built console UI, when present)."""
    import uvicorn

    from .orchestrator.api import create_app

    if static_dir is None:
        bundled = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
        static_dir = bundled if bundled.is_dir() else None
    app = create_app(store_dir, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
