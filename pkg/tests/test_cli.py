import json

from click.testing import CliRunner

import jack_fixture
from visagent.cli import main

from conftest import fixture_run_config


def write_config(tmp_path, **overrides):
    config = fixture_run_config(**overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config.to_dict()), encoding="utf-8")
    return path


def test_run_command_full_pipeline(tmp_path):
    config_path = write_config(tmp_path)
    out_dir = tmp_path / "out"
    distillation_path = tmp_path / "distillation.json"
    result = CliRunner().invoke(
        main,
        [
            "run",
            "--story", str(jack_fixture.STORY_PATH),
            "--config", str(config_path),
            "--out", str(out_dir),
            "--auto-approve",
            "--emit-distillation", str(distillation_path),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "finished: done" in result.output
    doc = json.loads(distillation_path.read_text(encoding="utf-8"))
    assert doc["format"] == "visagent-distillation/v1"
    assert len(doc["prompts"]) == 5
    run_dirs = [p for p in out_dir.iterdir() if (p / "state.json").exists()]
    assert len(run_dirs) == 1
    assert (run_dirs[0] / "scene_0" / "final.png").exists()
    assert (run_dirs[0] / "scene_4" / "stitched.png").exists()


def test_run_without_auto_approve_stops_at_gate(tmp_path):
    config_path = write_config(tmp_path, auto_approve=False)
    result = CliRunner().invoke(
        main,
        [
            "run",
            "--story", str(jack_fixture.STORY_PATH),
            "--config", str(config_path),
            "--out", str(tmp_path / "out"),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "waiting at gate" in result.output


def test_render_command_from_distillation(tmp_path):
    config_path = write_config(tmp_path)
    distillation_path = tmp_path / "distillation.json"
    CliRunner().invoke(
        main,
        [
            "run",
            "--story", str(jack_fixture.STORY_PATH),
            "--config", str(config_path),
            "--out", str(tmp_path / "out"),
            "--auto-approve",
            "--emit-distillation", str(distillation_path),
        ],
    )
    render_dir = tmp_path / "render"
    result = CliRunner().invoke(
        main,
        [
            "render",
            "--distillation", str(distillation_path),
            "--out", str(render_dir),
            "--seed", "7",
        ],
    )
    assert result.exit_code == 0, result.output
    assert "rendered 5 scene(s)" in result.output
    for scene in range(5):
        assert (render_dir / f"scene_{scene}" / "final.png").exists()
    assert (render_dir / "layouts.json").exists()


def test_eval_command(tmp_path):
    config_path = write_config(tmp_path)
    out_dir = tmp_path / "out"
    CliRunner().invoke(
        main,
        [
            "run",
            "--story", str(jack_fixture.STORY_PATH),
            "--config", str(config_path),
            "--out", str(out_dir),
            "--auto-approve",
        ],
    )
    run_dir = next(p for p in out_dir.iterdir() if (p / "state.json").exists())
    report_path = tmp_path / "report.json"
    result = CliRunner().invoke(
        main,
        [
            "eval",
            "--run", str(run_dir),
            "--benchmark", str(jack_fixture.BENCHMARK_PATH),
            "--report", str(report_path),
        ],
    )
    assert result.exit_code == 0, result.output
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert report["tis"] is not None
    assert report["benchmark_cases"] == 5
