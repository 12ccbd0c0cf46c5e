from __future__ import annotations

import numpy as np
import pytest

import jack_fixture
from visagent.backends import BackendSet
from visagent.config import RunConfig
from visagent.orchestrator import Engine, Phase
from visagent.story.types import LayeredPrompts


def deterministic_backends(backends: BackendSet) -> BackendSet:
    # property and oracle suites refuse to run against anything that does
    # not declare bit-determinism
    assert backends.all_deterministic(), "test backends must be deterministic"
    return backends


@pytest.fixture
def mock_backends() -> BackendSet:
    return deterministic_backends(BackendSet.mocks())


@pytest.fixture
def jack_story():
    return jack_fixture.load_story()


@pytest.fixture
def jack_backends() -> BackendSet:
    return deterministic_backends(jack_fixture.fixture_backends())


def make_prompts(
    scene_index: int = 0,
    bg: str = "a quiet meadow at dawn",
    fg: dict[str, str] | None = None,
    separator: str = ", ",
) -> LayeredPrompts:
    fg = fg if fg is not None else {}
    return LayeredPrompts(
        scene_index=scene_index,
        bg_prompt=bg,
        fg_prompts=fg,
        global_prompt=separator.join([bg, *fg.values()]),
    )


def fixture_run_config(**overrides) -> RunConfig:
    config = RunConfig(
        auto_approve=True,
        backend_options={"text": {"transcript": str(jack_fixture.TRANSCRIPT_PATH)}},
        backend_names={"text": "mock-strict"},
    )
    for key, value in overrides.items():
        setattr(config, key, value)
    return config


def run_fixture_pipeline(store_dir) -> tuple[Engine, str]:
    """Full hermetic fixture run to done; returns (engine, run_id)."""
    engine = Engine(store_dir)
    run = engine.create_run(jack_fixture.load_story(), fixture_run_config())
    run = engine.run_until_blocked(run.run_id)
    assert run.phase == Phase.DONE, f"fixture run ended in {run.phase}: {run.error}"
    return engine, run.run_id


@pytest.fixture(scope="session")
def completed_run(tmp_path_factory) -> tuple[Engine, str]:
    store_dir = tmp_path_factory.mktemp("fixture-run")
    return run_fixture_pipeline(store_dir)


def assert_images_equal(a: np.ndarray, b: np.ndarray) -> None:
    assert a.shape == b.shape
    assert np.array_equal(a, b)
