"""HTTP contract tests against the in-process app (no real server)."""

import time

import pytest
from fastapi.testclient import TestClient

import jack_fixture
from visagent.orchestrator.api import create_app

from conftest import fixture_run_config


@pytest.fixture()
def client(tmp_path):
    app = create_app(tmp_path / "store")
    with TestClient(app) as test_client:
        yield test_client


def fixture_config_doc(auto_approve=False) -> dict:
    return fixture_run_config(auto_approve=auto_approve).to_dict()


def create_gated_run(client) -> str:
    # generative mocks here: gate edits change payloads, which a strict
    # transcript cannot answer
    response = client.post(
        "/runs",
        json={
            "story_text": jack_fixture.STORY_PATH.read_text(encoding="utf-8"),
            "title": "Jack and the Beanstalk",
            "config": {"auto_approve": False},
        },
    )
    assert response.status_code == 200
    return response.json()["run_id"]


def wait_for_phase(client, run_id, phases, timeout=30.0) -> dict:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        state = client.get(f"/runs/{run_id}").json()
        if state["phase"] in phases:
            return state
        time.sleep(0.05)
    raise AssertionError(f"run never reached {phases}; last phase {state['phase']}")


def test_create_and_complete_auto_run(client):
    response = client.post(
        "/runs",
        json={
            "story_text": jack_fixture.STORY_PATH.read_text(encoding="utf-8"),
            "config": fixture_config_doc(auto_approve=True),
        },
    )
    assert response.status_code == 200
    run_id = response.json()["run_id"]
    state = wait_for_phase(client, run_id, {"done", "failed"})
    assert state["phase"] == "done"
    assert len(state["assemblies"]) == 5


def test_gate_flow_over_http(client):
    run_id = create_gated_run(client)
    state = wait_for_phase(client, run_id, {"awaiting_description_feedback"})
    assert state["open_gates"] == ["descriptions"]

    response = client.post(
        f"/runs/{run_id}/approval",
        json={
            "gate": "descriptions",
            "payload": [
                {
                    "target": "scene",
                    "target_id": 0,
                    "verdict": "modify",
                    "patched_fields": {"summary": "Jack strikes his bargain at the market."},
                }
            ],
        },
    )
    assert response.status_code == 200

    state = wait_for_phase(client, run_id, {"awaiting_element_approval"})
    assert state["scenes"][0]["summary"] == "Jack strikes his bargain at the market."

    reject = client.post(
        f"/runs/{run_id}/approval",
        json={
            "gate": "element",
            "payload": [{"element_key": "fg_jack", "verdict": "regenerate"}],
        },
    )
    assert reject.status_code == 200
    assert reject.json()["open_gates"] == ["element"]

    for _ in range(5):  # approve each scene's element gate as it opens
        state = wait_for_phase(client, run_id, {"awaiting_element_approval", "done"})
        if state["phase"] == "done":
            break
        approve = client.post(
            f"/runs/{run_id}/approval", json={"gate": "element", "payload": []}
        )
        assert approve.status_code == 200
    state = wait_for_phase(client, run_id, {"done"})
    assert state["phase"] == "done"


def test_approval_on_closed_gate_conflicts(client):
    run_id = create_gated_run(client)
    wait_for_phase(client, run_id, {"awaiting_description_feedback"})
    response = client.post(
        f"/runs/{run_id}/approval", json={"gate": "element", "payload": []}
    )
    assert response.status_code == 409


def test_events_endpoint_pagination(client):
    run_id = create_gated_run(client)
    wait_for_phase(client, run_id, {"awaiting_description_feedback"})
    first = client.get(f"/runs/{run_id}/events").json()["events"]
    assert first
    last_seq = first[-1]["seq"]
    rest = client.get(f"/runs/{run_id}/events", params={"after": last_seq}).json()["events"]
    assert all(e["seq"] > last_seq for e in rest)


def test_artifact_serving_and_traversal_guard(client):
    response = client.post(
        "/runs",
        json={
            "story_text": jack_fixture.STORY_PATH.read_text(encoding="utf-8"),
            "config": fixture_config_doc(auto_approve=True),
        },
    )
    run_id = response.json()["run_id"]
    state = wait_for_phase(client, run_id, {"done"})
    path = state["assemblies"][0]["rendered"]["path"]
    artifact = client.get(f"/runs/{run_id}/artifacts/{path}")
    assert artifact.status_code == 200
    assert artifact.headers["content-type"] == "image/png"
    traversal = client.get(f"/runs/{run_id}/artifacts/../../etc/passwd")
    assert traversal.status_code == 404


def test_evaluate_endpoint(client):
    response = client.post(
        "/runs",
        json={
            "story_text": jack_fixture.STORY_PATH.read_text(encoding="utf-8"),
            "config": fixture_config_doc(auto_approve=True),
        },
    )
    run_id = response.json()["run_id"]
    wait_for_phase(client, run_id, {"done"})
    report = client.post(f"/runs/{run_id}/evaluate")
    assert report.status_code == 200
    body = report.json()
    assert body["tis"] is not None


def test_unknown_run_404(client):
    assert client.get("/runs/nope").status_code == 404


def test_run_list(client):
    run_id = create_gated_run(client)
    wait_for_phase(client, run_id, {"awaiting_description_feedback"})
    listing = client.get("/runs").json()["runs"]
    assert any(r["run_id"] == run_id for r in listing)
