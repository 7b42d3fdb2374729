import pytest
from fastapi.testclient import TestClient

from railtag.scenario import default_scenario, scenario_to_dict
from railtag.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def scenario_doc():
    return scenario_to_dict(default_scenario())


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"


def test_default_scenario_endpoint(client, scenario_doc):
    resp = client.get("/scenario/default")
    assert resp.status_code == 200
    assert resp.json() == scenario_doc


def test_simulate_clean_trip(client, scenario_doc):
    resp = client.post(
        "/simulate",
        json={"scenario": scenario_doc, "controller": "on", "seed": 3},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["result"]["safe"] is True
    assert body["result"]["incidents"] == []
    assert body["trace_csv"] is None


def test_simulate_with_trace_and_decisions(client, scenario_doc):
    resp = client.post(
        "/simulate",
        json={
            "scenario": scenario_doc,
            "controller": "off",
            "seed": 3,
            "include_trace": True,
            "include_decisions": True,
        },
    )
    body = resp.json()
    trace = body["trace_csv"].splitlines()
    assert trace[0] == "tick,pos_m,speed_mps,left_rpm,right_rpm,brake"
    assert len(trace) == body["result"]["ticks_used"] + 1
    decisions = body["decisions_csv"].splitlines()
    assert decisions[0] == "tick,active_conditions,delta_motor_rpm,delta_left_rpm,delta_right_rpm,brake"


def test_simulate_hazard_collision_when_off(client, scenario_doc):
    doc = dict(scenario_doc)
    doc["hazard"] = {"kind": "human", "position": 900.0}
    resp = client.post("/simulate", json={"scenario": doc, "controller": "off", "seed": 3})
    body = resp.json()
    assert body["result"]["safe"] is False
    assert body["result"]["incidents"][0]["kind"] == "collision_human"


def test_simulate_matches_library(client, scenario_doc):
    from railtag.harness import run_trip

    resp = client.post("/simulate", json={"scenario": scenario_doc, "controller": "on", "seed": 11})
    expected = run_trip(default_scenario(), True, 11)
    body = resp.json()["result"]
    assert body["ticks_used"] == expected.ticks_used
    assert body["final_pos"] == pytest.approx(expected.final_pos, rel=1e-12)


def test_experiment_both_modes(client, scenario_doc):
    resp = client.post(
        "/experiment",
        json={"scenario": scenario_doc, "trips": 10, "hazardous": 3, "seed": 2, "format": "csv"},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert [s["controller_enabled"] for s in body["stats"]] == [True, False]
    lines = body["report"].splitlines()
    assert len(lines) == 3  # header + one row per mode
    assert lines[0].startswith("trips,hazardous_trips,safe_trips")


def test_experiment_single_mode_json(client, scenario_doc):
    import json

    resp = client.post(
        "/experiment",
        json={
            "scenario": scenario_doc,
            "trips": 6,
            "hazardous": 2,
            "seed": 2,
            "format": "json",
            "modes": "off",
        },
    )
    body = resp.json()
    assert len(body["stats"]) == 1 and body["stats"][0]["controller_enabled"] is False
    assert json.loads(body["report"])[0]["trips"] == 6


def test_config_error_maps_to_400(client, scenario_doc):
    resp = client.post(
        "/experiment",
        json={"scenario": scenario_doc, "trips": 5, "hazardous": 9, "seed": 0},
    )
    assert resp.status_code == 400
    assert resp.json()["error"] == "ConfigError"


def test_bad_geometry_maps_to_400(client, scenario_doc):
    doc = dict(scenario_doc)
    doc["track"] = {
        "segments": [
            {"kind": "straight", "start_pos": 0.0, "length": 500.0, "speed_limit": 20.0},
            {"kind": "straight", "start_pos": 900.0, "length": 500.0, "speed_limit": 20.0},
        ]
    }
    resp = client.post("/simulate", json={"scenario": doc, "controller": "on", "seed": 0})
    assert resp.status_code == 400
    assert resp.json()["error"] == "OverlapError"


def test_validation_error_is_422(client, scenario_doc):
    resp = client.post("/simulate", json={"scenario": scenario_doc, "seed": -1})
    assert resp.status_code == 422
