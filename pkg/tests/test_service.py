import json
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

import pytest
from fastapi.testclient import TestClient

from dbpsense.envdata import CORE_HEADER
from dbpsense.pipeline import RunConfig, run
from dbpsense.service import create_app

DATA = resources.files("dbpsense") / "data"

PATH_KEYS = ("network_path", "env_data_path", "contracts_path")


@pytest.fixture()
def runs_dir(tmp_path):
    return tmp_path / "runs"


@pytest.fixture()
def client(runs_dir):
    with TestClient(create_app(runs_dir=runs_dir)) as c:
        yield c


def post_run(client, config=None, network_bytes=None, env=True, contracts=True):
    files = {
        "network": (
            "demo.inp",
            network_bytes
            if network_bytes is not None
            else (DATA / "demo.inp").read_bytes(),
        )
    }
    if env:
        files["env_data"] = ("env.csv", (DATA / "demo_env.csv").read_bytes())
    if contracts:
        files["contracts"] = ("c.csv", (DATA / "demo_contracts.csv").read_bytes())
    data = {"config": json.dumps(config)} if config is not None else {}
    return client.post("/runs", files=files, data=data)


def strip_volatile(result: dict) -> str:
    result = json.loads(json.dumps(result))
    result.pop("timings")
    for key in PATH_KEYS:
        result["config"].pop(key)
    return json.dumps(result, sort_keys=True)


def test_post_then_get_echoes_config(client):
    submitted = {
        "sensor_count": 2,
        "cutoff": 0.0,
        "seed": 7,
        "objectives": ["time_of_detection", "normalized_score"],
    }
    created = post_run(client, submitted)
    assert created.status_code == 200, created.text
    run_id = created.json()["id"]

    fetched = client.get(f"/runs/{run_id}")
    assert fetched.status_code == 200
    echo = fetched.json()["config"]
    assert echo["sensor_count"] == 2
    assert echo["cutoff"] == 0.0
    assert echo["seed"] == 7
    assert echo["objectives"] == submitted["objectives"]
    placement = fetched.json()["placement"]
    assert len(placement["per_objective"]["time_of_detection"]) == 2
    assert len(placement["per_objective"]["normalized_score"]) == 2


def test_scores_endpoint_returns_csv(client):
    run_id = post_run(client, {"cutoff": 0.0}).json()["id"]
    resp = client.get(f"/runs/{run_id}/scores")
    assert resp.status_code == 200
    assert resp.headers["content-type"].startswith("text/csv")
    lines = resp.text.splitlines()
    assert lines[0].startswith("node,events_")
    assert len(lines) == 12  # header + 11 nodes


def test_network_endpoint_returns_geometry(client):
    run_id = post_run(client, {"cutoff": 0.0}).json()["id"]
    geo = client.get(f"/network/{run_id}").json()
    assert len(geo["nodes"]) == 11
    assert len(geo["edges"]) == 10
    kinds = {n["kind"] for n in geo["nodes"]}
    assert kinds == {"junction", "reservoir"}


def test_templates_match_bundled_files(client):
    env = client.get("/templates/env")
    assert env.status_code == 200
    assert env.text.splitlines()[0] == ",".join(CORE_HEADER)
    contracts = client.get("/templates/contracts")
    assert contracts.status_code == 200
    assert contracts.text.splitlines()[0] == "Node,Contracts"
    assert client.get("/templates/bogus").status_code == 404


def test_unknown_run_id_is_404(client):
    assert client.get("/runs/deadbeef").status_code == 404
    assert client.get("/runs/deadbeef/scores").status_code == 404
    assert client.get("/network/deadbeef").status_code == 404


def test_malformed_network_returns_400_with_stage(client):
    resp = post_run(client, network_bytes=b"[JUNCTIONS]\nJ1 not-a-number 0.5\n")
    assert resp.status_code == 400
    detail = resp.json()["detail"]
    assert detail["stage"] == "parse"
    assert detail["message"]


def test_config_not_json_returns_400(client):
    files = {"network": ("demo.inp", (DATA / "demo.inp").read_bytes())}
    resp = client.post("/runs", files=files, data={"config": "{nope"})
    assert resp.status_code == 400
    assert "not JSON" in resp.json()["detail"]["message"]


def test_config_path_keys_rejected(client):
    resp = post_run(client, {"network_path": "/etc/hosts"})
    assert resp.status_code == 400
    assert "unknown config keys" in resp.json()["detail"]["message"]


def test_config_without_mandatory_objective_returns_400(client):
    resp = post_run(client, {"objectives": ["contracts"]})
    assert resp.status_code == 400
    assert "mandatory" in resp.json()["detail"]["message"]


def test_run_directory_holds_artifacts(client, runs_dir):
    run_id = post_run(client, {"cutoff": 0.0}).json()["id"]
    run_dir = runs_dir / run_id
    for name in ("config.json", "result.json", "scores.csv", "network.json"):
        assert (run_dir / name).exists()
    assert (run_dir / "inputs" / "network.inp").exists()
    persisted = json.loads((run_dir / "result.json").read_text())
    assert persisted == client.get(f"/runs/{run_id}").json()


def test_concurrent_posts_are_isolated(client):
    config_a = {"seed": 1, "sensor_count": 2, "cutoff": 0.0}
    config_b = {"seed": 2, "sensor_count": 3, "cutoff": 0.0, "region": "us"}

    with ThreadPoolExecutor(max_workers=2) as pool:
        fut_a = pool.submit(post_run, client, config_a)
        fut_b = pool.submit(post_run, client, config_b)
        id_a = fut_a.result().json()["id"]
        id_b = fut_b.result().json()["id"]

    assert id_a != id_b
    got_a = client.get(f"/runs/{id_a}").json()
    got_b = client.get(f"/runs/{id_b}").json()

    # reference: the same configs executed sequentially in-process
    def sequential(overrides):
        cfg = RunConfig(
            network_path=str(DATA / "demo.inp"),
            env_data_path=str(DATA / "demo_env.csv"),
            contracts_path=str(DATA / "demo_contracts.csv"),
            **{k: tuple(v) if isinstance(v, list) else v for k, v in overrides.items()},
        )
        return run(cfg).to_dict()

    assert strip_volatile(got_a) == strip_volatile(sequential(config_a))
    assert strip_volatile(got_b) == strip_volatile(sequential(config_b))


def test_health_reports_runs_dir(client, runs_dir):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"
    assert str(runs_dir) in resp.json()["runs_dir"]


def test_cross_origin_requests_are_answered(client):
    resp = client.get("/health", headers={"Origin": "http://localhost:5173"})
    assert resp.headers.get("access-control-allow-origin") == "*"
