"""HTTP endpoint tests, run against the app in-process."""

from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from dqaoa.ising import model_from_text
from dqaoa.service.app import create_app

DATA = Path(__file__).resolve().parent.parent / "data"

CKP_OVERRIDES = {"mu": 10, "lam": 70, "slack_bits": 2}


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


@pytest.fixture(scope="module")
def ckp_text():
    return (DATA / "ckp.pbo").read_text()


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


# ---------------------------------------------------------------------------
# /reduce

def test_reduce_knapsack_couplings(client, ckp_text):
    resp = client.post("/reduce", json={"problem": ckp_text, **CKP_OVERRIDES})
    assert resp.status_code == 200
    body = resp.json()
    assert body["n_spins"] == 7
    assert body["mu"] == 10
    pairs = {(c["i"], c["j"]): c["weight"] for c in body["couplings"]}
    assert pairs[("x1", "x2")] == pytest.approx(238)
    assert pairs[("x1", "y1")] == pytest.approx(-35)
    assert pairs[("x4", "y1")] == pytest.approx(-1.75)
    assert pairs[("s1_0", "s1_1")] == pytest.approx(10)
    assert model_from_text(body["graph"]).n == 7


def test_reduce_rejects_malformed_problem(client):
    resp = client.post("/reduce", json={"problem": "max: 3 $$ nonsense"})
    assert resp.status_code == 400
    assert "detail" in resp.json()


# ---------------------------------------------------------------------------
# /solve

def test_solve_problem_mode(client, ckp_text):
    resp = client.post(
        "/solve",
        json={"problem": ckp_text, "q_cap": 10, "seed": 7, **CKP_OVERRIDES},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["kind"] == "problem"
    assert body["objective"] == pytest.approx(39)
    assert body["bitstring"] == "1011111"
    assert body["feasible"] is True
    assert body["violations"] == []
    assert body["assignment"]["x1"] == 1
    assert body["n"] == 7


def test_solve_graph_mode(client, nine_graph_text):
    resp = client.post(
        "/solve", json={"graph": nine_graph_text, "q_cap": 6, "seed": 0}
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["kind"] == "graph"
    assert body["n"] == 9
    assert body["global_value"] == pytest.approx(-10)
    assert body["r"] == pytest.approx(1.0)
    assert body["baseline_value"] is not None
    assert body["global_value"] <= body["baseline_value"]
    assert len(body["z"]) == 9
    assert body["tree_height"] == len(body["per_level"]) - 1


def test_solve_baseline_can_be_hidden(client, nine_graph_text):
    resp = client.post(
        "/solve",
        json={"graph": nine_graph_text, "q_cap": 6, "seed": 0, "baseline": "none"},
    )
    assert resp.status_code == 200
    assert resp.json()["baseline_value"] is None


def test_solve_requires_exactly_one_input(client, ckp_text, nine_graph_text):
    both = client.post(
        "/solve", json={"problem": ckp_text, "graph": nine_graph_text}
    )
    assert both.status_code == 422
    neither = client.post("/solve", json={})
    assert neither.status_code == 422


def test_solve_validates_partition_method(client, nine_graph_text):
    resp = client.post(
        "/solve", json={"graph": nine_graph_text, "partition": "spectral"}
    )
    assert resp.status_code == 422


# ---------------------------------------------------------------------------
# /oracle

def test_oracle_nine_node(client, nine_graph_text):
    resp = client.post("/oracle", json={"graph": nine_graph_text})
    assert resp.status_code == 200
    body = resp.json()
    assert body["value"] == pytest.approx(-10)
    assert body["n"] == 9
    assert set(body["z"]) <= {-1, 1}


def test_oracle_rejects_oversized_graphs(client):
    resp = client.post("/oracle", json={"graph": "q 0 27 1\n"})
    assert resp.status_code == 400
    assert "capped" in resp.json()["detail"]


def test_oracle_rejects_malformed_graph(client):
    resp = client.post("/oracle", json={"graph": "q 0 zebra 1\n"})
    assert resp.status_code == 400


# ---------------------------------------------------------------------------
# /gen

def test_gen_regular(client):
    resp = client.post("/gen", json={"kind": "regular", "n": 4, "d": 3, "seed": 1})
    assert resp.status_code == 200
    body = resp.json()
    assert body["edges"] == 6
    assert model_from_text(body["graph"]).n == 4


def test_gen_er(client):
    resp = client.post(
        "/gen", json={"kind": "er", "n": 12, "avg_degree": 3.0, "seed": 2}
    )
    assert resp.status_code == 200
    assert resp.json()["n"] == 12


def test_gen_missing_class_parameter(client):
    resp = client.post("/gen", json={"kind": "regular", "n": 4, "seed": 1})
    assert resp.status_code == 400
    resp = client.post("/gen", json={"kind": "er", "n": 4, "seed": 1})
    assert resp.status_code == 400


def test_gen_infeasible_regular(client):
    resp = client.post("/gen", json={"kind": "regular", "n": 5, "d": 3})
    assert resp.status_code == 400
    assert "even" in resp.json()["detail"]


# ---------------------------------------------------------------------------
# /bench

def test_bench_endpoint(client):
    spec = {
        "class": "UR",
        "n": 8,
        "degree": 3,
        "q": 4,
        "methods": ["naive-louvain"],
        "seeds": 2,
        "qaoa": {"iterations": 25},
    }
    resp = client.post("/bench", json={"spec": spec})
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["rows"]) == 2
    assert body["csv"].splitlines()[0] == (
        "class,method,seed,n,q,r,value,Q_modularity,tree_height,runtime_ms"
    )
    assert body["summary"][0]["reference"] == "exhaustive"


def test_bench_rejects_unknown_fields(client):
    resp = client.post(
        "/bench", json={"spec": {"class": "UR", "n": 8, "degree": 3, "bogus": 1}}
    )
    assert resp.status_code == 400
    assert "bogus" in resp.json()["detail"]
