# tests/test_api.py
import pytest
from fastapi.testclient import TestClient

from app.database import get_db
from app.main import app
from app.services.commands import save_census
from app.services.graph import IsogenyGraph, census


@pytest.fixture
def client(db):
    def _db():
        yield db

    app.dependency_overrides[get_db] = _db
    yield TestClient(app)
    app.dependency_overrides.clear()


def test_healthz(client):
    assert client.get("/healthz").json() == {"ok": True}


def test_census_save_and_history(client):
    r = client.post("/api/census", json={"p_min": 29, "p_max": 31, "save": True})
    assert r.status_code == 200
    assert [x["p"] for x in r.json()] == [29, 31]
    hist = client.get("/api/census/history", params={"p": 31}).json()
    assert len(hist) == 1 and hist[0]["supersingular_count"] == 3


def test_census_empty_range(client):
    assert client.post("/api/census", json={"p_min": 40, "p_max": 30}).json() == []


def test_walk(client):
    r = client.get("/api/census/walk", params={"p": 31, "length": 4, "seed": 2})
    assert r.status_code == 200
    assert len(r.json()["vertices"]) == 5


def test_hash_and_attack(client):
    r = client.post("/api/hash", json={"p": 31, "input_hex": "2", "bits": 2})
    assert r.status_code == 200
    j_hash = r.json()["j_hash"]
    r = client.post("/api/hash/attack", json={"p": 31, "input_hex": "2", "bits": 2})
    assert r.status_code == 200
    body = r.json()
    assert body["input"] == "10" and body["second_preimage"] != "10"
    assert body["j_hash"] == j_hash


def test_attack_needs_3_mod_4(client):
    r = client.post("/api/hash/attack", json={"p": 101, "input_hex": "1"})
    assert r.status_code == 422


def test_prime_validation(client):
    assert client.post("/api/hash", json={"p": 33}).status_code == 422
    assert client.post("/api/endring", json={"p": 31, "j": "0"}).status_code == 422


def test_endring_desk_cap(client, monkeypatch):
    monkeypatch.setenv("ENDRING_DESK_CAP", "50")
    r = client.post("/api/endring", json={"p": 103, "j": "1728"})
    assert r.status_code == 413
    assert "DeskScaleExceeded" in r.json()["detail"]


def test_missing_run(client):
    assert client.get("/api/endring/runs/999").status_code == 404


def test_experiment_history_empty(client):
    assert client.get("/api/experiments/history").json() == []


def test_persisted_census_row(db):
    row = save_census(db, census(IsogenyGraph(31)))
    assert row.id is not None and row.p == 31
