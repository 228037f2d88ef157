import pytest
from fastapi.testclient import TestClient

from ifr.main import app

client = TestClient(app)
BASE = "/api/v1/regression"


@pytest.fixture(scope="module")
def simulated():
    response = client.post(f"{BASE}/simulate", json={"case": 2, "n": 12, "grid_size": 20, "seed": 4})
    assert response.status_code == 200
    return response.json()


def _predict_payload(rows, **overrides):
    train = [r for r in rows if int(r["entity"].split("-")[1]) <= 9]
    new = [r for r in rows if int(r["entity"].split("-")[1]) > 9 and r["variable"] != "y"]
    payload = {"model": "cm", "basis_k": 8, "train": train, "new": new}
    payload.update(overrides)
    return payload


class TestService:
    def test_health(self):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"

    def test_root_lists_models(self):
        assert client.get("/").json()["models"] == ["flm", "cm", "crm", "bcrm", "mcm"]

    def test_cases(self):
        cases = client.get(f"{BASE}/cases").json()
        assert [c["index"] for c in cases] == [1, 2, 3, 4]
        assert cases[3]["response_offset"] == [8.0, 20.0]


class TestSimulate:
    def test_rows(self, simulated):
        assert simulated["seed"] == 4
        assert len(simulated["rows"]) == 4 * 12 * 20
        assert all(r["lower"] <= r["upper"] for r in simulated["rows"])

    def test_invalid_case(self):
        assert client.post(f"{BASE}/simulate", json={"case": 7}).status_code == 422


class TestPredict:
    def test_cm(self, simulated):
        response = client.post(f"{BASE}/predict", json=_predict_payload(simulated["rows"]))
        assert response.status_code == 200
        body = response.json()
        assert body["model"] == "cm"
        assert body["n_train"] == 9
        assert len(body["predictions"]) == 3 * 20
        assert body["band"] is None
        assert body["in_sample_amse_lower"] > 0

    def test_mcm_band(self, simulated):
        payload = _predict_payload(simulated["rows"], model="mcm", mcm_b=3, alpha=0.2)
        body = client.post(f"{BASE}/predict", json=payload).json()
        assert len(body["band"]) == 3 * 20
        assert all(r["lower_band_low"] <= r["lower_band_high"] for r in body["band"])

    def test_unknown_model(self, simulated):
        response = client.post(f"{BASE}/predict", json=_predict_payload(simulated["rows"], model="pls"))
        assert response.status_code == 400

    def test_band_needs_mcm(self, simulated):
        response = client.post(f"{BASE}/predict", json=_predict_payload(simulated["rows"], alpha=0.1))
        assert response.status_code == 400
        assert "mcm" in response.json()["detail"]

    def test_inverted_training_row(self, simulated):
        payload = _predict_payload(simulated["rows"])
        payload["train"][0] = {**payload["train"][0], "lower": 100.0, "upper": 0.0}
        response = client.post(f"{BASE}/predict", json=payload)
        assert response.status_code == 400
        assert "lower exceeds upper" in response.json()["detail"]
