import pytest
from fastapi.testclient import TestClient

from app.core.constants import MEASURED_LINEWIDTH_MHZ, SHORT_CAVITY_FINESSE
from app.main import app


@pytest.fixture
def client():
    with TestClient(app) as test_client:
        yield test_client


def test_health(client):
    for path in ("/", "/health"):
        response = client.get(path)
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"


def test_design(client):
    response = client.post("/api/v1/design", json={
        "topology": "pc", "roc_um": 69.3, "length_um": 8.7, "lambda_nm": 1276,
    })
    assert response.status_code == 200
    body = response.json()
    assert body["waist_um"] == pytest.approx(3.05, abs=0.02)
    assert body["loss"]["total_ppm"] == pytest.approx(body["total_loss_ppm"])


def test_design_unstable_is_unprocessable(client):
    response = client.post("/api/v1/design", json={
        "topology": "pc", "roc_um": 10, "length_um": 12, "lambda_nm": 1276,
    })
    assert response.status_code == 422
    assert "g1*g2" in response.json()["detail"]
    assert response.json()["error_code"] == "DomainError"


def test_design_needs_one_length(client):
    response = client.post("/api/v1/design", json={
        "topology": "pc", "roc_um": 69.3, "length_um": 8.7, "spacing_um": 6.6, "lambda_nm": 1276,
    })
    assert response.status_code == 422


def test_table1(client):
    response = client.get("/api/v1/table1")
    assert response.status_code == 200
    assert response.json()["geometry_within"] is True


def test_spectrum_upload(client, sideband_csv):
    with open(sideband_csv, "rb") as handle:
        response = client.post(
            "/api/v1/spectrum",
            files={"file": ("scan.csv", handle, "text/csv")},
            data={"x_unit": "sample_index", "sideband_mhz": "200", "fsr_thz": "20.3"},
        )
    assert response.status_code == 200
    body = response.json()
    assert body["source"] == "scan.csv"
    assert body["fit"]["fwhm_mhz"] == pytest.approx(MEASURED_LINEWIDTH_MHZ, abs=2.0)
    assert body["finesse"] == pytest.approx(SHORT_CAVITY_FINESSE, abs=0.12e5)


def test_spectrum_bad_file(client):
    response = client.post(
        "/api/v1/spectrum",
        files={"file": ("scan.csv", b"time,power\n0,1\n", "text/csv")},
    )
    assert response.status_code == 400
    assert "x, signal" in response.json()["detail"]
    assert response.json()["error_code"] == "InputFormatError"


def test_profile_upload(client, surface_csv):
    with open(surface_csv, "rb") as handle:
        response = client.post(
            "/api/v1/profile",
            files={"file": ("surface.csv", handle, "text/csv")},
            data={"quartic": "true"},
        )
    assert response.status_code == 200
    assert response.json()["roc_um"] == pytest.approx(105.6, rel=1e-2)


def test_sweep(client):
    response = client.post("/api/v1/sweep", json={"calibration": "PC-a2", "length_min_um": 10,
                                                  "length_max_um": 45, "n_points": 8})
    assert response.status_code == 200
    body = response.json()
    assert body["calibration"] == "PC-a2"
    assert all(point["length_um"] <= 40 for point in body["points"])
    assert body["warnings"]


def test_sweep_unknown_calibration(client):
    response = client.post("/api/v1/sweep", json={"calibration": "nope"})
    assert response.status_code == 422
