"""Tests for the HTTP endpoints"""
import pytest
from fastapi.testclient import TestClient

from backend import __version__
from backend.api.main import app
from backend.models import PipelineConfig
from backend.services import pipeline as pipeline_module
from backend.services.pipeline import LayoutPipeline

SEGMENT = "c_person xp_5 yp_10 w_20 h_8 c_horse ixn_3 iyp_2 w_6 h_4"

GRAPH = {
    "nodes": [{"node_id": 1, "class_label": "person"}, {"node_id": 2, "class_label": "horse"}],
    "relationships": [{"subject_id": 1, "predicate": "riding", "object_id": 2}],
}


def _box(label, x, y, w, h):
    return {"class_label": label, "box": {"x": x, "y": y, "w": w, "h": h}}


REFERENCE = {"1": _box("person", 5, 10, 20, 8), "2": _box("horse", 2, 12, 6, 4)}


@pytest.fixture(autouse=True)
def default_pipeline(monkeypatch):
    monkeypatch.setattr(pipeline_module, "_pipeline", LayoutPipeline(PipelineConfig()))


@pytest.fixture
def client():
    return TestClient(app)


class TestHealth:
    def test_health(self, client):
        """Test health reports the active encoding settings"""
        response = client.get("/api/health")
        assert response.status_code == 200
        assert response.json() == {
            "status": "healthy",
            "version": __version__,
            "grid_max": 40,
            "mode": "relative",
            "include_imgar": False,
        }


class TestEncode:
    """Test /api/encode"""

    def test_encode_sample(self, client):
        """Test encoding one raw sample into its three lines"""
        sample = {
            "id": "img1",
            "width": 800,
            "height": 600,
            "objects": [
                {"id": 1, "class": "Person", "box": [100, 200, 400, 160]},
                {"id": 2, "class": "horse", "box": [40, 240, 120, 80]},
                {"id": 4, "class": "tree", "box": [600, 0, 100, 300]},
            ],
            "relationships": [{"subject": 1, "predicate": "riding", "object": 2}],
        }
        response = client.post("/api/encode", json=sample)
        assert response.status_code == 200
        assert response.json() == {"id": "img1", "sf": "person riding horse", "nodes": "1 2", "bacs": SEGMENT}

    def test_sample_without_relationships(self, client):
        """Test a sample with nothing to encode is rejected"""
        sample = {"id": "x", "width": 10, "height": 10, "objects": [], "relationships": []}
        response = client.post("/api/encode", json=sample)
        assert response.status_code == 422
        assert "no relationships" in response.json()["detail"]


class TestDecode:
    """Test /api/decode"""

    def test_decode_with_frame(self, client):
        """Test decoding onto a known canvas restores the boxes"""
        response = client.post(
            "/api/decode",
            json={
                "bacs": SEGMENT,
                "sf": "person riding horse",
                "nodes": "1 2",
                "frame": {"grid_w": 40, "grid_h": 30, "ar_index": 17},
            },
        )
        assert response.status_code == 200
        body = response.json()
        assert (body["grid_w"], body["grid_h"]) == (40, 30)
        assert body["boxes"] == REFERENCE

    def test_misaligned_line(self, client):
        """Test a short line reports where it broke off"""
        truncated = SEGMENT.rsplit(" ", 1)[0]
        response = client.post("/api/decode", json={"bacs": truncated, "sf": "person riding horse", "nodes": "1 2"})
        assert response.status_code == 422
        body = response.json()
        assert body["position"] == 9
        assert body["expected"] == ["h"]

    def test_wrong_kind(self, client):
        """Test a wrong action kind reports the kinds allowed there"""
        swapped = SEGMENT.replace("ixn_3", "xp_3")
        response = client.post("/api/decode", json={"bacs": swapped, "sf": "person riding horse", "nodes": "1 2"})
        assert response.status_code == 422
        assert response.json()["position"] == 6
        assert response.json()["expected"] == ["ixn", "ixp"]


class TestEvaluate:
    """Test /api/evaluate"""

    def test_identical_layout(self, client):
        """Test a prediction equal to its reference scores 1.0"""
        response = client.post(
            "/api/evaluate", json={"graph": GRAPH, "prediction": REFERENCE, "references": [REFERENCE]}
        )
        assert response.status_code == 200
        body = response.json()
        assert body["score"] == pytest.approx(1.0)
        assert body["chosen_reference"] == 0

    def test_closest_reference_chosen(self, client):
        """Test the best matching reference is reported"""
        far = {"1": _box("person", 30, 0, 5, 5), "2": _box("horse", 0, 25, 5, 5)}
        response = client.post(
            "/api/evaluate", json={"graph": GRAPH, "prediction": REFERENCE, "references": [far, REFERENCE]}
        )
        assert response.json()["chosen_reference"] == 1

    def test_missing_box(self, client):
        """Test a node without a box is rejected"""
        response = client.post(
            "/api/evaluate",
            json={"graph": GRAPH, "prediction": {"1": REFERENCE["1"]}, "references": [REFERENCE]},
        )
        assert response.status_code == 422

    def test_references_required(self, client):
        """Test at least one reference is required"""
        response = client.post("/api/evaluate", json={"graph": GRAPH, "prediction": REFERENCE, "references": []})
        assert response.status_code == 422
