import json
import time

import pytest
from fastapi.testclient import TestClient

from wordaff.service import create_app
from wordaff.synthgen import SynthSpec, generate_document


def doc_payload(seed=1, n_items=4):
    doc, _ = generate_document(SynthSpec(template="SCHEDULE", seed=seed, n_items=n_items))
    return doc.to_payload()


FAST_RUN = {"train": {"epochs": 2}}


@pytest.fixture
def client(tmp_path):
    app = create_app(data_dir=tmp_path / "data", seed=0)
    with TestClient(app) as c:
        yield c


def upload_and_run(client, payload=None, overrides=FAST_RUN):
    resp = client.post("/documents", json=payload or doc_payload())
    assert resp.status_code == 201
    doc_id = resp.json()["doc_id"]
    run = client.post(f"/documents/{doc_id}/run", json=overrides)
    assert run.status_code == 200, run.text
    return doc_id, run.json()


class TestDocuments:
    def test_create(self, client):
        resp = client.post("/documents", json=doc_payload())
        assert resp.status_code == 201
        assert resp.json()["doc_id"]

    def test_fresh_id_on_collision(self, client):
        a = client.post("/documents", json=doc_payload()).json()["doc_id"]
        b = client.post("/documents", json=doc_payload()).json()["doc_id"]
        assert a != b

    def test_invalid_document(self, client):
        resp = client.post("/documents", json={"doc_id": "x", "aspect_ratio": -1, "words": []})
        assert resp.status_code == 422
        body = resp.json()
        assert body["code"] == "INVALID_DOCUMENT" and "message" in body

    def test_unknown_document(self, client):
        resp = client.get("/documents/nope/clusters")
        assert resp.status_code == 404
        assert resp.json()["code"] == "UNKNOWN_DOCUMENT"


class TestRunAndRead:
    def test_clusters_before_run_409(self, client):
        doc_id = client.post("/documents", json=doc_payload()).json()["doc_id"]
        resp = client.get(f"/documents/{doc_id}/clusters")
        assert resp.status_code == 409
        assert resp.json()["code"] == "NOT_RUN"

    def test_run_then_read(self, client):
        doc_id, body = upload_and_run(client)
        assert body["clusters"]["n_clusters"] >= 1
        clusters = client.get(f"/documents/{doc_id}/clusters").json()
        assert {c["id"] for c in clusters["clusters"]}
        proj = client.get(f"/documents/{doc_id}/projection").json()
        n_words = len(doc_payload()["words"])
        assert len(proj["points"]) == n_words
        assert {"word_id", "x", "y", "cluster_id"} <= set(proj["points"][0])

    def test_invalid_config_override(self, client):
        doc_id = client.post("/documents", json=doc_payload()).json()["doc_id"]
        resp = client.post(f"/documents/{doc_id}/run", json={"train": {"bogus": 1}})
        assert resp.status_code == 422
        assert resp.json()["code"] == "INVALID_CONFIG"

    def test_render_svg(self, client):
        doc_id, _ = upload_and_run(client)
        resp = client.get(f"/documents/{doc_id}/render.svg")
        assert resp.status_code == 200
        assert resp.headers["content-type"].startswith("image/svg+xml")
        assert resp.text.startswith("<svg")


class TestConstraintsAndRefine:
    def test_constraints_then_refine(self, client):
        doc_id, _ = upload_and_run(client)
        words = [p["word_id"] for p in
                 client.get(f"/documents/{doc_id}/projection").json()["points"]]
        sel = [{"kind": "must_group", "word_ids": words[:4]}]
        resp = client.post(f"/documents/{doc_id}/constraints", json=sel)
        assert resp.status_code == 200
        assert resp.json()["stats"]["user_must"] == 6
        refined = client.post(f"/documents/{doc_id}/refine", json={"epochs": 1})
        assert refined.status_code == 200
        assert refined.json()["clusters"]["n_clusters"] >= 1

    def test_conflicting_selections_422(self, client):
        doc_id, _ = upload_and_run(client)
        words = [p["word_id"] for p in
                 client.get(f"/documents/{doc_id}/projection").json()["points"]]
        sel = [
            {"kind": "must_group", "word_ids": words[:2]},
            {"kind": "cannot_group", "group_a": [words[0]], "group_b": [words[1]]},
        ]
        resp = client.post(f"/documents/{doc_id}/constraints", json=sel)
        assert resp.status_code == 422
        body = resp.json()
        assert body["code"] == "CONSTRAINT_CONFLICT"
        assert str(sorted((words[0], words[1]))[0]) in body["message"]

    def test_invalid_selection_422(self, client):
        doc_id, _ = upload_and_run(client)
        resp = client.post(f"/documents/{doc_id}/constraints",
                           json=[{"kind": "must_group", "word_ids": [1]}])
        assert resp.status_code == 422
        assert resp.json()["code"] == "INVALID_SELECTION"

    def test_refine_before_run_409(self, client):
        doc_id = client.post("/documents", json=doc_payload()).json()["doc_id"]
        resp = client.post(f"/documents/{doc_id}/refine", json={})
        assert resp.status_code == 409


class TestEdits:
    def test_edit_round_trip(self, client):
        doc_id, _ = upload_and_run(client)
        clusters = client.get(f"/documents/{doc_id}/clusters").json()["clusters"]
        cid = clusters[0]["id"]
        resp = client.post(f"/documents/{doc_id}/edits",
                           json={"cluster_id": cid,
                                 "spec": {"kind": "set_color", "color_rgb": [200, 0, 0]}})
        assert resp.status_code == 200
        entry = resp.json()["entry"]
        assert entry["cluster_id"] == cid and entry["affected_word_ids"]
        svg = client.get(f"/documents/{doc_id}/render.svg").text
        assert "rgb(200,0,0)" in svg

    def test_delete_edit_prunes(self, client):
        doc_id, _ = upload_and_run(client)
        clusters = client.get(f"/documents/{doc_id}/clusters").json()["clusters"]
        cid, wids = clusters[0]["id"], clusters[0]["word_ids"]
        resp = client.post(f"/documents/{doc_id}/edits",
                           json={"cluster_id": cid, "spec": {"kind": "delete"}})
        assert resp.status_code == 200
        after = client.get(f"/documents/{doc_id}/clusters").json()["clusters"]
        remaining = {w for c in after for w in c["word_ids"]}
        assert not (set(wids) & remaining)
        proj = client.get(f"/documents/{doc_id}/projection").json()["points"]
        assert not ({p["word_id"] for p in proj} & set(wids))

    def test_bad_edit_422(self, client):
        doc_id, _ = upload_and_run(client)
        resp = client.post(f"/documents/{doc_id}/edits",
                           json={"cluster_id": 0, "spec": {"kind": "scale_font", "factor": -1}})
        assert resp.status_code == 422


class TestPersistence:
    def test_restart_replays_identical_bodies(self, tmp_path):
        data_dir = tmp_path / "data"
        app = create_app(data_dir=data_dir, seed=0)
        with TestClient(app) as client:
            doc_id, _ = upload_and_run(client)
            clusters1 = client.get(f"/documents/{doc_id}/clusters").content
            proj1 = client.get(f"/documents/{doc_id}/projection").content

        app2 = create_app(data_dir=data_dir, seed=0)
        with TestClient(app2) as client2:
            clusters2 = client2.get(f"/documents/{doc_id}/clusters").content
            proj2 = client2.get(f"/documents/{doc_id}/projection").content
        assert clusters1 == clusters2
        assert proj1 == proj2


class TestInFlight:
    def test_long_run_202_and_409(self, tmp_path):
        app = create_app(data_dir=tmp_path / "data", seed=0, run_timeout=0.05)
        with TestClient(app) as client:
            doc_id = client.post("/documents", json=doc_payload(n_items=6)).json()["doc_id"]
            resp = client.post(f"/documents/{doc_id}/run", json={"train": {"epochs": 40}})
            assert resp.status_code == 202
            poll = resp.json()["poll"]

            second = client.post(f"/documents/{doc_id}/run", json=FAST_RUN)
            assert second.status_code == 409
            assert second.json()["code"] == "IN_FLIGHT"
            refine = client.post(f"/documents/{doc_id}/refine", json={})
            assert refine.status_code == 409

            deadline = time.time() + 30
            state = None
            while time.time() < deadline:
                state = client.get(poll).json()
                if state["state"] in ("ready", "failed"):
                    break
                time.sleep(0.1)
            assert state and state["state"] == "ready"
            clusters = client.get(f"/documents/{doc_id}/clusters")
            assert clusters.status_code == 200
