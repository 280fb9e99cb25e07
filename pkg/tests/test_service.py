"""HTTP layer over the trial engine.

Ground truth for the walks comes from the session event log (the
begin_testing events record item labels); the HTTP payloads themselves
must never carry them.
"""

import json

import pytest
from fastapi.testclient import TestClient

from gestaltbench.raster import decode_png
from gestaltbench.service import create_app
from gestaltbench.trial import read_events, summarize

TASK = "symmetry_global"


@pytest.fixture()
def api(trial_root, tmp_path):
    app = create_app(trial_root, log_dir=tmp_path)
    with TestClient(app) as client:
        client.log_dir = tmp_path
        yield client


def _create(api, seed=1, biased=False):
    r = api.post("/api/sessions",
                 json={"task": TASK, "seed": seed, "biased": biased})
    assert r.status_code == 200
    return r.json()


def _labels_from_log(api, sid):
    """item_id -> label for every item the engine has dealt so far."""
    events = read_events(api.log_dir / f"{sid}.jsonl")
    out = {}
    for e in events:
        if e["event"] == "begin_testing":
            for it in e["items"]:
                out[it["item_id"]] = it["label"]
    return out


def _answer_round(api, sid, first_item, wrong_indices=()):
    labels = _labels_from_log(api, sid)
    item = first_item
    for i in range(20):
        given = labels[item["item_id"]]
        if i in wrong_indices:
            given = 1 - given
        r = api.post(f"/api/sessions/{sid}/answers",
                     json={"item_id": item["item_id"], "class_id": given,
                           "response_ms": 120.5})
        assert r.status_code == 200
        body = r.json()
        if body["verdict"] is not None:
            return body
        item = body["item"]
    raise AssertionError("no verdict after 20 answers")


class TestCreate:
    def test_initial_state(self, api):
        state = _create(api, seed=1)
        assert state["task"] == TASK
        assert state["phase"] == {"kind": "training", "round": 1}
        assert state["examples_seen"] == 24
        assert state["training_set"] == "a1"
        for cls in ("class0", "class1"):
            entries = state["exhibit"][cls]
            assert len(entries) == 12
            for e in entries:
                assert e["image_url"] == f"/api/images/{e['path']}"

    def test_state_roundtrip(self, api):
        state = _create(api, seed=2)
        r = api.get(f"/api/sessions/{state['session']}")
        assert r.status_code == 200
        assert r.json() == state

    def test_unknown_task_maps_to_400(self, api):
        r = api.post("/api/sessions", json={"task": "nonsense", "seed": 0})
        assert r.status_code == 400
        body = r.json()
        assert body["error"] == "data"
        assert "nonsense" in body["detail"]

    def test_unknown_session_is_404(self, api):
        assert api.get("/api/sessions/deadbeef").status_code == 404
        assert api.post("/api/sessions/deadbeef/begin").status_code == 404

    def test_exhibit_images_decode(self, api):
        state = _create(api, seed=3)
        url = state["exhibit"]["class0"][0]["image_url"]
        r = api.get(url)
        assert r.status_code == 200
        assert r.headers["content-type"] == "image/png"
        img = decode_png(r.content)
        assert img.shape == (200, 200)


class TestTrainingRoutes:
    def test_more_examples(self, api):
        state = _create(api, seed=4)
        sid = state["session"]
        r = api.post(f"/api/sessions/{sid}/more", json={"class_id": 1})
        assert r.status_code == 200
        body = r.json()
        assert body["examples_seen"] == 27
        assert len(body["samples"]) == 3
        for e in body["samples"]:
            assert e["label"] == 1
            assert e["image_url"].startswith("/api/images/")

    def test_bad_class_maps_to_409(self, api):
        sid = _create(api, seed=4)["session"]
        r = api.post(f"/api/sessions/{sid}/more", json={"class_id": 5})
        assert r.status_code == 409
        assert r.json()["error"] == "protocol"


class TestTestingRoutes:
    def test_item_payloads_carry_no_ground_truth(self, api):
        sid = _create(api, seed=5)["session"]
        r = api.post(f"/api/sessions/{sid}/begin")
        assert r.status_code == 200
        item = r.json()["item"]
        assert set(item) == {"item_id", "round", "index", "total", "image_url"}
        assert item["image_url"] == \
            f"/api/sessions/{sid}/items/{item['item_id']}/image"
        # nothing in the serialized payload names a class or a sample path
        text = json.dumps(r.json()["item"])
        assert "label" not in text
        assert "/0/" not in text and "/1/" not in text
        assert TASK + "/" not in text

    def test_item_images_serve_the_logged_sample(self, api, trial_root):
        from gestaltbench.dataset import load_png

        sid = _create(api, seed=6)["session"]
        item = api.post(f"/api/sessions/{sid}/begin").json()["item"]
        r = api.get(f"/api/sessions/{sid}/items/{item['item_id']}/image")
        assert r.status_code == 200
        served = decode_png(r.content)
        events = read_events(api.log_dir / f"{sid}.jsonl")
        begin = next(e for e in events if e["event"] == "begin_testing")
        path = next(it["path"] for it in begin["items"]
                    if it["item_id"] == item["item_id"])
        assert (served == load_png(trial_root / path)).all()

    def test_unknown_item_image_is_409(self, api):
        sid = _create(api, seed=6)["session"]
        api.post(f"/api/sessions/{sid}/begin")
        r = api.get(f"/api/sessions/{sid}/items/r9a9i99/image")
        assert r.status_code == 409

    def test_duplicate_answer_is_409(self, api):
        sid = _create(api, seed=7)["session"]
        item = api.post(f"/api/sessions/{sid}/begin").json()["item"]
        ok = api.post(f"/api/sessions/{sid}/answers",
                      json={"item_id": item["item_id"], "class_id": 0})
        assert ok.status_code == 200
        again = api.post(f"/api/sessions/{sid}/answers",
                         json={"item_id": item["item_id"], "class_id": 1})
        assert again.status_code == 409
        assert "duplicate" in again.json()["detail"]

    def test_answer_outside_testing_is_409(self, api):
        sid = _create(api, seed=7)["session"]
        r = api.post(f"/api/sessions/{sid}/answers",
                     json={"item_id": "r1a1i01", "class_id": 0})
        assert r.status_code == 409

    def test_answers_echo_no_correctness(self, api):
        sid = _create(api, seed=8)["session"]
        item = api.post(f"/api/sessions/{sid}/begin").json()["item"]
        r = api.post(f"/api/sessions/{sid}/answers",
                     json={"item_id": item["item_id"], "class_id": 0})
        body = r.json()
        assert body["verdict"] is None
        assert "correct" not in json.dumps(body)


class TestWalks:
    def test_perfect_walk_passes(self, api):
        sid = _create(api, seed=9)["session"]
        body = api.post(f"/api/sessions/{sid}/begin").json()
        for k in (1, 2, 3):
            reply = _answer_round(api, sid, body["item"])
            assert reply["verdict"]["result"] == "pass"
            assert reply["verdict"]["round"] == k
            body = reply  # pass auto-advances; next item rides the reply
            assert body["item"] is not None
        reply = _answer_round(api, sid, body["item"])
        assert reply["verdict"]["round"] == 4
        assert reply["item"] is None
        assert reply["phase"] == {"kind": "passed"}

        report = api.get(f"/api/sessions/{sid}/report").json()
        assert report["passed"] is True
        assert report["answers"] == 80
        # the served report is exactly the log summary
        replayed = summarize(read_events(api.log_dir / f"{sid}.jsonl"))
        assert report == replayed
        assert all(r["mean_answer_ms"] == 120.5 for r in report["rounds"])

    def test_failed_round_returns_to_training(self, api):
        sid = _create(api, seed=10)["session"]
        body = api.post(f"/api/sessions/{sid}/begin").json()
        reply = _answer_round(api, sid, body["item"], wrong_indices=(4,))
        assert reply["verdict"]["result"] == "fail"
        assert reply["item"] is None
        assert reply["phase"] == {"kind": "training", "round": 2}
        state = api.get(f"/api/sessions/{sid}").json()
        assert state["training_set"] == "a2"
        assert state["failures"] == 1

    def test_biased_flag_reaches_the_engine(self, api):
        state = _create(api, seed=11, biased=True)
        assert state["biased"] is True


class TestImageRoute:
    def test_traversal_is_404(self, api):
        assert api.get("/api/images/../secrets.png").status_code == 404
        assert api.get(
            "/api/images/%2e%2e/secrets.png").status_code == 404

    def test_missing_sample_is_404(self, api):
        assert api.get(f"/api/images/{TASK}/a1/0/nope.png").status_code == 404


class TestStatic:
    def test_mounts_only_when_the_directory_exists(self, trial_root, tmp_path):
        missing = create_app(trial_root, static_dir=tmp_path / "nope")
        with TestClient(missing) as client:
            assert client.get("/").status_code == 404

        bundle = tmp_path / "dist"
        bundle.mkdir()
        (bundle / "index.html").write_text("<!doctype html><title>ui</title>")
        app = create_app(trial_root, static_dir=bundle)
        with TestClient(app) as client:
            r = client.get("/")
            assert r.status_code == 200
            assert "ui" in r.text
            # the api still wins over the static mount
            assert client.post(
                "/api/sessions", json={"task": TASK, "seed": 0}
            ).status_code == 200
