import json
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from palettizer.colors import hex_to_lab
from palettizer.model import doc_to_json
from palettizer.prefs import PreferenceSet, load_lexicon
from palettizer.service import ServiceConfig, create_app, preferences_payload
from palettizer.store import SessionStore
from palettizer.synth import make_corpus, make_docs, single_shape_card
from palettizer.vaeac import VaeacConfig, train

FIXTURE = Path(__file__).parent / "data" / "preference_payload.json"


@pytest.fixture(scope="module")
def model():
    corpus = make_corpus(150, seed=61)
    m, _ = train(corpus, VaeacConfig(epochs=10, hidden=48, latent_dim=6, seed=2, batch_size=64))
    return m


@pytest.fixture(scope="module")
def lexicon():
    return load_lexicon()


@pytest.fixture()
def client(model, lexicon, tmp_path):
    store = SessionStore(tmp_path / "store.json")
    app = create_app(model=model, lexicon=lexicon, store=store, config=ServiceConfig(store_path=str(tmp_path / "store.json")))
    return TestClient(app, raise_server_exceptions=False)


@pytest.fixture(scope="module")
def doc_payload():
    return doc_to_json(make_docs(1, seed=31)[0])


def test_health(client):
    r = client.get("/api/health")
    assert r.status_code == 200
    assert r.json()["model_loaded"]


def test_analyze_single_shape_card(client):
    img, ann = single_shape_card()
    from palettizer.extract.raster import annotations_to_json

    r = client.post(
        "/api/analyze",
        files={
            "image": ("card.png", img.to_png_bytes(), "image/png"),
            "annotations": ("ann.json", json.dumps(annotations_to_json(ann)).encode(), "application/json"),
        },
    )
    assert r.status_code == 200, r.text
    body = r.json()
    assert body["document"]["schema"] == "palettizer/1"
    assert len(body["document"]["nodes"]) == 3
    kinds = [n["kind"] for n in body["document"]["nodes"]]
    assert kinds == ["background", "artistic", "data"]
    depths = {item["id"]: item["depth"] for item in body["layout"]}
    assert sorted(depths.values()) == [0, 1, 2]
    assert "doc_id" in body


def test_analyze_corrupt_png(client):
    r = client.post("/api/analyze", files={"image": ("x.png", b"not a png", "image/png")})
    assert r.status_code == 400
    assert r.json()["error"]["kind"] == "bad_image"


def test_analyze_capacity(client):
    from palettizer.extract.raster import RasterImage

    px = np.full((100, 420, 3), 255, dtype=np.uint8)
    for i in range(22):
        px[30:70, 4 + 19 * i : 14 + 19 * i] = ((37 * i) % 200 + 20, 80, 140)
    img = RasterImage(px)
    r = client.post("/api/analyze", files={"image": ("x.png", img.to_png_bytes(), "image/png")})
    assert r.status_code == 422
    assert r.json()["error"]["kind"] == "capacity"


def test_recommend_inline_doc(client, doc_payload):
    r = client.post("/api/recommend", json={"doc": doc_payload, "n": 5, "seed": 4})
    assert r.status_code == 200, r.text
    palettes = r.json()["palettes"]
    assert len(palettes) == 5
    node_ids = {n["id"] for n in doc_payload["nodes"] if n["kind"] != "visual_group"}
    for p in palettes:
        assert set(p["colors"]) == node_ids
        for hexval in p["colors"].values():
            hex_to_lab(hexval)  # parses


def test_recommend_n1(client, doc_payload):
    r = client.post("/api/recommend", json={"doc": doc_payload, "n": 1, "seed": 4})
    assert r.status_code == 200
    assert len(r.json()["palettes"]) == 1


def test_recommend_pins_and_word(client, doc_payload):
    colorable = [n["id"] for n in doc_payload["nodes"] if n["kind"] not in ("visual_group", "background")]
    pins = {nid: "#FFFFFF" for nid in colorable[:2]}
    body = {
        "doc": doc_payload,
        "preferences": {"exact": pins, "vague": {"bg": "light"}},
        "n": 5,
        "seed": 11,
    }
    r = client.post("/api/recommend", json=body)
    assert r.status_code == 200, r.text
    for p in r.json()["palettes"]:
        for nid in pins:
            assert p["colors"][nid] == "#FFFFFF"


def test_recommend_unknown_word_names_it(client, doc_payload):
    r = client.post(
        "/api/recommend",
        json={"doc": doc_payload, "preferences": {"vague": {"bg": "blorp"}}, "seed": 1},
    )
    assert r.status_code == 422
    err = r.json()["error"]
    assert err["kind"] == "unknown_word"
    assert "blorp" in err["message"]


def test_recommend_unknown_doc_id(client):
    r = client.post("/api/recommend", json={"doc_id": "missing", "n": 2})
    assert r.status_code == 404


def test_recommend_seed_reproducible(client, doc_payload):
    a = client.post("/api/recommend", json={"doc": doc_payload, "n": 3, "seed": 99}).json()
    b = client.post("/api/recommend", json={"doc": doc_payload, "n": 3, "seed": 99}).json()
    assert a["palettes"] == b["palettes"]


def test_session_history_append_only(client, doc_payload):
    sid = client.post("/api/sessions").json()["id"]
    for i in range(3):
        r = client.post(
            "/api/recommend",
            json={"doc": doc_payload, "n": 2, "seed": i, "session_id": sid},
        )
        assert r.status_code == 200
    session = client.get(f"/api/sessions/{sid}").json()
    assert len(session["history"]) == 3


def test_bookmarks_crud_and_persistence(model, lexicon, tmp_path):
    store_path = tmp_path / "store.json"
    app = create_app(model=model, lexicon=lexicon, store=SessionStore(store_path))
    client = TestClient(app, raise_server_exceptions=False)
    sid = client.post("/api/sessions").json()["id"]
    palette = {"colors": {"bg": "#102030", "a1": "#FFFFFF"}}
    added = client.post(f"/api/sessions/{sid}/bookmarks", json={"palette": palette})
    assert added.status_code == 200
    bid = added.json()["id"]
    listed = client.get(f"/api/sessions/{sid}/bookmarks").json()["bookmarks"]
    assert [b["id"] for b in listed] == [bid]

    # simulated restart: fresh store instance over the same file
    app2 = create_app(model=model, lexicon=lexicon, store=SessionStore(store_path))
    client2 = TestClient(app2, raise_server_exceptions=False)
    survived = client2.get(f"/api/sessions/{sid}/bookmarks").json()["bookmarks"]
    assert [b["id"] for b in survived] == [bid]

    deleted = client2.delete(f"/api/sessions/{sid}/bookmarks/{bid}")
    assert deleted.status_code == 200
    assert client2.get(f"/api/sessions/{sid}/bookmarks").json()["bookmarks"] == []
    missing = client2.delete(f"/api/sessions/{sid}/bookmarks/{bid}")
    assert missing.status_code == 404


def test_bookmark_rejects_bad_color(client):
    sid = client.post("/api/sessions").json()["id"]
    r = client.post(f"/api/sessions/{sid}/bookmarks", json={"palette": {"colors": {"bg": "nope"}}})
    assert r.status_code == 422


def test_malformed_requests_structured_errors(client, doc_payload):
    cases = [
        ("POST", "/api/recommend", b"{broken json"),
        ("POST", "/api/recommend", json.dumps({"n": 3}).encode()),
        ("POST", "/api/recommend", json.dumps({"doc": {"schema": "wrong"}}).encode()),
        ("POST", "/api/recommend", json.dumps({"doc": doc_payload, "n": -4}).encode()),
        ("POST", "/api/recommend", json.dumps({"doc": doc_payload, "n": "five"}).encode()),
        ("POST", "/api/recommend", json.dumps({"doc": doc_payload, "preferences": {"exact": {"bg": "zzz"}}}).encode()),
        ("POST", "/api/recommend", json.dumps({"doc": doc_payload, "preferences": {"bindings": "no"}}).encode()),
        ("POST", "/api/sessions/nosuch/bookmarks", json.dumps({"palette": {"colors": {}}}).encode()),
        ("POST", "/api/analyze", b"whatever"),
        ("DELETE", "/api/sessions/nosuch/bookmarks/x", b""),
    ]
    for method, url, body in cases:
        r = client.request(method, url, content=body, headers={"content-type": "application/json"})
        assert 400 <= r.status_code < 500, (url, r.status_code, r.text)
        assert "error" in r.json(), (url, r.text)


def test_preference_payload_matches_fixture(lexicon):
    prefs = PreferenceSet(
        exact={"text1": hex_to_lab("#FFFFFF"), "text2": hex_to_lab("#FFFFFF")},
        vague={"bg": "light"},
        bindings=(frozenset({"text1", "text2"}),),
    )
    canonical = json.dumps(preferences_payload(prefs), sort_keys=True, separators=(",", ":"))
    assert canonical.encode() == FIXTURE.read_bytes().rstrip(b"\n")
