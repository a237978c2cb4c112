"""HTTP API: analysis, recommendation, sessions, and bookmarks.

All responses are JSON; errors arrive as {"error": {"status", "kind",
"message"}} with 4xx statuses for anything wrong with the request. The
model and lexicon are loaded once and shared read-only across requests;
the session store serializes its own writes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import __version__
from .colors import hex_to_lab
from .extract import annotations_from_json, extract_document
from .extract.raster import RasterImage
from .model import CapacityError, MAX_NODES, StructuralError, doc_from_json, doc_to_json
from .prefs import (
    Lexicon,
    PreferenceError,
    PreferenceSet,
    UnknownWordError,
    load_lexicon,
    recommend,
)
from .store import NotFoundError, SessionStore
from .vaeac import VaeacModel, load_model

DEFAULT_N = 5


@dataclass
class ServiceConfig:
    model_path: Optional[str] = None
    lexicon_path: Optional[str] = None
    store_path: str = "palettizer-store.json"
    host: str = "127.0.0.1"
    port: int = 8765
    default_n: int = DEFAULT_N
    seed_policy: str = "per-request"  # or "fixed"
    fixed_seed: int = 0
    max_nodes: int = MAX_NODES

    @classmethod
    def from_file(cls, path) -> "ServiceConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(**json.load(fh))

    @classmethod
    def from_env(cls) -> "ServiceConfig":
        path = os.environ.get("PALETTIZER_CONFIG")
        return cls.from_file(path) if path else cls()


class ApiError(Exception):
    def __init__(self, status: int, kind: str, message: str):
        self.status = status
        self.kind = kind
        self.message = message
        super().__init__(message)


def _error_response(status: int, kind: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"status": status, "kind": kind, "message": message}},
    )


def _parse_preferences(payload: dict) -> PreferenceSet:
    if not isinstance(payload, dict):
        raise ApiError(422, "bad_preferences", "preferences must be an object")
    exact = {}
    for nid, hexval in (payload.get("exact") or {}).items():
        try:
            exact[str(nid)] = hex_to_lab(str(hexval))
        except ValueError as exc:
            raise ApiError(422, "bad_color", f"node {nid}: {exc}")
    vague = {str(k): str(v) for k, v in (payload.get("vague") or {}).items()}
    raw_bindings = payload.get("bindings") or []
    if not isinstance(raw_bindings, list):
        raise ApiError(422, "bad_preferences", "bindings must be a list of node-id lists")
    bindings = []
    for group in raw_bindings:
        if not isinstance(group, list) or not all(isinstance(g, str) for g in group):
            raise ApiError(422, "bad_preferences", "bindings must be a list of node-id lists")
        if group:
            bindings.append(frozenset(group))
    return PreferenceSet(exact=exact, vague=vague, bindings=tuple(bindings))


def preferences_payload(prefs: PreferenceSet) -> dict:
    """Canonical JSON form of a preference set (the client contract)."""
    from .colors import lab_to_hex

    return {
        "bindings": sorted(sorted(g) for g in prefs.bindings),
        "exact": {nid: lab_to_hex(c) for nid, c in sorted(prefs.exact.items())},
        "vague": {nid: w for nid, w in sorted(prefs.vague.items())},
    }


def create_app(
    model: Optional[VaeacModel] = None,
    lexicon: Optional[Lexicon] = None,
    store: Optional[SessionStore] = None,
    config: Optional[ServiceConfig] = None,
) -> FastAPI:
    config = config or ServiceConfig.from_env()
    if model is None and config.model_path:
        model = load_model(config.model_path)
    if lexicon is None:
        lexicon = load_lexicon(config.lexicon_path)
    if store is None:
        store = SessionStore(config.store_path)

    app = FastAPI(title="palettizer", version=__version__)
    state = {"requests_served": 0}

    @app.exception_handler(ApiError)
    async def api_error_handler(_req: Request, exc: ApiError):
        return _error_response(exc.status, exc.kind, exc.message)

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_req: Request, exc: RequestValidationError):
        return _error_response(422, "validation", str(exc.errors()[:3]))

    @app.exception_handler(StarletteHTTPException)
    async def http_handler(_req: Request, exc: StarletteHTTPException):
        return _error_response(exc.status_code, "http", str(exc.detail))

    @app.get("/api/health")
    def health():
        return {"status": "ok", "version": __version__, "model_loaded": model is not None}

    @app.get("/api/lexicon")
    def lexicon_words():
        return {
            "words": [
                {"word": w, "category": lexicon.category(w)} for w in lexicon.words()
            ]
        }

    @app.post("/api/sessions")
    def create_session():
        return store.create_session()

    @app.get("/api/sessions/{sid}")
    def get_session(sid: str):
        try:
            return store.get_session(sid)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc))

    @app.post("/api/analyze")
    async def analyze(image: UploadFile, annotations: Optional[UploadFile] = None):
        raw = await image.read()
        try:
            img = RasterImage.from_bytes(raw)
        except Exception:
            raise ApiError(400, "bad_image", "request image is not a decodable PNG")
        ann_payload = {}
        if annotations is not None:
            try:
                ann_payload = json.loads((await annotations.read()).decode("utf-8"))
            except Exception:
                raise ApiError(400, "bad_annotations", "annotation JSON is unreadable")
        try:
            ann = annotations_from_json(ann_payload)
            doc = extract_document(img, ann, max_nodes=config.max_nodes)
        except CapacityError as exc:
            raise ApiError(422, "capacity", str(exc))
        except (ValueError, StructuralError) as exc:
            raise ApiError(422, "bad_annotations", str(exc))
        payload = doc_to_json(doc)
        doc_id = store.save_document(payload)
        colors = {n["id"]: n["color"] for n in payload["nodes"]}
        layout = [
            {
                "id": node.id,
                "kind": node.kind,
                "element_type": node.element_type,
                "depth": doc.depth(node.id),
                "bbox": list(node.bbox),
                "colorable": node.colorable,
                "color": colors[node.id],
            }
            for node in doc.preorder()
        ]
        return {"doc_id": doc_id, "document": payload, "layout": layout}

    @app.post("/api/recommend")
    async def recommend_endpoint(request: Request):
        if model is None:
            raise ApiError(503, "no_model", "no model checkpoint is loaded")
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "bad_json", "request body is not valid JSON")
        if not isinstance(body, dict):
            raise ApiError(422, "bad_request", "request body must be a JSON object")

        if "doc" in body and body["doc"] is not None:
            doc_payload = body["doc"]
        elif "doc_id" in body and body["doc_id"] is not None:
            try:
                doc_payload = store.get_document(str(body["doc_id"]))
            except NotFoundError as exc:
                raise ApiError(404, "not_found", str(exc))
        else:
            raise ApiError(422, "bad_request", "provide doc or doc_id")
        try:
            doc = doc_from_json(doc_payload)
        except (StructuralError, KeyError, TypeError, ValueError) as exc:
            raise ApiError(422, "bad_document", f"document rejected: {exc}")

        prefs = _parse_preferences(body.get("preferences") or {})
        n = body.get("n", config.default_n)
        if not isinstance(n, int) or n < 1 or n > 50:
            raise ApiError(422, "bad_request", "n must be an integer in 1..50")
        if body.get("seed") is not None:
            try:
                seed = int(body["seed"])
            except (TypeError, ValueError):
                raise ApiError(422, "bad_request", "seed must be an integer")
        elif config.seed_policy == "fixed":
            seed = config.fixed_seed
        else:
            seed = int.from_bytes(os.urandom(4), "little")

        try:
            palettes = recommend(doc, prefs, model, lexicon, n=n, seed=seed)
        except UnknownWordError as exc:
            raise ApiError(422, "unknown_word", str(exc))
        except PreferenceError as exc:
            raise ApiError(422, "bad_preferences", str(exc))
        except StructuralError as exc:
            raise ApiError(422, "bad_document", str(exc))

        result = [
            {
                "colors": p.colors_hex(),
                "source": p.source,
                "request_hash": p.request_hash,
                "sample_index": p.sample_index,
            }
            for p in palettes
        ]
        sid = body.get("session_id")
        if sid is not None:
            try:
                store.record_request(str(sid), body.get("doc_id"), preferences_payload(prefs), result)
            except NotFoundError as exc:
                raise ApiError(404, "not_found", str(exc))
        state["requests_served"] += 1
        return {"palettes": result, "seed": seed}

    @app.post("/api/sessions/{sid}/bookmarks")
    async def add_bookmark(sid: str, request: Request):
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "bad_json", "bookmark body is not valid JSON")
        if not isinstance(body, dict) or "palette" not in body:
            raise ApiError(422, "bad_request", "body must contain a palette object")
        palette = body["palette"]
        if not isinstance(palette, dict) or not isinstance(palette.get("colors"), dict):
            raise ApiError(422, "bad_request", "palette must have a colors map")
        for nid, hexval in palette["colors"].items():
            try:
                hex_to_lab(str(hexval))
            except ValueError as exc:
                raise ApiError(422, "bad_color", f"bookmark color {nid}: {exc}")
        try:
            return store.add_bookmark(sid, palette)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc))

    @app.get("/api/sessions/{sid}/bookmarks")
    def list_bookmarks(sid: str):
        try:
            return {"bookmarks": store.list_bookmarks(sid)}
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc))

    @app.delete("/api/sessions/{sid}/bookmarks/{bid}")
    def delete_bookmark(sid: str, bid: str):
        try:
            store.delete_bookmark(sid, bid)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc))
        return {"deleted": bid}

    @app.post("/api/sessions/{sid}/choose")
    async def choose(sid: str, request: Request):
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "bad_json", "body is not valid JSON")
        if not isinstance(body, dict):
            raise ApiError(422, "bad_request", "body must be a JSON object")
        try:
            store.choose(sid, int(body.get("history_index", -1)), int(body.get("palette_index", -1)))
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc))
        except (TypeError, ValueError):
            raise ApiError(422, "bad_request", "history_index and palette_index must be integers")
        return {"ok": True}

    return app


def serve(config: ServiceConfig) -> None:
    import uvicorn

    app = create_app(config=config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
