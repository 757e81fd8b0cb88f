"""HTTP session service exposing the analysis pipeline to scripts and the UI.

Sessions are in-memory and immutable once created: POST /sessions runs the
whole pipeline exactly once, every GET serves precomputed data.  Responses
follow the JSON schemas shipped under /schema.  There is no authentication,
persistence, or multi-tenancy.
"""

from __future__ import annotations

import io
import json
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, File, HTTPException, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import explain, pipeline, tensor_io
from .errors import VerseError
from .explain import Session
from .pipeline import AnalysisResult, RunConfig
from .reduction import pca_transform

SCHEMA_DIR = Path(__file__).parent / "schemas" / "v1"


class StoredSession:
    """Immutable bundle the service computes once per POST."""

    def __init__(
        self,
        session: Session,
        result: AnalysisResult,
        training: dict | None,
        created_at: str,
    ):
        self.session = session
        self.result = result
        self.training = training
        self.created_at = created_at
        self.doc = pipeline.session_doc(session, result)
        if training is not None:
            self.doc["training"] = training
        self.features = session.feature_names()
        self.feature_kinds = {f: session.feature_kind(f) for f in self.features}


class BoosterRequest(BaseModel):
    cluster: int
    top_n: int = Field(default=explain.DEFAULT_TOP_N)
    # CSV/JSONL text, or a list of {sample_id, ...feature} objects
    catalog: Optional[str | list[dict]] = None


def _validation_error(loc: list, exc: Exception) -> HTTPException:
    code = getattr(exc, "code", "invalid")
    return HTTPException(
        status_code=422,
        detail=[{"loc": loc, "msg": str(exc), "type": code}],
    )


def _parse_catalog(raw: str | list[dict]) -> list[tensor_io.SampleRecord]:
    if isinstance(raw, list):
        text = "\n".join(json.dumps(obj) for obj in raw)
        return tensor_io.parse_catalog_jsonl(text, label="catalog")
    stripped = raw.lstrip()
    if stripped.startswith("{"):
        return tensor_io.parse_catalog_jsonl(raw, label="catalog")
    return tensor_io.read_records(io.StringIO(raw))


def create_app(ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="verse", version="1.0")
    sessions: dict[str, StoredSession] = {}

    def store_of(session_id: str) -> StoredSession:
        stored = sessions.get(session_id)
        if stored is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return stored

    @app.post("/sessions")
    async def create_session(
        embeddings: UploadFile = File(...),
        metadata: UploadFile = File(...),
        scores: UploadFile = File(...),
        config: UploadFile | None = File(default=None),
        training: UploadFile | None = File(default=None),
    ):
        try:
            matrix = tensor_io.read_embeddings(io.BytesIO(await embeddings.read()))
        except VerseError as exc:
            raise _validation_error(["body", "embeddings"], exc)
        try:
            records = tensor_io.read_records(
                io.StringIO((await metadata.read()).decode("utf-8")),
                io.StringIO((await scores.read()).decode("utf-8")),
            )
        except VerseError as exc:
            raise _validation_error(["body", "metadata"], exc)
        try:
            overrides = (
                json.loads((await config.read()).decode("utf-8")) if config else {}
            )
            run_config = pipeline.load_config(None, overrides)
        except (ValueError, json.JSONDecodeError) as exc:
            raise _validation_error(["body", "config"], exc)

        try:
            result = pipeline.analyze_embeddings(matrix, run_config)
            session = pipeline.build_session_from_analysis(result, records, run_config)
            training_doc = None
            if training is not None:
                train_matrix = tensor_io.read_embeddings(io.BytesIO(await training.read()))
                coords = pca_transform(result.space, train_matrix)
                training_doc = {
                    "ids": list(train_matrix.ids),
                    "coords": coords.tolist(),
                }
        except VerseError as exc:
            raise _validation_error(["body"], exc)

        session_id = str(uuid.uuid4())
        created_at = datetime.now(timezone.utc).isoformat()
        # single dict assignment: the session becomes visible only complete
        sessions[session_id] = StoredSession(session, result, training_doc, created_at)
        return {"id": session_id, "created_at": created_at}

    @app.post("/sessions/import")
    async def import_session(doc: dict):
        try:
            session, result = pipeline.session_from_doc(doc, "import")
        except (VerseError, KeyError, TypeError, ValueError) as exc:
            raise _validation_error(["body"], exc)
        session_id = str(uuid.uuid4())
        created_at = datetime.now(timezone.utc).isoformat()
        sessions[session_id] = StoredSession(
            session, result, doc.get("training"), created_at
        )
        return {"id": session_id, "created_at": created_at}

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        return store_of(session_id).doc

    @app.get("/sessions/{session_id}/res")
    def get_res(session_id: str):
        stored = store_of(session_id)
        doc = stored.doc
        return {
            "ids": doc["space"]["ids"],
            "coords": doc["space"]["coords"],
            "explained_ratio": doc["space"]["explained_ratio"],
            "features": list(stored.features),
            "feature_kinds": stored.feature_kinds,
            "training": stored.training,
        }

    @app.get("/sessions/{session_id}/clusters")
    def get_clusters(session_id: str):
        doc = store_of(session_id).doc
        return {
            "clusters": doc["clusters"],
            "diagnostics": doc["diagnostics"],
            "verdict": doc["verdict"],
            "flagged": doc["flagged"],
            "profiles": [
                {k: v for k, v in p.items() if k != "attributions"}
                for p in doc["profiles"]
            ],
        }

    @app.get("/sessions/{session_id}/overlay")
    def get_overlay(session_id: str, feature: str = "score"):
        stored = store_of(session_id)
        session = stored.session
        if feature == "score":
            values = [r.score for r in session.records]
            kind = "score"
        elif feature in stored.features:
            values = [r.features.get(feature) for r in session.records]
            kind = stored.feature_kinds[feature]
        else:
            available = ", ".join(["score", *stored.features])
            raise HTTPException(
                status_code=422,
                detail=[
                    {
                        "loc": ["query", "feature"],
                        "msg": f"unknown feature {feature!r}; available: {available}",
                        "type": "unknown_feature",
                    }
                ],
            )
        return {"feature": feature, "kind": kind, "ids": list(session.ids), "values": values}

    @app.get("/sessions/{session_id}/clusters/{cluster_id}/attribution")
    def get_attribution(session_id: str, cluster_id: int):
        stored = store_of(session_id)
        profiles = stored.doc["profiles"]
        if not 0 <= cluster_id < len(profiles):
            raise HTTPException(status_code=404, detail=f"unknown cluster {cluster_id}")
        return profiles[cluster_id]

    @app.post("/sessions/{session_id}/booster")
    def post_booster(session_id: str, request: BoosterRequest):
        stored = store_of(session_id)
        if not 0 <= request.cluster < stored.session.clusters.k:
            raise HTTPException(status_code=404, detail=f"unknown cluster {request.cluster}")
        try:
            spec = explain.compose_booster(stored.session, request.cluster, request.top_n)
            if request.catalog is not None:
                spec = explain.match_booster(spec, _parse_catalog(request.catalog))
        except VerseError as exc:
            raise _validation_error(["body"], exc)
        return pipeline.booster_doc(spec)

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str):
        return store_of(session_id).doc["report"]

    @app.get("/schema")
    def list_schemas():
        return {
            "version": pipeline.SCHEMA_VERSION,
            "schemas": sorted(p.stem for p in SCHEMA_DIR.glob("*.json")),
        }

    @app.get("/schema/{name}")
    def get_schema(name: str):
        path = SCHEMA_DIR / f"{name}.json"
        if not path.is_file() or not path.resolve().is_relative_to(SCHEMA_DIR.resolve()):
            raise HTTPException(status_code=404, detail=f"unknown schema {name!r}")
        return JSONResponse(content=json.loads(path.read_text(encoding="utf-8")))

    static_dir = _resolve_ui_dir(ui_dir)
    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def _resolve_ui_dir(ui_dir: str | Path | None) -> Path | None:
    import os

    candidates = []
    if ui_dir is not None:
        candidates.append(Path(ui_dir))
    env = os.environ.get("VERSE_UI_DIR")
    if env:
        candidates.append(Path(env))
    candidates.append(Path(__file__).resolve().parents[2] / "frontend" / "dist")
    for candidate in candidates:
        if candidate.is_dir():
            return candidate
    return None
