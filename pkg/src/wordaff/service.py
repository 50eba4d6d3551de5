"""HTTP/JSON service exposing the pipeline and refinement sessions.

One session per document. Mutating endpoints are serialized per session;
reads serve the last published snapshot. Sessions persist to the data
directory and survive restarts.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import edits as edits_mod
from .config import ConfigError, PipelineConfig
from .model import DocumentModel, DocumentValidationError, document_from_payload
from .pipeline import run_pipeline
from .refine import (
    ConstraintConflictError,
    RefineSession,
    SelectionError,
    UserSelection,
    refine as run_refine,
    session_from_payload,
    session_to_payload,
)
from .siamese import TrainingDivergedError

DEFAULT_RUN_TIMEOUT = 120.0


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, field: Optional[str] = None):
        self.status = status
        self.code = code
        self.message = message
        self.field = field
        super().__init__(message)


class SessionEntry:
    def __init__(self, doc: DocumentModel):
        self.doc = doc
        self.session: Optional[RefineSession] = None
        self.status = "new"  # new | running | ready | failed
        self.error: Optional[str] = None
        self.mutex = threading.Lock()
        self.carried_user_constraints: list = []
        self.carried_edit_log: list = []


class SessionStore:
    def __init__(self, data_dir: Optional[Path], base_config: PipelineConfig):
        self.data_dir = data_dir
        self.base_config = base_config
        self.entries: dict[str, SessionEntry] = {}
        self.lock = threading.Lock()
        if data_dir is not None:
            data_dir.mkdir(parents=True, exist_ok=True)
            self._load()

    def _load(self):
        for path in sorted(self.data_dir.glob("*.json")):
            payload = json.loads(path.read_text())
            doc = document_from_payload(payload["doc"])
            entry = SessionEntry(doc)
            if payload.get("session"):
                entry.session = session_from_payload(payload["session"])
                entry.doc = entry.session.doc
                entry.status = "ready"
            self.entries[path.stem] = entry

    def persist(self, doc_id: str):
        if self.data_dir is None:
            return
        entry = self.entries[doc_id]
        payload = {
            "doc": entry.doc.to_payload(),
            "session": session_to_payload(entry.session) if entry.session else None,
        }
        (self.data_dir / f"{doc_id}.json").write_text(json.dumps(payload))

    def create(self, payload: dict) -> str:
        try:
            doc = document_from_payload(payload)
        except DocumentValidationError as exc:
            raise ApiError(422, "INVALID_DOCUMENT", str(exc)) from exc
        with self.lock:
            doc_id = doc.doc_id or "doc"
            candidate, n = doc_id, 1
            while candidate in self.entries:
                n += 1
                candidate = f"{doc_id}-{n}"
            doc.doc_id = candidate
            self.entries[candidate] = SessionEntry(doc)
        self.persist(candidate)
        return candidate

    def get(self, doc_id: str) -> SessionEntry:
        entry = self.entries.get(doc_id)
        if entry is None:
            raise ApiError(404, "UNKNOWN_DOCUMENT", f"no document with id {doc_id!r}")
        return entry


def _cluster_summary(session: RefineSession) -> dict:
    return {
        "n_clusters": session.assignment.n_clusters,
        "n_words": len(session.doc.words),
        "clusters": session.assignment.to_payload()["clusters"],
    }


def _require_ready(entry: SessionEntry) -> RefineSession:
    if entry.status == "running":
        raise ApiError(409, "IN_FLIGHT", "a run is in flight for this document")
    if entry.session is None or entry.session.assignment is None:
        raise ApiError(409, "NOT_RUN", "run the pipeline before querying results")
    return entry.session


def _projection_payload(session: RefineSession) -> dict:
    points = []
    for rep, row in zip(session.representations, session.projection):
        cid = session.assignment.word_to_cluster.get(rep.word_id)
        if cid is None:
            continue
        points.append({
            "word_id": rep.word_id,
            "x": float(row[0]),
            "y": float(row[1]),
            "cluster_id": cid,
        })
    return {"points": points}


def create_app(
    data_dir: Optional[str | Path] = None,
    seed: int = 0,
    run_timeout: float = DEFAULT_RUN_TIMEOUT,
    base_config: Optional[PipelineConfig] = None,
) -> FastAPI:
    base = (base_config or PipelineConfig()).with_seed(seed)
    store = SessionStore(Path(data_dir) if data_dir else None, base)
    app = FastAPI(title="wordaff")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def _api_error(_, exc: ApiError):
        body = {"code": exc.code, "message": exc.message, "field": exc.field}
        return JSONResponse(status_code=exc.status, content=body)

    @app.post("/documents", status_code=201)
    def create_document(payload: dict):
        return {"doc_id": store.create(payload)}

    def _do_run(entry: SessionEntry, config: PipelineConfig, doc_id: str):
        try:
            session = run_pipeline(entry.doc, config)
            session.user_constraints = list(entry.carried_user_constraints)
            session.edit_log = list(entry.carried_edit_log)
            entry.session = session
            entry.status = "ready"
            store.persist(doc_id)
        except Exception as exc:  # surfaced via run/status
            entry.status = "failed"
            entry.error = f"{type(exc).__name__}: {exc}"
        finally:
            entry.mutex.release()

    @app.post("/documents/{doc_id}/run")
    def run_document(doc_id: str, payload: Optional[dict] = None):
        entry = store.get(doc_id)
        if entry.status == "running":
            raise ApiError(409, "IN_FLIGHT", "a run is already in flight")
        try:
            config = store.base_config.with_overrides(payload or {})
        except ConfigError as exc:
            raise ApiError(422, "INVALID_CONFIG", str(exc), field="config") from exc
        if entry.session is not None:
            entry.carried_user_constraints = list(entry.session.user_constraints)
            entry.carried_edit_log = list(entry.session.edit_log)
        entry.mutex.acquire()
        entry.status = "running"
        worker = threading.Thread(target=_do_run, args=(entry, config, doc_id), daemon=True)
        worker.start()
        worker.join(timeout=run_timeout)
        if worker.is_alive():
            return JSONResponse(
                status_code=202,
                content={"status": "running", "poll": f"/documents/{doc_id}/run/status"},
            )
        if entry.status == "failed":
            raise ApiError(500, "RUN_FAILED", entry.error or "pipeline failed")
        return {
            "clusters": _cluster_summary(entry.session),
            "report": entry.session.report.to_payload(),
            "constraints": entry.session.auto_constraints.stats,
        }

    @app.get("/documents/{doc_id}/run/status")
    def run_status(doc_id: str):
        entry = store.get(doc_id)
        body: dict = {"state": entry.status}
        if entry.status == "ready":
            body["clusters"] = _cluster_summary(entry.session)
        if entry.status == "failed":
            body["error"] = entry.error
        return body

    @app.get("/documents/{doc_id}/clusters")
    def get_clusters(doc_id: str):
        session = _require_ready(store.get(doc_id))
        return session.assignment.to_payload()

    @app.get("/documents/{doc_id}/projection")
    def get_projection(doc_id: str):
        session = _require_ready(store.get(doc_id))
        return _projection_payload(session)

    @app.post("/documents/{doc_id}/constraints")
    def post_constraints(doc_id: str, payload: list[dict]):
        entry = store.get(doc_id)
        session = _require_ready(entry)
        with entry.mutex:
            try:
                selections = [UserSelection.from_payload(p) for p in payload]
            except SelectionError as exc:
                raise ApiError(422, "INVALID_SELECTION", str(exc), field="selections") from exc
            try:
                merged = session.add_selections(selections)
            except ConstraintConflictError as exc:
                raise ApiError(
                    422, "CONSTRAINT_CONFLICT",
                    f"contradictory constraints on pairs {exc.pairs}", field="selections",
                ) from exc
            store.persist(doc_id)
            return {"stats": merged.stats}

    @app.post("/documents/{doc_id}/refine")
    def post_refine(doc_id: str, payload: Optional[dict] = None):
        entry = store.get(doc_id)
        session = _require_ready(entry)
        epochs = int((payload or {}).get("epochs", 10))
        if epochs < 0:
            raise ApiError(422, "INVALID_EPOCHS", "epochs must be >= 0", field="epochs")
        with entry.mutex:
            try:
                run_refine(session, epochs=epochs)
            except ConstraintConflictError as exc:
                raise ApiError(
                    422, "CONSTRAINT_CONFLICT",
                    f"contradictory constraints on pairs {exc.pairs}", field="selections",
                ) from exc
            except TrainingDivergedError as exc:
                raise ApiError(500, "TRAINING_DIVERGED", str(exc)) from exc
            store.persist(doc_id)
            return {"clusters": _cluster_summary(session), "report": session.report.to_payload()}

    @app.post("/documents/{doc_id}/edits")
    def post_edit(doc_id: str, payload: dict):
        entry = store.get(doc_id)
        session = _require_ready(entry)
        with entry.mutex:
            try:
                spec = edits_mod.EditSpec.from_payload(payload.get("spec") or {})
            except edits_mod.EditError as exc:
                raise ApiError(422, "INVALID_EDIT", str(exc), field="spec") from exc
            cluster_id = payload.get("cluster_id")
            if not isinstance(cluster_id, int):
                raise ApiError(422, "INVALID_EDIT", "cluster_id must be an integer",
                               field="cluster_id")
            try:
                new_doc, entry_log = edits_mod.apply_edit(
                    session.doc, session.assignment, cluster_id, spec)
            except edits_mod.EditError as exc:
                raise ApiError(422, "INVALID_EDIT", str(exc)) from exc
            session.doc = new_doc
            entry.doc = new_doc
            if spec.kind is edits_mod.EditKind.DELETE:
                _prune_after_delete(session, set(entry_log.affected_word_ids))
            session.edit_log.append(entry_log)
            store.persist(doc_id)
            return {"entry": entry_log.to_payload()}

    @app.get("/documents/{doc_id}/render.svg")
    def render(doc_id: str):
        entry = store.get(doc_id)
        assignment = entry.session.assignment if entry.session else None
        svg = edits_mod.render_svg(entry.doc, assignment)
        return Response(content=svg, media_type="image/svg+xml")

    return app


def _prune_after_delete(session: RefineSession, gone: set[int]):
    from .constraints import ConstraintSet

    keep_rows = [k for k, r in enumerate(session.representations) if r.word_id not in gone]
    session.representations = [session.representations[k] for k in keep_rows]
    if session.latents is not None:
        session.latents = session.latents[keep_rows]
    if session.projection is not None:
        session.projection = session.projection[keep_rows]
    kept = [c for c in session.auto_constraints.constraints
            if c.i not in gone and c.j not in gone]
    session.auto_constraints = ConstraintSet(
        constraints=kept, stats=dict(session.auto_constraints.stats))
    session.user_constraints = [
        c for c in session.user_constraints if c.i not in gone and c.j not in gone]
    clusters = {}
    for cid, wids in session.assignment.clusters.items():
        left = [w for w in wids if w not in gone]
        if left:
            clusters[cid] = left
    session.assignment.clusters = clusters
    session.assignment.word_to_cluster = {
        w: cid for cid, wids in clusters.items() for w in wids}
