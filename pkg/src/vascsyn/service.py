"""Session-based HTTP/JSON service for the browser ostium editor.

The workflow mirrors the library pipeline: generate a vessel, place or
select an ostium, preview aneurysms until satisfied, assemble, export.
All geometry returned by these endpoints equals the corresponding library
call with the same seeds.
"""
from __future__ import annotations

import io
import tempfile
import threading
import time
import uuid
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from pydantic import BaseModel

from .aneurysm import AneurysmMesh, AneurysmParams, generate_aneurysm
from .assembly import (attach_aneurysm, cut_openings, extract_ostium_ring,
                       finalize_sample, label_vertices, place_sac)
from .errors import VascsynError
from .mesh import MeshQuery, TriMesh
from .ostium import OstiumPoint, estimate_curvature, select_ostium
from .pipeline import write_sample
from .rng import STAGE_ANEURYSM, STAGE_OSTIUM, STAGE_VESSEL, derive_seed, \
    stage_rng
from .vessel import HealthyVessel, VesselConfig, generate_healthy_vessel

SESSION_TTL_S = 30 * 60
MAX_SESSIONS = 32
RING_PREVIEW_POINTS = 64


@dataclass
class Session:
    id: str
    seed: int
    vessel: HealthyVessel
    curvature: np.ndarray | None = None
    query: MeshQuery | None = None
    ostium: OstiumPoint | None = None
    ring_radius: float | None = None
    sac: AneurysmMesh | None = None
    sac_seed: int | None = None
    sample = None
    last_used: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    def __init__(self, ttl: float = SESSION_TTL_S,
                 capacity: int = MAX_SESSIONS):
        self._sessions: dict[str, Session] = {}
        self._ttl = ttl
        self._capacity = capacity
        self._lock = threading.Lock()

    def _evict(self):
        now = time.monotonic()
        dead = [k for k, s in self._sessions.items()
                if now - s.last_used > self._ttl]
        for k in dead:
            del self._sessions[k]
        while len(self._sessions) > self._capacity:
            oldest = min(self._sessions.values(), key=lambda s: s.last_used)
            del self._sessions[oldest.id]

    def add(self, session: Session):
        with self._lock:
            self._sessions[session.id] = session
            self._evict()

    def get(self, session_id: str) -> Session:
        with self._lock:
            self._evict()
            s = self._sessions.get(session_id)
            if s is None:
                raise HTTPException(404, f"unknown session {session_id}")
            s.last_used = time.monotonic()
            return s


class VesselRequest(BaseModel):
    seed: int | None = None
    config: dict | None = None


class OstiumRequest(BaseModel):
    mode: str
    vertex_id: int | None = None
    ring_radius: float | None = None
    strategy: str | None = None
    seed: int | None = None


class AneurysmRequest(BaseModel):
    seed: int | None = None
    params: dict | None = None


def _mesh_payload(mesh: TriMesh) -> dict:
    return {
        "positions": mesh.vertices.ravel().tolist(),
        "faces": mesh.faces.ravel().tolist(),
        "n_vertices": mesh.n_vertices,
        "n_faces": mesh.n_faces,
    }


def _tangent_frame(n: np.ndarray):
    up = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 \
        else np.array([0.0, 1.0, 0.0])
    t1 = np.cross(n, up)
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(n, t1)


def _ring_preview(session: Session, o: OstiumPoint, radius: float) -> list:
    """Circular contour of `radius` around the ostium, projected onto the
    vessel surface."""
    if session.query is None:
        session.query = MeshQuery(session.vessel.mesh)
    n = session.vessel.mesh.vertex_normals[o.vertex_index]
    t1, t2 = _tangent_frame(n / np.linalg.norm(n))
    ang = np.linspace(0.0, 2 * np.pi, RING_PREVIEW_POINTS, endpoint=False)
    circle = o.position + radius * (np.outer(np.cos(ang), t1)
                                    + np.outer(np.sin(ang), t2))
    _, projected, _, _ = session.query.closest(circle, exact=False)
    return projected.tolist()


def create_app(state_dir: str | None = None,
               frontend_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="vascsyn editor service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    store = SessionStore()
    app.state.store = store
    app.state.state_dir = state_dir

    @app.post("/api/session/vessel")
    def create_vessel(req: VesselRequest):
        seed = req.seed
        if seed is None:
            seed = int(np.random.default_rng().integers(0, 2 ** 31))
        try:
            config = VesselConfig.from_dict(req.config or {})
        except VascsynError as exc:
            raise HTTPException(400, str(exc))
        try:
            vessel = generate_healthy_vessel(
                config, stage_rng(seed, STAGE_VESSEL))
        except VascsynError as exc:
            raise HTTPException(
                500, f"vessel generation failed: {exc}; retry with a "
                     "different seed")
        session = Session(id=uuid.uuid4().hex, seed=seed, vessel=vessel)
        store.add(session)
        return {"session_id": session.id, "seed": seed,
                "mesh": _mesh_payload(vessel.mesh)}

    @app.post("/api/session/{session_id}/ostium")
    def set_ostium(session_id: str, req: OstiumRequest):
        session = store.get(session_id)
        with session.lock:
            mesh = session.vessel.mesh
            if req.mode == "manual":
                if req.vertex_id is None:
                    raise HTTPException(422, "manual mode needs vertex_id")
                if not 0 <= req.vertex_id < mesh.n_vertices:
                    raise HTTPException(422, f"vertex_id {req.vertex_id} "
                                        f"out of range [0, {mesh.n_vertices})")
                normal = mesh.vertex_normals[req.vertex_id]
                normal = normal / np.linalg.norm(normal)
                o = OstiumPoint(req.vertex_id,
                                mesh.vertices[req.vertex_id].copy(),
                                normal, "manual")
            elif req.mode == "auto":
                if session.curvature is None:
                    session.curvature = estimate_curvature(mesh)
                seed = req.seed if req.seed is not None else session.seed
                try:
                    o = select_ostium(session.vessel,
                                      stage_rng(seed, STAGE_OSTIUM),
                                      strategy=req.strategy,
                                      curvature=session.curvature)
                except VascsynError as exc:
                    raise HTTPException(500, str(exc))
            else:
                raise HTTPException(422, f"unknown mode {req.mode!r}")

            radius = req.ring_radius
            if radius is None:
                radius = float(session.vessel.local_radius(o.position))
            session.ostium = o
            session.ring_radius = radius
            session.sac = None
            session.sample = None
            return {"vertex_index": int(o.vertex_index),
                    "centroid": [float(x) for x in o.position],
                    "normal": [float(x) for x in o.normal],
                    "strategy": o.strategy,
                    "ring_radius": radius,
                    "ring_preview": _ring_preview(session, o, radius)}

    @app.post("/api/session/{session_id}/aneurysm")
    def preview_aneurysm(session_id: str, req: AneurysmRequest):
        session = store.get(session_id)
        with session.lock:
            if session.ostium is None:
                raise HTTPException(409, "set an ostium first")
            try:
                params = AneurysmParams.from_dict(req.params or {})
            except VascsynError as exc:
                raise HTTPException(400, str(exc))
            seed = req.seed
            if seed is None:
                seed = derive_seed(session.seed, "preview",
                                   int(time.monotonic_ns()))
            o = session.ostium
            r_local = session.vessel.local_radius(o.position)
            sac = generate_aneurysm(r_local, o.normal, params,
                                    stage_rng(seed, STAGE_ANEURYSM))
            session.sac = sac
            session.sac_seed = seed
            session.sample = None
            placed = place_sac(sac, o)
            return {"seed": seed, "has_bleb": sac.has_bleb,
                    "realized_params": sac.realized,
                    "mesh": _mesh_payload(placed)}

    @app.post("/api/session/{session_id}/assemble")
    def assemble(session_id: str):
        session = store.get(session_id)
        with session.lock:
            if session.sac is None:
                raise HTTPException(409, "preview an aneurysm first")
            o = session.ostium
            try:
                merged = attach_aneurysm(session.vessel, session.sac, o)
                cut = cut_openings(merged, session.vessel)
                lm = label_vertices(cut, place_sac(session.sac, o))
                ring = extract_ostium_ring(lm)
                meta = {"sample_seed": session.seed,
                        "aneurysm_seed": session.sac_seed,
                        "ostium": o.to_dict(),
                        "vessel_attempts": 1, "aneurysm_attempts": 1,
                        "retry_errors": [],
                        "vessel_meta": session.vessel.meta}
                sample = finalize_sample(lm, ring, session.vessel,
                                         session.sac, meta=meta)
            except VascsynError as exc:
                raise HTTPException(
                    500, f"assembly failed: {exc}; regenerate the aneurysm "
                         "or move the ostium and try again")
            session.sample = sample
            return {"mesh": _mesh_payload(sample.full.mesh),
                    "labels": [int(x) for x in sample.full.labels],
                    "ring": sample.ring.to_dict(),
                    "morphometrics": sample.morpho}

    @app.get("/api/session/{session_id}/export")
    def export(session_id: str):
        session = store.get(session_id)
        with session.lock:
            if session.sample is None:
                raise HTTPException(409, "assemble first")
            base = app.state.state_dir or tempfile.gettempdir()
            out = Path(base) / f"export_{session.id}"
            write_sample(session.sample, out)
            buf = io.BytesIO()
            with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
                for p in sorted(out.iterdir()):
                    zf.write(p, p.name)
            return Response(
                content=buf.getvalue(), media_type="application/zip",
                headers={"Content-Disposition":
                         f'attachment; filename="{session.id}.zip"'})

    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=frontend_dir, html=True),
                  name="editor")

    return app
