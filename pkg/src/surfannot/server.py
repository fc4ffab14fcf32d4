"""HTTP front end for a session, mounted under /api/v1.

All state-changing endpoints accept an optional expected ``version``; a
mismatch against the session's current version returns 409 with both
numbers so clients can refetch and retry.  Geometry and display payloads
are raw little-endian binary, everything else is JSON.
"""
from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .annotation import BrushMode
from .errors import (
    ManifestError,
    MarkerImportError,
    MeshValidationError,
    PlyParseError,
    SeriesLoadError,
    StaleHitError,
    StaleVersionError,
    SurfannotError,
    UnknownMarkerError,
)
from .mesh import DistanceMetric, PickHit, Ray
from .session import Session
from .view import RenderMode, ThresholdWindow

API_PREFIX = "/api/v1"


# -- request bodies ----------------------------------------------------------

class RayBody(BaseModel):
    origin: tuple[float, float, float]
    direction: tuple[float, float, float]


class PickRequest(BaseModel):
    ray: RayBody


class PickHitBody(BaseModel):
    triangle_index: int
    barycentric: tuple[float, float, float]
    point: tuple[float, float, float]
    nearest_vertex: int
    distance: float

    def to_hit(self) -> PickHit:
        return PickHit(
            triangle_index=self.triangle_index,
            barycentric=list(self.barycentric),
            point=list(self.point),
            nearest_vertex=self.nearest_vertex,
            distance=self.distance,
        )


class MarkerCreate(BaseModel):
    frame: int
    pick: PickHitBody
    version: int | None = None


class StrokeRequest(BaseModel):
    seed: int
    radius: float
    metric: str = DistanceMetric.GEODESIC_EDGE_GRAPH.value
    mode: str = BrushMode.PAINT.value
    version: int | None = None


class OpacityRequest(BaseModel):
    seed: int
    radius: float
    alpha: float
    metric: str = DistanceMetric.GEODESIC_EDGE_GRAPH.value
    version: int | None = None


class VersionOnly(BaseModel):
    version: int | None = None


class CursorUpdate(BaseModel):
    frame: int | None = None
    play: bool | None = None
    pause: bool | None = None
    step: int | None = None
    rate: float | None = None
    version: int | None = None


class SaveRequest(BaseModel):
    directory: str
    version: int | None = None


# -- serialization -----------------------------------------------------------

def _marker_json(marker) -> dict:
    return {
        "id": marker.id,
        "frame": marker.frame,
        "position": [float(v) for v in marker.position],
        "vertex_index": marker.vertex_index,
    }


def _hit_json(hit: PickHit) -> dict:
    return {
        "triangle_index": hit.triangle_index,
        "barycentric": [float(v) for v in hit.barycentric],
        "point": [float(v) for v in hit.point],
        "nearest_vertex": hit.nearest_vertex,
        "distance": hit.distance,
    }


def _error_json(status: int, kind: str, message: str, **extra) -> JSONResponse:
    payload = {"error": {"type": kind, "message": message, **extra}}
    return JSONResponse(status_code=status, content=payload)


# -- application -------------------------------------------------------------

def create_app(session: Session, web_root=None) -> FastAPI:
    """Build the service around one open session.

    ``web_root``, when given, is a directory of static files served at the
    site root (the browser client build).
    """
    app = FastAPI(title="surfannot", docs_url=None, redoc_url=None)

    # -- error mapping ------------------------------------------------------

    @app.exception_handler(StaleVersionError)
    async def _stale_version(request: Request, exc: StaleVersionError):
        return _error_json(
            409,
            "stale_version",
            str(exc),
            expected=exc.expected,
            current=exc.current,
        )

    @app.exception_handler(UnknownMarkerError)
    async def _unknown_marker(request: Request, exc: UnknownMarkerError):
        return _error_json(404, "unknown_marker", str(exc))

    @app.exception_handler(IndexError)
    async def _index_error(request: Request, exc: IndexError):
        return _error_json(404, "out_of_range", str(exc))

    @app.exception_handler(StaleHitError)
    async def _stale_hit(request: Request, exc: StaleHitError):
        return _error_json(422, "stale_hit", str(exc))

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return _error_json(422, "invalid_value", str(exc))

    @app.exception_handler(SurfannotError)
    async def _domain_error(request: Request, exc: SurfannotError):
        kinds = {
            MeshValidationError: "invalid_mesh",
            PlyParseError: "parse_error",
            SeriesLoadError: "series_load_failed",
            MarkerImportError: "marker_import_failed",
            ManifestError: "manifest_error",
        }
        return _error_json(422, kinds.get(type(exc), "error"), str(exc))

    @app.exception_handler(RequestValidationError)
    async def _request_invalid(request: Request, exc: RequestValidationError):
        # Unparseable JSON and bad path segments are client framing errors
        # (400); a well-formed body with wrong fields is 422.
        errors = exc.errors()
        framing = any(
            e.get("type") == "json_invalid" or (e.get("loc") or [""])[0] == "path"
            for e in errors
        )
        message = "; ".join(
            f"{'.'.join(str(p) for p in e.get('loc', []))}: {e.get('msg', '')}"
            for e in errors
        )
        status = 400 if framing else 422
        return _error_json(status, "invalid_request", message)

    # -- project and frames -------------------------------------------------

    @app.get(API_PREFIX + "/project")
    def get_project():
        return session.summary()

    @app.get(API_PREFIX + "/frames/{index}/geometry")
    def get_geometry(index: int):
        return Response(
            content=session.geometry_bytes(index),
            media_type="application/octet-stream",
        )

    @app.get(API_PREFIX + "/frames/{index}/display")
    def get_display(
        index: int,
        mode: str = RenderMode.ORIGINAL.value,
        lo0: int = 0,
        hi0: int = 255,
        lo1: int = 0,
        hi1: int = 255,
    ):
        windows = (ThresholdWindow(lo0, hi0), ThresholdWindow(lo1, hi1))
        data = session.display_bytes(index, RenderMode(mode), windows)
        return Response(content=data, media_type="application/octet-stream")

    @app.post(API_PREFIX + "/frames/{index}/pick")
    def post_pick(index: int, body: PickRequest):
        ray = Ray.normalized(body.ray.origin, body.ray.direction)
        hit = session.pick(index, ray)
        return {
            "hit": None if hit is None else _hit_json(hit),
            "version": session.version,
        }

    # -- markers ------------------------------------------------------------

    @app.post(API_PREFIX + "/markers", status_code=201)
    def post_marker(body: MarkerCreate):
        marker, version = session.add_marker(
            body.frame, body.pick.to_hit(), expected_version=body.version
        )
        return {"marker": _marker_json(marker), "version": version}

    @app.delete(API_PREFIX + "/markers/{marker_id}")
    def delete_marker(marker_id: int, version: int | None = None):
        marker, new_version = session.delete_marker(
            marker_id, expected_version=version
        )
        return {"marker": _marker_json(marker), "version": new_version}

    @app.get(API_PREFIX + "/markers.csv")
    def get_markers_csv():
        return Response(
            content=session.markers_csv(),
            media_type="text/csv",
            headers={"Content-Disposition": "attachment; filename=markers.csv"},
        )

    # -- painting and undo --------------------------------------------------

    @app.post(API_PREFIX + "/frames/{index}/strokes")
    def post_stroke(index: int, body: StrokeRequest):
        changed, version = session.stroke(
            index,
            body.seed,
            body.radius,
            metric=DistanceMetric(body.metric),
            mode=BrushMode(body.mode),
            expected_version=body.version,
        )
        return {"changed": [int(v) for v in changed], "version": version}

    @app.post(API_PREFIX + "/undo")
    def post_undo(body: VersionOnly):
        delta, version = session.undo(expected_version=body.version)
        return {
            "undone": None if delta is None else delta.describe(),
            "version": version,
        }

    @app.post(API_PREFIX + "/redo")
    def post_redo(body: VersionOnly):
        delta, version = session.redo(expected_version=body.version)
        return {
            "redone": None if delta is None else delta.describe(),
            "version": version,
        }

    # -- opacity ------------------------------------------------------------

    @app.post(API_PREFIX + "/frames/{index}/opacity")
    def post_opacity(index: int, body: OpacityRequest):
        region, version = session.set_opacity(
            index,
            body.seed,
            body.radius,
            body.alpha,
            metric=DistanceMetric(body.metric),
            expected_version=body.version,
        )
        return {"region": [int(v) for v in region], "version": version}

    @app.post(API_PREFIX + "/opacity/reset")
    def post_opacity_reset(body: VersionOnly):
        version = session.reset_opacity(expected_version=body.version)
        return {"version": version}

    # -- measurement export -------------------------------------------------

    @app.get(API_PREFIX + "/tracks.csv")
    def get_tracks_csv(channel: int, threshold: int):
        return Response(
            content=session.tracks_csv(channel, threshold),
            media_type="text/csv",
            headers={"Content-Disposition": "attachment; filename=tracks.csv"},
        )

    # -- playback cursor ----------------------------------------------------

    @app.get(API_PREFIX + "/cursor")
    def get_cursor():
        payload = session.get_cursor().as_dict()
        payload["version"] = session.version
        return payload

    @app.post(API_PREFIX + "/cursor")
    def post_cursor(body: CursorUpdate):
        cursor, version = session.set_cursor(
            frame=body.frame,
            play=body.play,
            pause=body.pause,
            step=body.step,
            rate=body.rate,
            expected_version=body.version,
        )
        payload = cursor.as_dict()
        payload["version"] = version
        return payload

    # -- persistence --------------------------------------------------------

    @app.post(API_PREFIX + "/save")
    def post_save(body: SaveRequest):
        manifest, version = session.save(
            body.directory, expected_version=body.version
        )
        return {"manifest": manifest, "version": version}

    if web_root is not None:
        root = Path(web_root)
        if root.is_dir():
            app.mount("/", StaticFiles(directory=root, html=True), name="web")

    return app
