"""Annotation state for a series: markers, paint labels, undo, CSV codec.

State mutation is single-writer by contract; the session service serializes
all calls.  Each mutation pushes one reversible delta onto a bounded undo
stack shared between markers and paint strokes.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .errors import MarkerImportError, StaleHitError, UnknownMarkerError
from .mesh import (
    AdjacencyMap,
    DistanceMetric,
    PickHit,
    build_adjacency,
    surface_distances,
)
from .plyio import SurfaceSeries

logger = logging.getLogger("surfannot")

MARKER_CSV_HEADER = "frame,x,y,z,vertex_index"
IMPORT_POSITION_TOLERANCE = 1e-3
DEFAULT_UNDO_DEPTH = 256


def format_float32(value) -> str:
    """Shortest decimal string that round-trips to the same float32."""
    f = np.float32(value)
    positional = np.format_float_positional(f, unique=True, trim="-")
    scientific = np.format_float_scientific(f, unique=True, trim="-")
    return scientific if len(scientific) < len(positional) else positional


class BrushMode(enum.Enum):
    PAINT = "paint"
    ERASE = "erase"


@dataclass(frozen=True)
class Marker:
    """A point annotation snapped to one mesh vertex of one frame."""

    id: int
    frame: int
    position: np.ndarray  # float32 (3,), equal to the vertex position
    vertex_index: int


@dataclass(frozen=True)
class BrushStroke:
    """One paint or erase action around a seed vertex."""

    frame: int
    seed: int
    radius: float
    metric: DistanceMetric = DistanceMetric.GEODESIC_EDGE_GRAPH
    mode: BrushMode = BrushMode.PAINT

    def __post_init__(self):
        radius = float(self.radius)
        if not np.isfinite(radius) or radius <= 0:
            raise ValueError(f"brush radius must be finite and positive, got {radius}")
        object.__setattr__(self, "radius", radius)


class MarkerSet:
    """Ordered collection of markers with unique ids."""

    def __init__(self, markers=()):
        self._markers: list[Marker] = []
        self._by_id: dict[int, Marker] = {}
        for marker in markers:
            self.add(marker)

    def add(self, marker: Marker, index: int | None = None):
        if marker.id in self._by_id:
            raise ValueError(f"duplicate marker id {marker.id}")
        if index is None:
            self._markers.append(marker)
        else:
            self._markers.insert(index, marker)
        self._by_id[marker.id] = marker

    def remove(self, marker_id: int) -> tuple[Marker, int]:
        if marker_id not in self._by_id:
            raise UnknownMarkerError(f"no marker with id {marker_id}")
        marker = self._by_id.pop(marker_id)
        index = self._markers.index(marker)
        del self._markers[index]
        return marker, index

    def get(self, marker_id: int) -> Marker:
        if marker_id not in self._by_id:
            raise UnknownMarkerError(f"no marker with id {marker_id}")
        return self._by_id[marker_id]

    def __contains__(self, marker_id: int) -> bool:
        return marker_id in self._by_id

    def __len__(self) -> int:
        return len(self._markers)

    def __iter__(self):
        return iter(self._markers)


# -- undo deltas -------------------------------------------------------------

@dataclass(frozen=True)
class MarkerAdded:
    marker: Marker
    index: int

    def describe(self) -> dict:
        return {
            "kind": "marker_add",
            "marker_id": self.marker.id,
            "frame": self.marker.frame,
            "vertex_index": self.marker.vertex_index,
        }


@dataclass(frozen=True)
class MarkerRemoved:
    marker: Marker
    index: int

    def describe(self) -> dict:
        return {
            "kind": "marker_remove",
            "marker_id": self.marker.id,
            "frame": self.marker.frame,
            "vertex_index": self.marker.vertex_index,
        }


@dataclass(frozen=True)
class StrokeApplied:
    frame: int
    mode: BrushMode
    changed: np.ndarray  # vertex indices whose mask value flipped
    value: bool  # mask value written on the changed vertices

    def describe(self) -> dict:
        return {
            "kind": "stroke",
            "frame": self.frame,
            "mode": self.mode.value,
            "changed": int(self.changed.size),
        }


Delta = MarkerAdded | MarkerRemoved | StrokeApplied


class AnnotationState:
    """Markers plus per-frame label masks for one series, with undo/redo.

    The undo stack is linear and bounded (oldest entries fall off); redo
    history is discarded on any new mutation.
    """

    def __init__(self, series: SurfaceSeries, undo_depth: int = DEFAULT_UNDO_DEPTH):
        self.series = series
        self.labels: list[np.ndarray] = [
            frame.labels.copy()
            if frame.labels is not None
            else np.zeros(frame.vertex_count, dtype=bool)
            for frame in series
        ]
        self.markers = MarkerSet()
        self.undo_depth = int(undo_depth)
        self._undo: list[Delta] = []
        self._redo: list[Delta] = []
        self._next_id = 1
        self._adjacency: dict[int, AdjacencyMap] = {}

    # -- helpers ------------------------------------------------------------

    def _check_frame(self, frame: int) -> None:
        if not 0 <= frame < self.series.frame_count:
            raise IndexError(
                f"frame {frame} out of range for {self.series.frame_count} frames"
            )

    def adjacency(self, frame: int) -> AdjacencyMap:
        """Cached edge graph for one frame."""
        self._check_frame(frame)
        if frame not in self._adjacency:
            self._adjacency[frame] = build_adjacency(self.series[frame].mesh)
        return self._adjacency[frame]

    def _push(self, delta: Delta) -> None:
        self._undo.append(delta)
        if len(self._undo) > self.undo_depth:
            del self._undo[0]
        self._redo.clear()

    # -- markers ------------------------------------------------------------

    def place_marker(self, frame: int, hit: PickHit) -> Marker:
        """Store a marker at the hit's nearest vertex.

        The hit must have been produced against the current mesh of
        ``frame``; anything inconsistent is rejected as stale.
        """
        self._check_frame(frame)
        mesh = self.series[frame].mesh
        if not 0 <= hit.triangle_index < mesh.triangle_count:
            raise StaleHitError(
                f"hit triangle {hit.triangle_index} does not exist in frame {frame}"
            )
        corners = mesh.triangles[hit.triangle_index]
        if hit.nearest_vertex not in corners:
            raise StaleHitError(
                f"hit vertex {hit.nearest_vertex} is not part of triangle "
                f"{hit.triangle_index}"
            )
        expected = np.asarray(hit.barycentric, dtype=np.float64) @ mesh.positions[
            corners
        ].astype(np.float64)
        if np.linalg.norm(expected - np.asarray(hit.point, dtype=np.float64)) > 1e-6:
            raise StaleHitError("hit point does not match the frame mesh")
        marker = Marker(
            id=self._next_id,
            frame=frame,
            position=mesh.positions[hit.nearest_vertex].copy(),
            vertex_index=int(hit.nearest_vertex),
        )
        self._next_id += 1
        self.markers.add(marker)
        self._push(MarkerAdded(marker, len(self.markers) - 1))
        return marker

    def remove_marker(self, marker_id: int) -> Marker:
        marker, index = self.markers.remove(marker_id)
        self._push(MarkerRemoved(marker, index))
        return marker

    # -- paint --------------------------------------------------------------

    def apply_stroke(self, stroke: BrushStroke) -> np.ndarray:
        """Paint or erase the brush region; returns the changed vertex set.

        The region is every vertex within the stroke radius of the seed
        under the stroke metric.  One undo entry is pushed per stroke, even
        when nothing changed.
        """
        self._check_frame(stroke.frame)
        mesh = self.series[stroke.frame].mesh
        adjacency = (
            self.adjacency(stroke.frame)
            if stroke.metric is DistanceMetric.GEODESIC_EDGE_GRAPH
            else None
        )
        region = surface_distances(
            mesh, stroke.seed, stroke.radius, stroke.metric, adjacency=adjacency
        )
        vertices = np.fromiter(region.keys(), dtype=np.int64, count=len(region))
        mask = self.labels[stroke.frame]
        value = stroke.mode is BrushMode.PAINT
        changed = vertices[mask[vertices] != value]
        changed.sort()
        mask[changed] = value
        self._push(StrokeApplied(stroke.frame, stroke.mode, changed, value))
        return changed

    # -- undo/redo ----------------------------------------------------------

    def _revert(self, delta: Delta) -> None:
        if isinstance(delta, MarkerAdded):
            self.markers.remove(delta.marker.id)
        elif isinstance(delta, MarkerRemoved):
            self.markers.add(delta.marker, delta.index)
        else:
            self.labels[delta.frame][delta.changed] = not delta.value

    def _reapply(self, delta: Delta) -> None:
        if isinstance(delta, MarkerAdded):
            self.markers.add(delta.marker, delta.index)
        elif isinstance(delta, MarkerRemoved):
            self.markers.remove(delta.marker.id)
        else:
            self.labels[delta.frame][delta.changed] = delta.value

    def undo(self) -> Delta | None:
        """Revert the most recent delta; None when there is nothing to undo."""
        if not self._undo:
            return None
        delta = self._undo.pop()
        self._revert(delta)
        self._redo.append(delta)
        return delta

    def redo(self) -> Delta | None:
        if not self._redo:
            return None
        delta = self._redo.pop()
        self._reapply(delta)
        self._undo.append(delta)
        return delta

    # -- CSV ----------------------------------------------------------------

    def export_markers_csv(self) -> bytes:
        """Markers as CSV text: frame, coordinates, vertex index.

        Frames are 0-based; coordinates use the shortest decimal that
        round-trips their 32-bit values; rows follow insertion order.
        """
        lines = [MARKER_CSV_HEADER]
        for marker in self.markers:
            lines.append(
                ",".join(
                    [
                        str(marker.frame),
                        format_float32(marker.position[0]),
                        format_float32(marker.position[1]),
                        format_float32(marker.position[2]),
                        str(marker.vertex_index),
                    ]
                )
            )
        return ("\n".join(lines) + "\n").encode("utf-8")

    def adopt_markers(self, markers: MarkerSet) -> None:
        """Replace all markers (session restore); clears undo history."""
        self.markers = MarkerSet(list(markers))
        self._next_id = max((m.id for m in markers), default=0) + 1
        self._undo.clear()
        self._redo.clear()


def import_markers_csv(data: bytes, series: SurfaceSeries) -> MarkerSet:
    """Parse a marker CSV and validate it against a series.

    Positions within 1e-3 mesh units of the named vertex are snapped to the
    vertex (with a warning if not exact); anything further is an error.
    Marker ids are regenerated.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MarkerImportError(f"marker CSV is not UTF-8: {exc}") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MarkerImportError("marker CSV is empty")
    header = lines[0].rstrip("\r")
    if header != MARKER_CSV_HEADER:
        raise MarkerImportError(
            f"bad header {header!r}, expected {MARKER_CSV_HEADER!r}"
        )
    markers = MarkerSet()
    next_id = 1
    for row_number, line in enumerate(lines[1:], start=1):
        fields = line.rstrip("\r").split(",")
        if len(fields) != 5:
            raise MarkerImportError(
                f"expected 5 fields, got {len(fields)}", row=row_number
            )
        try:
            frame = int(fields[0])
            position = np.array([float(f) for f in fields[1:4]], dtype=np.float32)
            vertex_index = int(fields[4])
        except ValueError as exc:
            raise MarkerImportError(str(exc), row=row_number) from None
        if not 0 <= frame < series.frame_count:
            raise MarkerImportError(
                f"frame {frame} out of range for {series.frame_count} frames",
                row=row_number,
            )
        mesh = series[frame].mesh
        if not 0 <= vertex_index < mesh.vertex_count:
            raise MarkerImportError(
                f"vertex {vertex_index} out of range for {mesh.vertex_count} vertices",
                row=row_number,
            )
        vertex_position = mesh.positions[vertex_index]
        distance = float(
            np.linalg.norm(
                position.astype(np.float64) - vertex_position.astype(np.float64)
            )
        )
        if distance > IMPORT_POSITION_TOLERANCE:
            raise MarkerImportError(
                f"position {position.tolist()} is {distance:g} mesh units from "
                f"vertex {vertex_index}, beyond tolerance "
                f"{IMPORT_POSITION_TOLERANCE:g}",
                row=row_number,
            )
        if distance > 0.0:
            logger.warning(
                "marker row %d: position off vertex %d by %g, snapping",
                row_number,
                vertex_index,
                distance,
            )
        markers.add(
            Marker(
                id=next_id,
                frame=frame,
                position=vertex_position.copy(),
                vertex_index=vertex_index,
            )
        )
        next_id += 1
    return markers
