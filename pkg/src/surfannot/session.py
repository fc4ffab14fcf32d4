"""Project lifecycle, persistence, and the single-writer session owner.

A session wraps one open project.  Every mutation is serialized through one
lock and bumps a monotonically increasing state version; callers that pass
an expected version get optimistic-concurrency conflict detection (HTTP
maps it to 409).  Reads serve consistent snapshots under the same lock.
"""
from __future__ import annotations

import hashlib
import json
import struct
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import export_track_csv, track_measurements
from .annotation import AnnotationState, BrushMode, BrushStroke, import_markers_csv
from .errors import ManifestError, StaleVersionError
from .mesh import DistanceMetric, PickHit, Ray, ray_pick, surface_distances
from .plyio import SurfaceSeries, load_series, save_labelled_series
from .view import (
    OpacityOverride,
    RenderMode,
    ThresholdWindow,
    compose_display,
    set_opacity_region,
)

MANIFEST_NAME = "manifest.json"
MARKERS_NAME = "markers.csv"
MANIFEST_FORMAT_VERSION = 1
DEFAULT_PORT = 8047
DEFAULT_FRAME_RATE = 5.0


@dataclass
class PlaybackCursor:
    """Current position in the series; advancement timing is client-driven."""

    frame: int = 0
    playing: bool = False
    rate: float = DEFAULT_FRAME_RATE

    def as_dict(self) -> dict:
        return {"frame": self.frame, "playing": self.playing, "rate": self.rate}


class Project:
    """One open series plus its annotation and view state."""

    def __init__(self, source_dir: str, series: SurfaceSeries):
        self.id = uuid.uuid4().hex[:12]
        self.source_dir = source_dir
        self.series = series
        self.state = AnnotationState(series)
        self.opacity = [OpacityOverride.full(f.vertex_count) for f in series]
        self.cursor = PlaybackCursor()
        self.dirty = False


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def verify_manifest(directory: Path) -> dict:
    """Check a saved project's manifest against the files on disk."""
    manifest_path = directory / MANIFEST_NAME
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"unreadable manifest {manifest_path}: {exc}") from None
    if manifest.get("version") != MANIFEST_FORMAT_VERSION:
        raise ManifestError(
            f"unsupported manifest version {manifest.get('version')!r}"
        )
    for entry in manifest.get("frames", []):
        path = directory / entry["file"]
        if not path.is_file():
            raise ManifestError(f"manifest lists missing file {entry['file']!r}")
        actual = _sha256(path)
        if actual != entry["sha256"]:
            raise ManifestError(
                f"checksum mismatch for {entry['file']!r}: "
                f"manifest {entry['sha256'][:12]}…, file {actual[:12]}…"
            )
    markers_file = manifest.get("markers_file")
    if markers_file and not (directory / markers_file).is_file():
        raise ManifestError(f"manifest lists missing markers file {markers_file!r}")
    return manifest


def open_project(directory) -> Project:
    """Load a directory of .ply frames into a fresh project.

    A manifest, if present, is integrity-checked first; a sibling
    markers.csv is imported into the annotation state.
    """
    directory = Path(directory)
    if (directory / MANIFEST_NAME).is_file():
        verify_manifest(directory)
    series = load_series(directory)
    project = Project(str(directory), series)
    markers_path = directory / MARKERS_NAME
    if markers_path.is_file():
        project.state.adopt_markers(
            import_markers_csv(markers_path.read_bytes(), series)
        )
    return project


def save_project(project: Project, destination) -> dict:
    """Write the labelled series, markers.csv, and an integrity manifest."""
    destination = Path(destination)
    destination.mkdir(parents=True, exist_ok=True)
    labelled = SurfaceSeries(
        [
            frame.with_labels(project.state.labels[i])
            for i, frame in enumerate(project.series)
        ]
    )
    files = save_labelled_series(labelled, destination)
    (destination / MARKERS_NAME).write_bytes(project.state.export_markers_csv())
    manifest = {
        "version": MANIFEST_FORMAT_VERSION,
        "frames": [
            {
                "file": path.name,
                "sha256": _sha256(path),
                "vertices": frame.vertex_count,
                "triangles": frame.mesh.triangle_count,
            }
            for path, frame in zip(files, project.series)
        ],
        "markers_file": MARKERS_NAME,
    }
    (destination / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n")
    project.dirty = False
    return manifest


def frame_geometry_bytes(frame) -> bytes:
    """Binary geometry payload: counts header, f32 positions, u32 indices."""
    mesh = frame.mesh
    header = struct.pack("<II", mesh.vertex_count, mesh.triangle_count)
    positions = np.ascontiguousarray(mesh.positions, dtype="<f4")
    indices = np.ascontiguousarray(mesh.triangles, dtype="<u4")
    return header + positions.tobytes() + indices.tobytes()


class Session:
    """Single-writer owner of one project's mutable state."""

    def __init__(self, project: Project):
        self.project = project
        self.version = 0
        self._lock = threading.RLock()

    # -- version handling ---------------------------------------------------

    def _begin_mutation(self, expected_version: int | None) -> None:
        if expected_version is not None and expected_version != self.version:
            raise StaleVersionError(expected_version, self.version)

    def _commit(self) -> int:
        self.version += 1
        self.project.dirty = True
        return self.version

    # -- reads --------------------------------------------------------------

    def summary(self) -> dict:
        with self._lock:
            project = self.project
            return {
                "id": project.id,
                "source_dir": project.source_dir,
                "frame_count": project.series.frame_count,
                "frames": [
                    {
                        "index": i,
                        "file": Path(f.source_path).name if f.source_path else "",
                        "vertices": f.vertex_count,
                        "triangles": f.mesh.triangle_count,
                        "has_labels": bool(project.state.labels[i].any()),
                    }
                    for i, f in enumerate(project.series)
                ],
                "marker_count": len(project.state.markers),
                "dirty": project.dirty,
                "version": self.version,
            }

    def _frame(self, index: int):
        if not 0 <= index < self.project.series.frame_count:
            raise IndexError(
                f"frame {index} out of range for {self.project.series.frame_count} frames"
            )
        return self.project.series[index]

    def geometry_bytes(self, frame_index: int) -> bytes:
        with self._lock:
            return frame_geometry_bytes(self._frame(frame_index))

    def display_bytes(
        self,
        frame_index: int,
        mode: RenderMode = RenderMode.ORIGINAL,
        windows: tuple[ThresholdWindow, ThresholdWindow] | None = None,
    ) -> bytes:
        with self._lock:
            frame = self._frame(frame_index)
            if windows is None:
                windows = (ThresholdWindow(), ThresholdWindow())
            rgba = compose_display(
                frame.colours,
                self.project.state.labels[frame_index],
                windows,
                self.project.opacity[frame_index],
                mode,
            )
            return rgba.tobytes()

    def pick(self, frame_index: int, ray: Ray) -> PickHit | None:
        with self._lock:
            return ray_pick(self._frame(frame_index).mesh, ray)

    def markers_csv(self) -> bytes:
        with self._lock:
            return self.project.state.export_markers_csv()

    def tracks_csv(self, channel: int, threshold: int) -> bytes:
        with self._lock:
            table = track_measurements(
                self.project.series, self.project.state.markers, channel, threshold
            )
            return export_track_csv(table)

    def get_cursor(self) -> PlaybackCursor:
        with self._lock:
            cursor = self.project.cursor
            return PlaybackCursor(cursor.frame, cursor.playing, cursor.rate)

    # -- mutations ----------------------------------------------------------

    def add_marker(self, frame_index: int, hit: PickHit, expected_version: int | None = None):
        with self._lock:
            self._begin_mutation(expected_version)
            marker = self.project.state.place_marker(frame_index, hit)
            return marker, self._commit()

    def delete_marker(self, marker_id: int, expected_version: int | None = None):
        with self._lock:
            self._begin_mutation(expected_version)
            marker = self.project.state.remove_marker(marker_id)
            return marker, self._commit()

    def stroke(
        self,
        frame_index: int,
        seed: int,
        radius: float,
        metric: DistanceMetric = DistanceMetric.GEODESIC_EDGE_GRAPH,
        mode: BrushMode = BrushMode.PAINT,
        expected_version: int | None = None,
    ):
        with self._lock:
            self._begin_mutation(expected_version)
            changed = self.project.state.apply_stroke(
                BrushStroke(frame_index, seed, radius, metric, mode)
            )
            return changed, self._commit()

    def undo(self, expected_version: int | None = None):
        with self._lock:
            self._begin_mutation(expected_version)
            delta = self.project.state.undo()
            if delta is None:
                return None, self.version  # nothing to undo: state unchanged
            return delta, self._commit()

    def redo(self, expected_version: int | None = None):
        with self._lock:
            self._begin_mutation(expected_version)
            delta = self.project.state.redo()
            if delta is None:
                return None, self.version
            return delta, self._commit()

    def set_opacity(
        self,
        frame_index: int,
        seed: int,
        radius: float,
        alpha: float,
        metric: DistanceMetric = DistanceMetric.GEODESIC_EDGE_GRAPH,
        expected_version: int | None = None,
    ):
        with self._lock:
            self._begin_mutation(expected_version)
            frame = self._frame(frame_index)
            adjacency = (
                self.project.state.adjacency(frame_index)
                if metric is DistanceMetric.GEODESIC_EDGE_GRAPH
                else None
            )
            region = surface_distances(
                frame.mesh, seed, radius, metric, adjacency=adjacency
            )
            self.project.opacity[frame_index] = set_opacity_region(
                self.project.opacity[frame_index], region.keys(), alpha
            )
            return sorted(region.keys()), self._commit()

    def reset_opacity(self, expected_version: int | None = None):
        with self._lock:
            self._begin_mutation(expected_version)
            self.project.opacity = [
                OpacityOverride.full(f.vertex_count) for f in self.project.series
            ]
            return self._commit()

    def set_cursor(
        self,
        frame: int | None = None,
        play: bool | None = None,
        pause: bool | None = None,
        step: int | None = None,
        rate: float | None = None,
        expected_version: int | None = None,
    ):
        """Update the playback cursor; stepping past either end clamps."""
        with self._lock:
            self._begin_mutation(expected_version)
            cursor = self.project.cursor
            n = self.project.series.frame_count
            if frame is not None:
                if not 0 <= frame < n:
                    raise ValueError(f"frame {frame} out of range for {n} frames")
                cursor.frame = int(frame)
            if step is not None:
                cursor.frame = min(max(cursor.frame + int(step), 0), n - 1)
            if play:
                cursor.playing = True
            if pause:
                cursor.playing = False
            if rate is not None:
                if not rate > 0:
                    raise ValueError(f"frame rate must be positive, got {rate}")
                cursor.rate = float(rate)
            self.version += 1  # cursor moves bump the version but not dirty
            return self.get_cursor(), self.version

    def save(self, destination, expected_version: int | None = None):
        with self._lock:
            self._begin_mutation(expected_version)
            manifest = save_project(self.project, destination)
            self.version += 1
            return manifest, self.version
