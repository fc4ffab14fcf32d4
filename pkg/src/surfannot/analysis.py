"""Thresholded component extraction around markers and per-frame measures.

A component is the connected set of vertices around a seed whose channel
intensity meets a threshold; its area counts only triangles fully inside
the member set, and its centroid is the unweighted vertex mean.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csgraph

from .annotation import MarkerSet
from .mesh import AdjacencyMap, build_adjacency, triangle_areas
from .plyio import SurfaceFrame, SurfaceSeries

TRACK_CSV_HEADER = "marker_id,frame,area,vertex_count,centroid_x,centroid_y,centroid_z"


@dataclass(frozen=True)
class ComponentResult:
    """Connected thresholded region around one seed vertex."""

    frame: int
    seed: int
    members: np.ndarray  # sorted vertex indices; empty if seed fails the predicate
    full_triangles: np.ndarray  # triangle indices with all three vertices members
    area: float
    centroid: np.ndarray
    vertex_count: int


@dataclass(frozen=True)
class TrackRow:
    marker_id: int
    frame: int
    area: float
    vertex_count: int
    centroid: np.ndarray
    error: str | None = None


@dataclass
class TrackTable:
    """Per-marker component measures, ordered by (marker id, frame)."""

    rows: list[TrackRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def _empty_component(frame_index: int, seed: int) -> ComponentResult:
    return ComponentResult(
        frame=frame_index,
        seed=seed,
        members=np.zeros(0, dtype=np.int64),
        full_triangles=np.zeros(0, dtype=np.int64),
        area=0.0,
        centroid=np.zeros(3),
        vertex_count=0,
    )


def extract_component(
    frame: SurfaceFrame,
    seed: int,
    channel: int,
    threshold: int,
    frame_index: int = 0,
    adjacency: AdjacencyMap | None = None,
) -> ComponentResult:
    """Grow the connected region around ``seed`` where channel >= threshold.

    A seed failing the predicate yields an empty result (no snapping to a
    nearby passing vertex: that would hide annotation/threshold mismatches).
    """
    mesh = frame.mesh
    if not 0 <= seed < mesh.vertex_count:
        raise IndexError(f"seed vertex {seed} out of range for {mesh.vertex_count} vertices")
    threshold = int(threshold)
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold must be a byte value, got {threshold}")
    values = frame.colours.channel(channel)
    passes = values >= threshold
    if not passes[seed]:
        return _empty_component(frame_index, seed)
    if adjacency is None:
        adjacency = build_adjacency(mesh)
    candidates = np.flatnonzero(passes)
    sub = adjacency.graph[candidates][:, candidates]
    n_comp, comp_labels = csgraph.connected_components(sub, directed=False)
    seed_pos = int(np.searchsorted(candidates, seed))
    members = candidates[comp_labels == comp_labels[seed_pos]]
    member_mask = np.zeros(mesh.vertex_count, dtype=bool)
    member_mask[members] = True
    tri = mesh.triangles.astype(np.int64)
    full = (
        np.flatnonzero(member_mask[tri].all(axis=1))
        if tri.size
        else np.zeros(0, dtype=np.int64)
    )
    area = float(triangle_areas(mesh)[full].sum()) if full.size else 0.0
    centroid = mesh.positions[members].astype(np.float64).mean(axis=0)
    return ComponentResult(
        frame=frame_index,
        seed=int(seed),
        members=members,
        full_triangles=full,
        area=area,
        centroid=centroid,
        vertex_count=int(members.size),
    )


def track_measurements(
    series: SurfaceSeries,
    markers: MarkerSet,
    channel: int,
    threshold: int,
) -> TrackTable:
    """One component extraction per marker at its own frame and vertex.

    Rows are ordered by (marker id, frame) regardless of marker insertion
    order.  Per-marker failures become explicit empty rows with the error
    recorded; they never abort the table.
    """
    # table-wide parameters fail loudly, only per-marker trouble is flagged
    if channel not in (0, 1):
        raise ValueError(f"channel index must be 0 or 1, got {channel}")
    threshold = int(threshold)
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold must be a byte value, got {threshold}")
    adjacency_cache: dict[int, object] = {}
    rows = []
    for marker in sorted(markers, key=lambda m: (m.id, m.frame)):
        try:
            if not 0 <= marker.frame < series.frame_count:
                raise IndexError(
                    f"frame {marker.frame} out of range for {series.frame_count} frames"
                )
            if marker.frame not in adjacency_cache:
                adjacency_cache[marker.frame] = build_adjacency(series[marker.frame].mesh)
            component = extract_component(
                series[marker.frame],
                marker.vertex_index,
                channel,
                threshold,
                frame_index=marker.frame,
                adjacency=adjacency_cache[marker.frame],
            )
            rows.append(
                TrackRow(
                    marker_id=marker.id,
                    frame=marker.frame,
                    area=component.area,
                    vertex_count=component.vertex_count,
                    centroid=component.centroid,
                )
            )
        except (IndexError, ValueError) as exc:
            rows.append(
                TrackRow(
                    marker_id=marker.id,
                    frame=marker.frame,
                    area=0.0,
                    vertex_count=0,
                    centroid=np.zeros(3),
                    error=str(exc),
                )
            )
    return TrackTable(rows)


def export_track_csv(table: TrackTable) -> bytes:
    """Track table as CSV with LF endings; floats in shortest repr form."""
    lines = [TRACK_CSV_HEADER]
    for row in table:
        lines.append(
            ",".join(
                [
                    str(row.marker_id),
                    str(row.frame),
                    repr(float(row.area)),
                    str(row.vertex_count),
                    repr(float(row.centroid[0])),
                    repr(float(row.centroid[1])),
                    repr(float(row.centroid[2])),
                ]
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")
