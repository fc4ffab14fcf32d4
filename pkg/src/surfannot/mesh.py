"""Mesh geometry core: validation, adjacency, picking, distances, areas.

All operations are pure functions over immutable inputs.  Meshes are not
required to be manifold or connected; every algorithm here works on the
vertex/edge graph alone.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import MeshValidationError

# Acceptance epsilons for ray/triangle intersection: a hit may lie this far
# outside the exact triangle or behind the ray origin and still count.
RAY_PARAM_EPS = 1e-9
BARYCENTRIC_EPS = 1e-9

_DET_EPS = 1e-12


class DistanceMetric(enum.Enum):
    """How the brush region around a seed vertex is measured."""

    GEODESIC_EDGE_GRAPH = "geodesic"
    EUCLIDEAN = "euclidean"


class TriangleMesh:
    """Triangulated surface mesh.

    Parameters
    ----------
    positions : (V, 3) array_like
        Vertex coordinates, stored as float32 (the .ply on-disk precision).
    triangles : (T, 3) array_like
        Vertex index triples, stored as uint32.
    """

    __slots__ = ("positions", "triangles")

    def __init__(self, positions, triangles):
        self.positions = np.ascontiguousarray(positions, dtype=np.float32).reshape(-1, 3)
        tri = np.asarray(triangles)
        if tri.size == 0:
            tri = np.zeros((0, 3), dtype=np.uint32)
        self.triangles = np.ascontiguousarray(tri, dtype=np.uint32).reshape(-1, 3)
        self.positions.flags.writeable = False
        self.triangles.flags.writeable = False

    @property
    def vertex_count(self) -> int:
        return self.positions.shape[0]

    @property
    def triangle_count(self) -> int:
        return self.triangles.shape[0]

    def __repr__(self):
        return f"TriangleMesh({self.vertex_count} vertices, {self.triangle_count} triangles)"


class ChannelData:
    """Two per-vertex intensity channels (bytes), one per fluorescence channel."""

    __slots__ = ("channel0", "channel1")

    def __init__(self, channel0, channel1):
        self.channel0 = np.ascontiguousarray(channel0, dtype=np.uint8).reshape(-1)
        self.channel1 = np.ascontiguousarray(channel1, dtype=np.uint8).reshape(-1)
        self.channel0.flags.writeable = False
        self.channel1.flags.writeable = False

    def __len__(self) -> int:
        return self.channel0.shape[0]

    def channel(self, index: int) -> np.ndarray:
        if index == 0:
            return self.channel0
        if index == 1:
            return self.channel1
        raise ValueError(f"channel index must be 0 or 1, got {index}")


@dataclass(frozen=True)
class Ray:
    """A picking ray with unit direction."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        direction = np.asarray(self.direction, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(origin)) or not np.all(np.isfinite(direction)):
            raise ValueError("ray origin and direction must be finite")
        norm = float(np.linalg.norm(direction))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"ray direction must be unit length (|d| = {norm})")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", direction)

    @classmethod
    def normalized(cls, origin, direction) -> "Ray":
        """Build a ray from an arbitrary non-zero direction vector."""
        direction = np.asarray(direction, dtype=np.float64).reshape(3)
        norm = float(np.linalg.norm(direction))
        if norm == 0.0 or not np.isfinite(norm):
            raise ValueError("ray direction must be non-zero and finite")
        return cls(origin, direction / norm)


@dataclass(frozen=True)
class PickHit:
    """Result of a successful ray/mesh intersection.

    ``nearest_vertex`` is the vertex of the hit triangle with the greatest
    barycentric weight (ties broken by lowest vertex index); ``distance`` is
    the ray parameter of the hit.
    """

    triangle_index: int
    barycentric: np.ndarray
    point: np.ndarray
    nearest_vertex: int
    distance: float


@dataclass
class ValidationReport:
    """Accumulated invariant violations; empty means the input is valid."""

    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:
        return self.ok

    def add(self, problem: str):
        self.problems.append(problem)


class AdjacencyMap:
    """Immutable vertex adjacency of a mesh edge graph.

    Rows of the CSR matrix are neighbour lists; weights are Euclidean edge
    lengths.  Symmetric and self-loop-free by construction.  Safe to share
    between threads.
    """

    __slots__ = ("graph", "n_vertices")

    def __init__(self, graph: sparse.csr_matrix):
        self.graph = graph
        self.n_vertices = graph.shape[0]

    def neighbors(self, vertex: int) -> np.ndarray:
        """Indices of vertices sharing an edge with ``vertex`` (sorted)."""
        g = self.graph
        return g.indices[g.indptr[vertex]:g.indptr[vertex + 1]]

    def degree(self, vertex: int) -> int:
        g = self.graph
        return int(g.indptr[vertex + 1] - g.indptr[vertex])


def validate_mesh(mesh: TriangleMesh, colours: ChannelData | None = None) -> ValidationReport:
    """Check every mesh (and optionally colour) invariant.

    Never raises: all violations are collected into the returned report, one
    entry per violated invariant with a representative offending element.
    """
    report = ValidationReport()
    n = mesh.vertex_count
    if n < 1:
        report.add("mesh has no vertices")
    finite = np.isfinite(mesh.positions)
    if not finite.all():
        bad = int(np.flatnonzero(~finite.all(axis=1))[0])
        report.add(f"non-finite coordinate at vertex {bad}")
    tri = mesh.triangles
    if tri.size:
        out = tri >= n
        if out.any():
            bad = int(np.flatnonzero(out.any(axis=1))[0])
            report.add(
                f"triangle {bad} has vertex index out of range "
                f"(max index {int(tri[bad].max())}, vertex count {n})"
            )
        degen = (
            (tri[:, 0] == tri[:, 1]) | (tri[:, 1] == tri[:, 2]) | (tri[:, 0] == tri[:, 2])
        )
        if degen.any():
            bad = int(np.flatnonzero(degen)[0])
            report.add(f"triangle {bad} repeats a vertex index")
    if colours is not None:
        if len(colours.channel0) != n:
            report.add(
                f"channel 0 length mismatch ({len(colours.channel0)} values, {n} vertices)"
            )
        if len(colours.channel1) != n:
            report.add(
                f"channel 1 length mismatch ({len(colours.channel1)} values, {n} vertices)"
            )
    return report


def build_adjacency(mesh: TriangleMesh) -> AdjacencyMap:
    """Build the undirected edge graph of a valid mesh.

    Raises
    ------
    MeshValidationError
        If the mesh fails :func:`validate_mesh`.
    """
    report = validate_mesh(mesh)
    if not report.ok:
        raise MeshValidationError(report)
    n = mesh.vertex_count
    tri = mesh.triangles.astype(np.int64)
    if tri.size == 0:
        graph = sparse.csr_matrix((n, n), dtype=np.float64)
        return AdjacencyMap(graph)
    pairs = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    pairs.sort(axis=1)
    pairs = np.unique(pairs, axis=0)  # dedupe shared edges before weighting
    pos = mesh.positions.astype(np.float64)
    weights = np.linalg.norm(pos[pairs[:, 0]] - pos[pairs[:, 1]], axis=1)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    data = np.concatenate([weights, weights])
    graph = sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    graph.sort_indices()
    return AdjacencyMap(graph)


def ray_pick(mesh: TriangleMesh, ray: Ray) -> PickHit | None:
    """Intersect a ray with every triangle and return the nearest hit.

    Returns the hit with the smallest non-negative ray parameter, or None if
    no triangle intersects.  Ties at identical parameter break to the lower
    triangle index.  Degenerate (zero-area) triangles never register hits.
    """
    if mesh.triangle_count == 0:
        return None
    pos = mesh.positions.astype(np.float64)
    tri = mesh.triangles.astype(np.int64)
    v0 = pos[tri[:, 0]]
    v1 = pos[tri[:, 1]]
    v2 = pos[tri[:, 2]]
    e1 = v1 - v0
    e2 = v2 - v0
    d = ray.direction
    pvec = np.cross(np.broadcast_to(d, e2.shape), e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    usable = np.abs(det) > _DET_EPS
    inv_det = np.zeros_like(det)
    inv_det[usable] = 1.0 / det[usable]
    tvec = ray.origin - v0
    u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1)
    v = qvec @ d * inv_det
    t = np.einsum("ij,ij->i", qvec, e2) * inv_det
    ok = (
        usable
        & (u >= -BARYCENTRIC_EPS)
        & (v >= -BARYCENTRIC_EPS)
        & (u + v <= 1.0 + BARYCENTRIC_EPS)
        & (t >= -RAY_PARAM_EPS)
    )
    if not ok.any():
        return None
    t_ok = np.where(ok, t, np.inf)
    best = int(np.argmin(t_ok))  # argmin takes the first (lowest) index on ties
    bary = np.array([1.0 - u[best] - v[best], u[best], v[best]])
    bary = np.clip(bary, 0.0, None)
    bary /= bary.sum()
    corners = tri[best]
    point = bary @ pos[corners]
    order = np.lexsort((corners, -bary))  # greatest weight, then lowest index
    nearest = int(corners[order[0]])
    return PickHit(
        triangle_index=best,
        barycentric=bary,
        point=point,
        nearest_vertex=nearest,
        distance=max(float(t[best]), 0.0),
    )


def surface_distances(
    mesh: TriangleMesh,
    seed: int,
    radius: float,
    metric: DistanceMetric = DistanceMetric.GEODESIC_EDGE_GRAPH,
    adjacency: AdjacencyMap | None = None,
) -> dict[int, float]:
    """Vertices within ``radius`` of ``seed`` under the given metric.

    Geodesic distances are shortest-path lengths on the edge graph with
    Euclidean edge weights; Euclidean distances are straight-line from the
    seed position.  The result always contains the seed with distance 0.

    Parameters
    ----------
    adjacency : AdjacencyMap, optional
        Pre-built edge graph; pass it when calling repeatedly on one frame.
    """
    n = mesh.vertex_count
    if not 0 <= seed < n:
        raise IndexError(f"seed vertex {seed} out of range for {n} vertices")
    radius = float(radius)
    if not np.isfinite(radius) or radius < 0:
        raise ValueError(f"radius must be finite and non-negative, got {radius}")
    if metric is DistanceMetric.EUCLIDEAN:
        pos = mesh.positions.astype(np.float64)
        dist = np.linalg.norm(pos - pos[seed], axis=1)
        dist[seed] = 0.0
        members = np.flatnonzero(dist <= radius)
    else:
        if adjacency is None:
            adjacency = build_adjacency(mesh)
        dist = csgraph.dijkstra(adjacency.graph, indices=seed, limit=radius)
        members = np.flatnonzero(np.isfinite(dist) & (dist <= radius))
    return {int(v): float(dist[v]) for v in members}


def triangle_areas(mesh: TriangleMesh) -> np.ndarray:
    """Area of every triangle (vectorized); degenerate triangles give 0."""
    pos = mesh.positions.astype(np.float64)
    tri = mesh.triangles.astype(np.int64)
    if tri.size == 0:
        return np.zeros(0)
    cross = np.cross(pos[tri[:, 1]] - pos[tri[:, 0]], pos[tri[:, 2]] - pos[tri[:, 0]])
    return 0.5 * np.linalg.norm(cross, axis=1)


def triangle_area(mesh: TriangleMesh, triangle_index: int) -> float:
    """Area of one triangle: half the cross-product magnitude of two edges."""
    if not 0 <= triangle_index < mesh.triangle_count:
        raise IndexError(
            f"triangle {triangle_index} out of range for {mesh.triangle_count} triangles"
        )
    pos = mesh.positions.astype(np.float64)
    a, b, c = mesh.triangles[triangle_index].astype(np.int64)
    return 0.5 * float(np.linalg.norm(np.cross(pos[b] - pos[a], pos[c] - pos[a])))
