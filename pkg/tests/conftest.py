"""Shared generators for meshes, frames, and externally written .ply files."""
from __future__ import annotations

import struct
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from surfannot.mesh import ChannelData, TriangleMesh
from surfannot.plyio import SurfaceFrame


def grid_mesh(nx: int, ny: int, spacing: float = 1.0, jitter: float = 0.0, rng=None):
    """Regular triangulated grid in the z=0 plane; always connected."""
    xs, ys = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    pos = np.stack(
        [xs.ravel() * spacing, ys.ravel() * spacing, np.zeros(nx * ny)], axis=1
    )
    if jitter and rng is not None:
        pos = pos + rng.uniform(-jitter, jitter, pos.shape)
    tris = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = i * ny + j
            b = (i + 1) * ny + j
            c = i * ny + j + 1
            d = (i + 1) * ny + j + 1
            tris.append((a, b, c))
            tris.append((b, d, c))
    return TriangleMesh(pos, np.array(tris))


def delaunay_mesh(n_points: int, rng, z_scale: float = 0.3) -> TriangleMesh:
    """Random connected mesh from a 2D Delaunay triangulation with z relief."""
    from scipy.spatial import Delaunay

    pts2 = rng.uniform(0, 10, (n_points, 2))
    tri = Delaunay(pts2)
    z = z_scale * np.sin(pts2[:, 0]) * np.cos(pts2[:, 1]) + rng.normal(
        0, 0.05, n_points
    )
    pos = np.column_stack([pts2, z])
    return TriangleMesh(pos, tri.simplices)


def soup_mesh(n_vertices: int, n_triangles: int, rng) -> TriangleMesh:
    """Random triangle soup; valid but unconnected in general."""
    pos = rng.uniform(-5, 5, (n_vertices, 3))
    tris = np.empty((n_triangles, 3), dtype=np.int64)
    for i in range(n_triangles):
        tris[i] = rng.choice(n_vertices, size=3, replace=False)
    return TriangleMesh(pos, tris)


def random_channels(n: int, rng) -> ChannelData:
    return ChannelData(rng.integers(0, 256, n), rng.integers(0, 256, n))


def random_frame(
    rng,
    n_vertices: int | None = None,
    with_labels: bool | None = None,
    with_extras: bool = False,
) -> SurfaceFrame:
    """Random connected frame with colours and optional labels/extras."""
    if n_vertices is None:
        n_vertices = int(rng.integers(4, 60))
    mesh = delaunay_mesh(n_vertices, rng)
    n = mesh.vertex_count
    colours = random_channels(n, rng)
    if with_labels is None:
        with_labels = bool(rng.integers(0, 2))
    labels = None
    if with_labels:
        labels = rng.random(n) < 0.3
        if not labels.any():
            labels[int(rng.integers(0, n))] = True
    extras = {}
    layout = None
    if with_extras:
        extras = {
            "nx": rng.standard_normal(n).astype(np.float32),
            "quality": rng.integers(0, 1000, n).astype(np.int32),
            "alpha": rng.integers(0, 256, n).astype(np.uint8),
        }
        layout = (
            ("x", "float"), ("y", "float"), ("z", "float"),
            ("nx", "float"),
            ("red", "uchar"), ("green", "uchar"), ("blue", "uchar"),
            ("quality", "int"), ("alpha", "uchar"),
        )
    return SurfaceFrame(
        mesh=mesh, colours=colours, labels=labels,
        extras=extras, vertex_layout=layout,
    )


def hop_distances(triangles, n_vertices: int, seed: int) -> list[int]:
    """Graph hop count from seed to every vertex (-1 when unreachable)."""
    from collections import deque

    adj: dict[int, set[int]] = {}
    for a, b, c in np.asarray(triangles, dtype=np.int64):
        for u, v in ((a, b), (b, c), (c, a)):
            adj.setdefault(int(u), set()).add(int(v))
            adj.setdefault(int(v), set()).add(int(u))
    hops = [-1] * n_vertices
    hops[seed] = 0
    queue = deque([seed])
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if hops[v] < 0:
                hops[v] = hops[u] + 1
                queue.append(v)
    return hops


def growing_patch_series(
    n_frames: int = 5,
    side: int = 13,
    bright: int = 200,
    dim: int = 10,
):
    """Grid series with a bright channel-1 patch gaining one ring per frame.

    Frame i is bright on every vertex within i+1 graph hops of the centre
    vertex.  Returns (frames, centre vertex index).
    """
    from surfannot.plyio import SurfaceSeries

    mesh = grid_mesh(side, side)
    centre = (side // 2) * side + side // 2
    hops = hop_distances(mesh.triangles, mesh.vertex_count, centre)
    frames = []
    for i in range(n_frames):
        ch1 = np.where(
            np.array(hops) <= i + 1, bright, dim
        ).astype(np.uint8)
        ch0 = np.full(mesh.vertex_count, 77, dtype=np.uint8)
        frames.append(SurfaceFrame(mesh=mesh, colours=ChannelData(ch0, ch1)))
    return SurfaceSeries(frames), centre


# -- external .ply writers ---------------------------------------------------
# Written from the format definition, independent of surfannot.plyio, so the
# parser is exercised against files it did not produce itself.

_STRUCT_CODES = {
    "char": "b", "uchar": "B", "short": "h", "ushort": "H",
    "int": "i", "uint": "I", "float": "f", "double": "d",
}


def _frame_columns(frame: SurfaceFrame):
    layout = frame.vertex_layout
    pos = frame.mesh.positions
    builtin = {
        "x": pos[:, 0], "y": pos[:, 1], "z": pos[:, 2],
        "red": frame.colours.channel0,
        "green": frame.colours.channel1,
        "blue": (
            np.where(frame.labels, 255, 0).astype(np.uint8)
            if frame.labels is not None
            else np.zeros(frame.mesh.vertex_count, dtype=np.uint8)
        ),
    }
    return [(name, typ, builtin.get(name, frame.extras.get(name))) for name, typ in layout]


def external_ascii_ply(frame: SurfaceFrame) -> bytes:
    """Plain ASCII 1.0 encoding of a frame, one element per line."""
    cols = _frame_columns(frame)
    lines = ["ply", "format ascii 1.0", "comment external writer"]
    lines.append(f"element vertex {frame.mesh.vertex_count}")
    for name, typ, _ in cols:
        lines.append(f"property {typ} {name}")
    lines.append(f"element face {frame.mesh.triangle_count}")
    lines.append("property list uchar int vertex_indices")
    lines.append("end_header")
    for i in range(frame.mesh.vertex_count):
        parts = []
        for _, typ, values in cols:
            v = values[i]
            if typ in ("float", "double"):
                parts.append(np.format_float_positional(v, unique=True, trim="-"))
            else:
                parts.append(str(int(v)))
        lines.append(" ".join(parts))
    for tri in frame.mesh.triangles:
        lines.append("3 " + " ".join(str(int(v)) for v in tri))
    return ("\n".join(lines) + "\n").encode("ascii")


def external_binary_ply(frame: SurfaceFrame) -> bytes:
    """binary_little_endian 1.0 encoding of a frame via struct packing."""
    cols = _frame_columns(frame)
    header = ["ply", "format binary_little_endian 1.0"]
    header.append(f"element vertex {frame.mesh.vertex_count}")
    for name, typ, _ in cols:
        header.append(f"property {typ} {name}")
    header.append(f"element face {frame.mesh.triangle_count}")
    header.append("property list uchar int vertex_indices")
    header.append("end_header")
    out = bytearray(("\n".join(header) + "\n").encode("ascii"))
    fmt = "<" + "".join(_STRUCT_CODES[typ] for _, typ, _ in cols)
    for i in range(frame.mesh.vertex_count):
        values = []
        for _, typ, column in cols:
            v = column[i]
            values.append(float(v) if typ in ("float", "double") else int(v))
        out += struct.pack(fmt, *values)
    for tri in frame.mesh.triangles:
        out += struct.pack("<Biii", 3, int(tri[0]), int(tri[1]), int(tri[2]))
    return bytes(out)
