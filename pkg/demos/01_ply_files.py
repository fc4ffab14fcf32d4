"""
Reading and writing surface frames
==================================

A frame is one triangulated surface plus two per-vertex intensity
channels and an optional binary label layer.  On disk it is a PLY file:
channel 0 lives in red, channel 1 in green, and labels in blue.
"""

import tempfile
from pathlib import Path

import numpy as np

from surfannot import ChannelData, SurfaceFrame, TriangleMesh, parse_ply, write_ply

# a tetrahedron with made-up intensities
positions = np.array(
    [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=np.float32
)
triangles = np.array([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
mesh = TriangleMesh(positions, triangles)

channel0 = np.array([10, 20, 30, 40], dtype=np.uint8)
channel1 = np.array([200, 150, 100, 50], dtype=np.uint8)
frame = SurfaceFrame(mesh=mesh, colours=ChannelData(channel0, channel1))

# paint vertices 1 and 3, then serialize
frame = frame.with_labels(np.array([False, True, False, True]))
data = write_ply(frame)
print("header:")
print(data[: data.index(b"end_header")].decode("ascii"))

# the byte stream parses back to the identical frame
reread = parse_ply(data)
print("labels survive the trip:", reread.labels.tolist())
print("channel 0 unchanged:", np.array_equal(reread.colours.channel0, channel0))
print("bytes are canonical:", write_ply(reread) == data)

# plain ascii files from other tools parse too
ascii_file = b"""ply
format ascii 1.0
element vertex 3
property float x
property float y
property float z
property uchar red
property uchar green
property uchar blue
element face 1
property list uchar int vertex_indices
end_header
0 0 0 5 9 0
1 0 0 6 8 255
0 1 0 7 7 0
3 0 1 2
"""
external = parse_ply(ascii_file)
print("ascii import, labelled vertices:", np.flatnonzero(external.labels).tolist())

# files are rejected with the byte offset of the first problem
try:
    parse_ply(ascii_file.replace(b"3 0 1 2", b"3 0 1 9"))
except Exception as exc:
    print("bad file:", exc)

# a directory of frames becomes an ordered series
workdir = Path(tempfile.mkdtemp())
for i in range(3):
    (workdir / f"t{i}.ply").write_bytes(data)
from surfannot import load_series

series = load_series(workdir)
print("series frames:", series.frame_count)
