"""
The annotation service over HTTP
================================

``surfannot serve <dir>`` exposes one session on localhost.  Geometry
and display buffers stream as binary, everything else is JSON, and each
mutation returns the new session version.  This script runs the server
in a thread and talks to it with nothing but the standard library.
"""

import json
import struct
import tempfile
import threading
import time
import urllib.error
import urllib.request
from pathlib import Path

import numpy as np
import uvicorn

from surfannot import (
    ChannelData,
    Session,
    SurfaceFrame,
    TriangleMesh,
    open_project,
    write_ply,
)
from surfannot.server import create_app

# a square with two triangles is plenty for a wire-format tour
source = Path(tempfile.mkdtemp()) / "series"
source.mkdir()
positions = np.array([[0, 0, 0], [2, 0, 0], [0, 2, 0], [2, 2, 0]], dtype=np.float32)
mesh = TriangleMesh(positions, np.array([[0, 1, 2], [1, 3, 2]]))
ch = np.array([10, 60, 110, 160], dtype=np.uint8)
frame = SurfaceFrame(mesh=mesh, colours=ChannelData(ch, ch[::-1].copy()))
(source / "t0.ply").write_bytes(write_ply(frame))

app = create_app(Session(open_project(source)))
config = uvicorn.Config(app, host="127.0.0.1", port=8147, log_level="error")
server = uvicorn.Server(config)
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.05)

base = "http://127.0.0.1:8147/api/v1"


def get(path):
    with urllib.request.urlopen(base + path) as response:
        return response.read()


def post(path, body):
    request = urllib.request.Request(
        base + path, json.dumps(body).encode(), {"content-type": "application/json"}
    )
    with urllib.request.urlopen(request) as response:
        return json.loads(response.read())


print("project:", json.loads(get("/project"))["frame_count"], "frame(s)")

# geometry arrives as u32 counts then f32 positions then u32 indices
wire = get("/frames/0/geometry")
n_vertices, n_triangles = struct.unpack_from("<II", wire)
print("geometry wire:", n_vertices, "vertices,", n_triangles,
      "triangles,", len(wire), "bytes")

# display buffers are rgba bytes, 4 per vertex
rgba = get("/frames/0/display?mode=twotone")
print("twotone rgba:", list(rgba[:8]), "...")

# paint, then replay the same request with the old version
body = post("/frames/0/strokes", {"seed": 0, "radius": 2.0, "version": 0})
print("stroke changed", len(body["changed"]), "vertices, version", body["version"])
try:
    post("/frames/0/strokes", {"seed": 0, "radius": 2.0, "version": 0})
except urllib.error.HTTPError as exc:
    print("stale replay:", exc.code, json.loads(exc.read())["error"]["type"])

# undo over the wire describes what it reverted
print("undo:", post("/undo", {})["undone"])

# the marker CSV downloads like any file
print("markers.csv:", get("/markers.csv").decode().strip())

server.should_exit = True
thread.join(timeout=5)
print("server stopped")
