"""
Projects, saving, and the versioned session
===========================================

open_project reads a directory of frames (plus any saved markers and
manifest) into a Project; save_project writes labelled copies, the
marker CSV, and a checksummed manifest.  A Session wraps a Project in a
lock and a version counter so several writers cannot trample each other.
"""

import tempfile
from pathlib import Path

import numpy as np

from surfannot import (
    ChannelData,
    Ray,
    Session,
    StaleVersionError,
    SurfaceFrame,
    TriangleMesh,
    open_project,
    verify_manifest,
    write_ply,
)


def down_ray(target):
    return Ray.normalized(np.asarray(target) + [0, 0, 5], [0, 0, -1])

# write a small series to disk, the shape a microscope pipeline leaves behind
workdir = Path(tempfile.mkdtemp())
source = workdir / "series"
source.mkdir()
positions = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=np.float32)
mesh = TriangleMesh(positions, np.array([[0, 1, 2], [1, 3, 2]]))
for i in range(3):
    ch = np.full(4, 50 + 60 * i, dtype=np.uint8)
    frame = SurfaceFrame(mesh=mesh, colours=ChannelData(ch, ch[::-1].copy()))
    (source / f"t{i}.ply").write_bytes(write_ply(frame))

project = open_project(source)
print("opened", project.series.frame_count, "frames, dirty:", project.dirty)

# the session serializes edits and hands out a version per change
session = Session(project)
changed, version = session.stroke(0, seed=0, radius=1.0)
print("stroke painted", len(changed), "vertices, version", version)

marker, version = session.add_marker(0, session.pick(0, down_ray(positions[3])))
print("marker at vertex", marker.vertex_index, ", version", version)

# a writer holding an old version is refused and nothing changes
try:
    session.stroke(0, seed=0, radius=1.0, expected_version=0)
except StaleVersionError as exc:
    print("stale writer refused:", exc)

# saving writes labelled frames, markers.csv, and a manifest
saved = workdir / "annotated"
session.save(saved)
print("saved files:", sorted(p.name for p in saved.iterdir()))
verify_manifest(saved)
print("manifest checks out")

# reopening restores labels and markers exactly
reopened = open_project(saved)
print("labels restored:", [int(l.sum()) for l in reopened.state.labels])
print("markers restored:", len(reopened.state.markers))
