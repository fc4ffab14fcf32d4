"""
Painting labels with a radius brush
===================================

A stroke floods outward from a seed vertex to every vertex within the
brush radius, either along mesh edges (geodesic) or straight through
space (euclidean), and paints or erases the binary label layer.  Every
stroke and marker edit is undoable.
"""

import numpy as np

from surfannot import (
    AnnotationState,
    BrushMode,
    BrushStroke,
    ChannelData,
    DistanceMetric,
    SurfaceFrame,
    SurfaceSeries,
    TriangleMesh,
    surface_distances,
)

# a strip of triangles, so edge paths and straight lines disagree
n = 9
positions = np.zeros((2 * n, 3), dtype=np.float32)
positions[:n, 0] = np.arange(n)
positions[n:, 0] = np.arange(n) + 0.5
positions[n:, 1] = 1.0
tris = []
for i in range(n - 1):
    tris.append([i, n + i, i + 1])
    tris.append([n + i, n + i + 1, i + 1])
mesh = TriangleMesh(positions, np.array(tris))
grey = np.full(mesh.vertex_count, 90, dtype=np.uint8)
series = SurfaceSeries([SurfaceFrame(mesh=mesh, colours=ChannelData(grey, grey))])
state = AnnotationState(series)

# distances from the left end, the quantity the brush thresholds
d = surface_distances(mesh, seed=0, radius=3.0, metric=DistanceMetric.GEODESIC_EDGE_GRAPH)
print("vertices within geodesic radius 3:", sorted(d))

# paint with that brush; the returned array lists newly labelled vertices
changed = state.apply_stroke(BrushStroke(
    frame=0, seed=0, radius=3.0,
    metric=DistanceMetric.GEODESIC_EDGE_GRAPH, mode=BrushMode.PAINT,
))
print("painted:", changed.tolist())

# a second identical stroke changes nothing new
again = state.apply_stroke(BrushStroke(
    0, 0, 3.0, DistanceMetric.GEODESIC_EDGE_GRAPH, BrushMode.PAINT
))
print("repeat stroke changed:", again.tolist())

# erase a smaller euclidean disc around the same seed
erased = state.apply_stroke(BrushStroke(
    0, 0, 1.5, DistanceMetric.EUCLIDEAN, BrushMode.ERASE
))
print("erased:", erased.tolist())
print("labelled now:", np.flatnonzero(state.labels[0]).tolist())

# undo steps back through the history, redo replays it
state.undo()
print("after undo:", np.flatnonzero(state.labels[0]).tolist())
state.redo()
print("after redo:", np.flatnonzero(state.labels[0]).tolist())
print("nothing left to redo:", state.redo() is None)
