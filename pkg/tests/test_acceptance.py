"""Acceptance gate: one test per headline guarantee of the toolkit.

Run with -v to get a single pass/fail line per guarantee.  Every derived
value is checked against an independent oracle from oracles.py (scalar
intersection, heapq Dijkstra, BFS flood fill, struct-level file scraping);
no guarantee is verified by the code under test alone.
"""
import re
import time

import numpy as np
import pytest

import oracles
from conftest import (
    delaunay_mesh,
    external_ascii_ply,
    growing_patch_series,
    random_channels,
    random_frame,
)
from surfannot.analysis import extract_component
from surfannot.annotation import AnnotationState, BrushMode, BrushStroke
from surfannot.cli import main
from surfannot.errors import PlyParseError
from surfannot.mesh import DistanceMetric, Ray, ray_pick
from surfannot.plyio import (
    SurfaceFrame,
    SurfaceSeries,
    frames_equal,
    load_series,
    parse_ply,
    write_ply,
)
from surfannot.session import open_project, save_project

N_SUITE = 1_000

GOOD_ASCII = b"""ply
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
0 0 0 10 20 0
1 0 0 30 40 0
0 1 0 50 60 255
3 0 1 2
"""

_suite_cache: list[tuple[SurfaceFrame, bytes]] | None = None


def roundtrip_suite():
    """1,000 random frames, 3 to 2,000 vertices, with canonical encodings.

    Sizes are log-uniform so small meshes dominate but the large end is
    exercised.  Built once and shared between the round-trip and channel
    convention checks.
    """
    global _suite_cache
    if _suite_cache is None:
        rng = np.random.default_rng(901)
        suite = []
        for _ in range(N_SUITE):
            size = int(round(3.0 * (2000.0 / 3.0) ** rng.random()))
            frame = random_frame(
                rng,
                n_vertices=min(size, 2000),
                with_extras=bool(rng.random() < 0.15),
            )
            suite.append((frame, write_ply(frame)))
        _suite_cache = suite
    return _suite_cache


def malformed_corpus():
    """Twenty handcrafted rejects, each a distinct way a file can be wrong."""
    g = GOOD_ASCII
    small = random_frame(np.random.default_rng(902), n_vertices=12)
    binary = write_ply(small)
    return [
        ("bad magic", g.replace(b"ply\n", b"plx\n", 1)),
        ("big endian format", g.replace(b"ascii", b"binary_big_endian")),
        ("unsupported version", g.replace(b"1.0", b"2.0")),
        ("missing red property", g.replace(b"property uchar red\n", b"")),
        ("x declared double", g.replace(b"property float x", b"property double x")),
        ("list-typed vertex property",
         g.replace(b"property uchar green", b"property list uchar int green")),
        ("duplicate property name",
         g.replace(b"property uchar green", b"property uchar red")),
        ("non-list face property",
         g.replace(b"property list uchar int vertex_indices", b"property float area")),
        ("quad face", g.replace(b"3 0 1 2", b"4 0 1 2 2")),
        ("face index out of range", g.replace(b"3 0 1 2", b"3 0 1 9")),
        ("degenerate face", g.replace(b"3 0 1 2", b"3 0 1 1")),
        ("non-numeric token", g.replace(b"1 0 0 30 40 0", b"1 zero 0 30 40 0")),
        ("nan position", g.replace(b"1 0 0 30 40 0", b"nan 0 0 30 40 0")),
        ("property before any element", g.replace(b"element vertex 3\n", b"")),
        ("truncated ascii body", g[: g.index(b"3 0 1 2")]),
        ("trailing ascii junk", g + b"wat\n"),
        ("unterminated header", g[: g.index(b"end_header")]),
        ("truncated binary body", binary[:-3]),
        ("trailing binary bytes", binary + b"\x00" * 5),
        ("negative vertex count", g.replace(b"element vertex 3", b"element vertex -3")),
    ]


def test_ply_round_trip_identities_and_malformed_rejection():
    start = time.perf_counter()
    suite = roundtrip_suite()
    for i, (frame, data) in enumerate(suite):
        reread = parse_ply(data)
        assert frames_equal(reread, frame)
        assert write_ply(reread) == data  # canonical bytes are a fixed point
        if i % 2:
            assert frames_equal(parse_ply(external_ascii_ply(frame)), frame)
    elapsed = time.perf_counter() - start

    corpus = malformed_corpus()
    assert len(corpus) == 20
    for name, data in corpus:
        with pytest.raises(PlyParseError) as err:
            parse_ply(data)
        located = re.search(r"parse error at byte (\d+)", str(err.value))
        assert located is not None, name
        assert 0 <= int(located.group(1)) <= len(data), name

    assert elapsed < 30.0
    print(f"{len(suite)} frames round-tripped in {elapsed:.1f}s")


def test_labels_live_in_blue_red_green_untouched():
    for frame, data in roundtrip_suite():
        red, green, blue = oracles.scrape_ply_colours(data)
        assert np.array_equal(red, frame.colours.channel0)
        assert np.array_equal(green, frame.colours.channel1)
        expected = (
            np.where(frame.labels, 255, 0)
            if frame.labels is not None
            else np.zeros(frame.mesh.vertex_count, dtype=int)
        )
        assert np.array_equal(blue, expected)


def test_brush_masks_equal_oracle_replay():
    rng = np.random.default_rng(903)
    start = time.perf_counter()
    for _ in range(100):
        mesh = delaunay_mesh(int(rng.integers(10, 1001)), rng)
        series = SurfaceSeries([
            SurfaceFrame(mesh=mesh, colours=random_channels(mesh.vertex_count, rng))
        ])
        state = AnnotationState(series)
        shadow: set[int] = set()
        for _ in range(50):
            seed = int(rng.integers(0, mesh.vertex_count))
            radius = float(rng.uniform(0.1, 3.0))
            geodesic = rng.random() < 0.7
            paint = rng.random() < 0.6
            state.apply_stroke(BrushStroke(
                0, seed, radius,
                DistanceMetric.GEODESIC_EDGE_GRAPH if geodesic
                else DistanceMetric.EUCLIDEAN,
                BrushMode.PAINT if paint else BrushMode.ERASE,
            ))
            if geodesic:
                region = oracles.geodesic_region(
                    mesh.positions, mesh.triangles, seed, radius
                )
            else:
                region = oracles.euclidean_region(mesh.positions, seed, radius)
            shadow = shadow | region if paint else shadow - region
        assert set(np.flatnonzero(state.labels[0]).tolist()) == shadow
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    print(f"5,000 strokes replayed in {elapsed:.1f}s")


def test_picks_match_all_triangle_brute_force():
    rng = np.random.default_rng(904)
    hits = 0
    for _ in range(20):
        mesh = delaunay_mesh(int(rng.integers(30, 150)), rng)
        for _ in range(500):
            aim = mesh.positions[int(rng.integers(0, mesh.vertex_count))]
            aim = aim + rng.normal(0, 0.6, 3)
            origin = np.array([
                rng.uniform(-3, 13), rng.uniform(-3, 13), rng.uniform(5, 15)
            ])
            ray = Ray.normalized(origin, aim - origin)
            got = ray_pick(mesh, ray)
            expected = oracles.pick_bruteforce(
                mesh.positions, mesh.triangles, ray.origin, ray.direction
            )
            if expected is None:
                assert got is None
                continue
            hits += 1
            tri, t = expected
            assert got is not None
            assert got.triangle_index == tri
            assert abs(got.distance - t) <= 1e-9 * max(1.0, abs(t))
    assert hits > 2000  # the comparison must mostly exercise real hits
    print(f"10,000 rays, {hits} hits")


def test_components_equal_flood_fill_and_shrink_with_threshold():
    rng = np.random.default_rng(905)
    for _ in range(200):
        mesh = delaunay_mesh(int(rng.integers(8, 120)), rng)
        frame = SurfaceFrame(
            mesh=mesh, colours=random_channels(mesh.vertex_count, rng)
        )
        channel = int(rng.integers(0, 2))
        threshold = int(rng.integers(0, 256))
        seed = int(rng.integers(0, mesh.vertex_count))
        component = extract_component(frame, seed, channel, threshold)
        passes = frame.colours.channel(channel) >= threshold
        region = oracles.flood_fill(mesh.triangles, seed, passes)
        assert set(component.members.tolist()) == region
        assert component.area == pytest.approx(
            oracles.component_area(mesh.positions, mesh.triangles, region),
            rel=1e-9, abs=1e-12,
        )
        raised = min(255, threshold + int(rng.integers(1, 80)))
        tighter = extract_component(frame, seed, channel, raised)
        assert set(tighter.members.tolist()) <= set(component.members.tolist())


def test_undo_redo_traces_equal_net_replay():
    from test_annotation import check_trace_against_oracle, run_random_trace

    rng = np.random.default_rng(906)
    for _ in range(1000):
        state, masks, markers = run_random_trace(rng, int(rng.integers(5, 45)))
        check_trace_against_oracle(state, masks, markers)


def test_projects_round_trip_markers_and_labels(tmp_path):
    from test_annotation import corner_hit

    rng = np.random.default_rng(907)
    for case in range(20):
        src = tmp_path / f"proj{case:02d}"
        src.mkdir()
        n_frames = int(rng.integers(2, 5))
        for i in range(n_frames):
            frame = random_frame(rng, n_vertices=int(rng.integers(8, 50)))
            (src / f"t{i}.ply").write_bytes(write_ply(frame))
        project = open_project(src)
        for _ in range(int(rng.integers(1, 6))):
            frame_i = int(rng.integers(0, n_frames))
            mesh = project.series[frame_i].mesh
            project.state.apply_stroke(BrushStroke(
                frame_i,
                int(rng.integers(0, mesh.vertex_count)),
                float(rng.uniform(0.2, 2.5)),
                DistanceMetric.GEODESIC_EDGE_GRAPH,
                BrushMode.PAINT,
            ))
        for _ in range(int(rng.integers(1, 4))):
            frame_i = int(rng.integers(0, n_frames))
            mesh = project.series[frame_i].mesh
            project.state.place_marker(frame_i, corner_hit(
                mesh, int(rng.integers(0, mesh.triangle_count)),
                int(rng.integers(0, 3)),
            ))
        dst = tmp_path / f"saved{case:02d}"
        save_project(project, dst)
        reopened = open_project(dst)
        assert (
            reopened.state.export_markers_csv()
            == project.state.export_markers_csv()
        )
        for before, after in zip(project.state.labels, reopened.state.labels):
            assert np.array_equal(before, after)


def test_cli_tracks_growing_patch_counts(tmp_path):
    from test_cli import growing_patch_dir

    src, markers, centre = growing_patch_dir(tmp_path)
    out = tmp_path / "tracks.csv"
    assert main([
        "tracks", str(src), "--markers", str(markers),
        "--channel", "1", "--threshold", "128", "--out", str(out),
    ]) == 0
    rows = out.read_text().splitlines()[1:]
    assert len(rows) == 5
    counts = [int(row.split(",")[3]) for row in rows]
    assert all(b > a for a, b in zip(counts, counts[1:]))
    series = load_series(src)
    for i, count in enumerate(counts):
        frame = series[i]
        region = oracles.flood_fill(
            frame.mesh.triangles, centre, frame.colours.channel1 >= 128
        )
        assert count == len(region)


def test_load_and_stroke_performance(tmp_path):
    rng = np.random.default_rng(909)
    mesh = delaunay_mesh(10_000, rng)
    src = tmp_path / "big"
    src.mkdir()
    for i in range(50):
        frame = SurfaceFrame(
            mesh=mesh, colours=random_channels(mesh.vertex_count, rng)
        )
        (src / f"t{i:02d}.ply").write_bytes(write_ply(frame))
    start = time.perf_counter()
    series = load_series(src)
    load_elapsed = time.perf_counter() - start
    assert series.frame_count == 50
    assert series[0].vertex_count == 10_000
    assert load_elapsed < 5.0

    small = delaunay_mesh(500, rng)
    state = AnnotationState(SurfaceSeries([
        SurfaceFrame(mesh=small, colours=random_channels(small.vertex_count, rng))
    ]))
    stroke = BrushStroke(
        0, 0, 3.0, DistanceMetric.GEODESIC_EDGE_GRAPH, BrushMode.PAINT
    )
    best = min(
        _timed(lambda: state.apply_stroke(stroke)) for _ in range(5)
    )
    assert best < 0.050
    print(f"50x10,000-vertex load {load_elapsed:.2f}s, stroke {best * 1000:.1f}ms")


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start
