"""HTTP contract: endpoint payloads, status codes, API-vs-library parity."""
import struct

import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import delaunay_mesh, random_channels
from surfannot.mesh import DistanceMetric, Ray
from surfannot.plyio import SurfaceFrame, write_ply
from surfannot.server import create_app
from surfannot.session import Session, open_project
from surfannot.view import RenderMode, ThresholdWindow


def build_project_dir(tmp_path, rng, n_frames=3, n_vertices=25):
    src = tmp_path / "series"
    src.mkdir(parents=True, exist_ok=True)
    for i in range(n_frames):
        mesh = delaunay_mesh(n_vertices, rng)
        frame = SurfaceFrame(
            mesh=mesh, colours=random_channels(mesh.vertex_count, rng)
        )
        (src / f"t{i}.ply").write_bytes(write_ply(frame))
    return src


@pytest.fixture()
def service(tmp_path):
    rng = np.random.default_rng(701)
    src = build_project_dir(tmp_path, rng)
    session = Session(open_project(src))
    return session, TestClient(create_app(session))


def vertex_ray(session, frame_index, vertex):
    mesh = session.project.series[frame_index].mesh
    target = mesh.positions[vertex].astype(np.float64)
    origin = target + [0.0, 0.0, 10.0]
    return origin, target - origin


# -- reads -------------------------------------------------------------------

def test_project_summary(service):
    session, client = service
    body = client.get("/api/v1/project").json()
    assert body["frame_count"] == 3
    assert body["version"] == 0
    assert [f["index"] for f in body["frames"]] == [0, 1, 2]


def test_geometry_endpoint_bytes(service):
    session, client = service
    response = client.get("/api/v1/frames/1/geometry")
    assert response.status_code == 200
    assert response.headers["content-type"] == "application/octet-stream"
    data = response.content
    mesh = session.project.series[1].mesh
    v, t = struct.unpack_from("<II", data)
    assert (v, t) == (mesh.vertex_count, mesh.triangle_count)
    assert len(data) == 8 + 12 * v + 12 * t
    assert data == session.geometry_bytes(1)


def test_display_endpoint_matches_library(service):
    session, client = service
    response = client.get(
        "/api/v1/frames/0/display",
        params={"mode": "cutout", "lo0": 10, "hi0": 200, "lo1": 0, "hi1": 255},
    )
    assert response.status_code == 200
    expected = session.display_bytes(
        0, RenderMode.CUT_OUT, (ThresholdWindow(10, 200), ThresholdWindow(0, 255))
    )
    assert response.content == expected
    n = session.project.series[0].vertex_count
    assert len(response.content) == 4 * n


def test_display_bad_mode_and_window(service):
    _, client = service
    assert client.get(
        "/api/v1/frames/0/display", params={"mode": "sepia"}
    ).status_code == 422
    assert client.get(
        "/api/v1/frames/0/display", params={"lo0": 200, "hi0": 100}
    ).status_code == 422


def test_unknown_frame_404(service):
    _, client = service
    response = client.get("/api/v1/frames/9/geometry")
    assert response.status_code == 404
    assert response.json()["error"]["type"] == "out_of_range"


# -- pick and markers --------------------------------------------------------

def test_pick_hit_and_miss(service):
    session, client = service
    origin, direction = vertex_ray(session, 0, 3)
    body = client.post(
        "/api/v1/frames/0/pick",
        json={"ray": {"origin": list(origin), "direction": list(direction)}},
    ).json()
    assert body["hit"] is not None
    assert body["hit"]["nearest_vertex"] == 3
    miss = client.post(
        "/api/v1/frames/0/pick",
        json={"ray": {"origin": [999, 999, 10], "direction": [0, 0, -1]}},
    ).json()
    assert miss["hit"] is None


def test_marker_lifecycle_and_csv(service):
    session, client = service
    origin, direction = vertex_ray(session, 0, 5)
    hit = client.post(
        "/api/v1/frames/0/pick",
        json={"ray": {"origin": list(origin), "direction": list(direction)}},
    ).json()["hit"]
    created = client.post("/api/v1/markers", json={"frame": 0, "pick": hit})
    assert created.status_code == 201
    marker = created.json()["marker"]
    assert marker["vertex_index"] == 5
    csv = client.get("/api/v1/markers.csv")
    assert csv.headers["content-type"].startswith("text/csv")
    assert csv.content == session.markers_csv()
    assert csv.content.startswith(b"frame,x,y,z,vertex_index\n")
    deleted = client.delete(f"/api/v1/markers/{marker['id']}")
    assert deleted.status_code == 200
    assert client.delete(f"/api/v1/markers/{marker['id']}").status_code == 404


def test_stale_stroke_replay_conflicts(service):
    _, client = service
    first = client.post(
        "/api/v1/frames/0/strokes", json={"seed": 0, "radius": 1.0, "version": 0}
    )
    assert first.status_code == 200
    replay = client.post(
        "/api/v1/frames/0/strokes", json={"seed": 0, "radius": 1.0, "version": 0}
    )
    assert replay.status_code == 409
    error = replay.json()["error"]
    assert error["type"] == "stale_version"
    assert error["expected"] == 0
    assert error["current"] == 1


def test_stroke_undo_redo_over_http(service):
    session, client = service
    changed = client.post(
        "/api/v1/frames/0/strokes",
        json={"seed": 2, "radius": 2.0, "metric": "geodesic", "mode": "paint"},
    ).json()["changed"]
    assert changed
    assert session.project.state.labels[0][changed].all()
    undone = client.post("/api/v1/undo", json={}).json()["undone"]
    assert undone["kind"] == "stroke"
    assert not session.project.state.labels[0].any()
    redone = client.post("/api/v1/redo", json={}).json()["redone"]
    assert redone["kind"] == "stroke"
    assert session.project.state.labels[0][changed].all()
    # empty stacks answer null, not an error
    client.post("/api/v1/undo", json={})
    assert client.post("/api/v1/undo", json={}).json()["undone"] is None
    client.post("/api/v1/redo", json={})
    assert client.post("/api/v1/redo", json={}).json()["redone"] is None


def test_opacity_endpoints(service):
    session, client = service
    body = client.post(
        "/api/v1/frames/0/opacity",
        json={"seed": 1, "radius": 1.5, "alpha": 0.3},
    ).json()
    assert body["region"]
    values = session.project.opacity[0].values
    assert all(values[v] == 0.3 for v in body["region"])
    client.post("/api/v1/opacity/reset", json={})
    assert (session.project.opacity[0].values == 1.0).all()


def test_tracks_csv_endpoint(service):
    session, client = service
    origin, direction = vertex_ray(session, 1, 4)
    hit = client.post(
        "/api/v1/frames/1/pick",
        json={"ray": {"origin": list(origin), "direction": list(direction)}},
    ).json()["hit"]
    client.post("/api/v1/markers", json={"frame": 1, "pick": hit})
    response = client.get(
        "/api/v1/tracks.csv", params={"channel": 1, "threshold": 50}
    )
    assert response.status_code == 200
    assert response.content == session.tracks_csv(1, 50)
    assert response.content.startswith(b"marker_id,frame,")
    assert client.get(
        "/api/v1/tracks.csv", params={"channel": 5, "threshold": 0}
    ).status_code == 422


# -- cursor ------------------------------------------------------------------

def test_cursor_step_clamps_at_zero(service):
    _, client = service
    body = client.post("/api/v1/cursor", json={"step": -1}).json()
    assert body["frame"] == 0


def test_cursor_play_step_pause(service):
    _, client = service
    assert client.get("/api/v1/cursor").json()["frame"] == 0
    body = client.post("/api/v1/cursor", json={"play": True, "step": 1}).json()
    assert body == {
        "frame": 1,
        "playing": True,
        "rate": 5.0,
        "version": body["version"],
    }
    for _ in range(5):
        body = client.post("/api/v1/cursor", json={"step": 1}).json()
    assert body["frame"] == 2  # clamped to the last frame
    assert client.post("/api/v1/cursor", json={"pause": True}).json()["playing"] is False
    assert client.post("/api/v1/cursor", json={"frame": 9}).status_code == 422


# -- error envelope ----------------------------------------------------------

def test_malformed_json_is_400(service):
    _, client = service
    response = client.post(
        "/api/v1/frames/0/pick",
        content=b"{oops",
        headers={"content-type": "application/json"},
    )
    assert response.status_code == 400
    assert response.json()["error"]["type"] == "invalid_request"


def test_bad_path_segment_is_400(service):
    _, client = service
    assert client.get("/api/v1/frames/zero/geometry").status_code == 400


def test_wrong_body_field_is_422(service):
    _, client = service
    response = client.post(
        "/api/v1/frames/0/strokes", json={"seed": 0, "radius": "thick"}
    )
    assert response.status_code == 422


def test_bad_seed_is_404(service):
    _, client = service
    response = client.post(
        "/api/v1/frames/0/strokes", json={"seed": 5000, "radius": 1.0}
    )
    assert response.status_code == 404


# -- persistence and parity --------------------------------------------------

def test_save_endpoint_writes_project(tmp_path):
    rng = np.random.default_rng(702)
    src = build_project_dir(tmp_path, rng)
    session = Session(open_project(src))
    client = TestClient(create_app(session))
    out = tmp_path / "saved"
    body = client.post("/api/v1/save", json={"directory": str(out)}).json()
    assert body["manifest"]["version"] == 1
    assert (out / "manifest.json").is_file()
    assert (out / "markers.csv").is_file()
    reopened = open_project(out)
    assert reopened.series.frame_count == 3


def scripted_session(do_stroke, do_mark, do_save):
    """The same operation sequence, parameterized over transport."""
    for seed, radius in [(0, 1.0), (3, 2.5), (7, 0.8), (1, 3.0), (4, 1.2),
                         (9, 2.0), (2, 0.5), (6, 1.7), (8, 2.2), (5, 1.1)]:
        do_stroke(0, seed, radius)
    for frame, vertex in [(0, 2), (1, 6), (2, 4)]:
        do_mark(frame, vertex)
    do_save()


def test_http_session_equals_in_process(tmp_path):
    rng = np.random.default_rng(703)
    src = build_project_dir(tmp_path, rng, n_frames=3, n_vertices=30)

    http_session = Session(open_project(src))
    client = TestClient(create_app(http_session))
    http_out = tmp_path / "http_out"

    def http_stroke(frame, seed, radius):
        response = client.post(
            f"/api/v1/frames/{frame}/strokes",
            json={"seed": seed, "radius": radius},
        )
        assert response.status_code == 200

    def http_mark(frame, vertex):
        origin, direction = vertex_ray(http_session, frame, vertex)
        hit = client.post(
            f"/api/v1/frames/{frame}/pick",
            json={"ray": {"origin": list(origin), "direction": list(direction)}},
        ).json()["hit"]
        assert hit is not None
        assert client.post(
            "/api/v1/markers", json={"frame": frame, "pick": hit}
        ).status_code == 201

    scripted_session(
        http_stroke,
        http_mark,
        lambda: client.post("/api/v1/save", json={"directory": str(http_out)}),
    )

    lib_session = Session(open_project(src))
    lib_out = tmp_path / "lib_out"

    def lib_mark(frame, vertex):
        origin, direction = vertex_ray(lib_session, frame, vertex)
        hit = lib_session.pick(frame, Ray.normalized(origin, direction))
        lib_session.add_marker(frame, hit)

    scripted_session(
        lambda frame, seed, radius: lib_session.stroke(frame, seed, radius),
        lib_mark,
        lambda: lib_session.save(lib_out),
    )

    http_files = sorted(p.name for p in http_out.iterdir())
    lib_files = sorted(p.name for p in lib_out.iterdir())
    assert http_files == lib_files
    for name in http_files:
        assert (http_out / name).read_bytes() == (lib_out / name).read_bytes()


def test_static_web_root_served(tmp_path):
    rng = np.random.default_rng(704)
    src = build_project_dir(tmp_path, rng, n_frames=1)
    web = tmp_path / "web"
    web.mkdir()
    (web / "index.html").write_text("<!doctype html><title>annotator</title>")
    client = TestClient(create_app(Session(open_project(src)), web_root=web))
    response = client.get("/")
    assert response.status_code == 200
    assert "annotator" in response.text
    # the API stays reachable alongside the static mount
    assert client.get("/api/v1/project").status_code == 200
