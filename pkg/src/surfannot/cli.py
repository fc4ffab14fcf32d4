"""Command-line entry points: serve, validate, export-labels, tracks, info.

Errors exit nonzero; with --json the error is printed to stderr as a single
JSON line with the same shape the HTTP API uses.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .analysis import export_track_csv, track_measurements
from .annotation import import_markers_csv
from .errors import SeriesLoadError, SurfannotError
from .plyio import load_series, save_labelled_series
from .session import DEFAULT_PORT, Session, open_project

PORT_ENV_VAR = "SURFANNOT_PORT"


def _resolve_port(flag_value: int | None) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(PORT_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SurfannotError(
                f"{PORT_ENV_VAR} must be an integer, got {env!r}"
            ) from None
    return DEFAULT_PORT


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surfannot",
        description="Annotate and analyse time series of cell-surface meshes.",
    )
    parser.add_argument(
        "--json",
        action="store_true",
        help="report errors as one-line JSON on stderr",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    serve = commands.add_parser("serve", help="open a project and run the HTTP API")
    serve.add_argument("directory", help="directory of .ply frames")
    serve.add_argument("--port", type=int, default=None,
                       help=f"listen port (default {PORT_ENV_VAR} or {DEFAULT_PORT})")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--web-root", default=None,
                       help="directory of static files to serve at the site root")

    validate = commands.add_parser(
        "validate", help="check every frame in a series parses and is well-formed"
    )
    validate.add_argument("directory")

    export = commands.add_parser(
        "export-labels", help="write the labelled copy of every frame"
    )
    export.add_argument("directory")
    export.add_argument("out")

    tracks = commands.add_parser(
        "tracks", help="measure the labelled region around each marker over time"
    )
    tracks.add_argument("directory")
    tracks.add_argument("--markers", required=True, help="marker CSV file")
    tracks.add_argument("--channel", type=int, required=True, choices=(0, 1))
    tracks.add_argument("--threshold", type=int, required=True,
                        help="inclusive intensity cut, 0-255")
    tracks.add_argument("--out", required=True, help="output CSV file")

    info = commands.add_parser("info", help="print a series summary")
    info.add_argument("directory")

    return parser


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    session = Session(open_project(args.directory))
    app = create_app(session, web_root=args.web_root)
    uvicorn.run(app, host=args.host, port=_resolve_port(args.port))
    return 0


def _cmd_validate(args) -> int:
    try:
        series = load_series(args.directory)
    except SeriesLoadError as exc:
        if args.json:
            raise  # main() renders it as one JSON line with per-file detail
        for path, message in exc.failures:
            print(f"error {Path(path).name}: {message}", file=sys.stderr)
        return 1
    for frame in series:
        name = Path(frame.source_path).name if frame.source_path else "<frame>"
        print(
            f"ok {name} ({frame.vertex_count} vertices, "
            f"{frame.mesh.triangle_count} triangles)"
        )
    return 0


def _cmd_export_labels(args) -> int:
    series = load_series(args.directory)
    written = save_labelled_series(series, args.out)
    for path in written:
        print(path)
    return 0


def _cmd_tracks(args) -> int:
    if not 0 <= args.threshold <= 255:
        raise SurfannotError(f"threshold must lie in [0, 255], got {args.threshold}")
    series = load_series(args.directory)
    markers = import_markers_csv(Path(args.markers).read_bytes(), series)
    table = track_measurements(series, markers, args.channel, args.threshold)
    Path(args.out).write_bytes(export_track_csv(table))
    print(f"wrote {len(table.rows)} rows to {args.out}")
    return 0


def _cmd_info(args) -> int:
    series = load_series(args.directory)
    print(f"frames: {series.frame_count}")
    for i, frame in enumerate(series):
        name = Path(frame.source_path).name if frame.source_path else f"frame {i}"
        labelled = "labelled" if frame.has_labels else "unlabelled"
        print(
            f"  [{i}] {name}: {frame.vertex_count} vertices, "
            f"{frame.mesh.triangle_count} triangles, {labelled}"
        )
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "validate": _cmd_validate,
    "export-labels": _cmd_export_labels,
    "tracks": _cmd_tracks,
    "info": _cmd_info,
}


def _report_error(exc: Exception, as_json: bool) -> None:
    kind = type(exc).__name__
    if as_json:
        body = {"type": kind, "message": str(exc)}
        if isinstance(exc, SeriesLoadError):
            body["failures"] = [
                {"file": path, "message": message} for path, message in exc.failures
            ]
        print(json.dumps({"error": body}), file=sys.stderr)
    else:
        print(f"{kind}: {exc}", file=sys.stderr)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (SurfannotError, OSError, ValueError, IndexError) as exc:
        _report_error(exc, args.json)
        return 1


if __name__ == "__main__":
    sys.exit(main())
