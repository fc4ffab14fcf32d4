"""Reader/writer for .ply surface frames and loader for frame sequences.

Colour convention: PLY ``red`` is fluorescence channel 0, ``green`` is
channel 1, and ``blue`` carries binary paint labels (written as 0/255, read
back with a >= 128 threshold; a file whose blue column is all zero has no
label layer).  Extra vertex properties are preserved opaquely and re-emitted
in their original order.  The writer always produces binary_little_endian.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MeshValidationError, PlyParseError, SeriesLoadError
from .mesh import ChannelData, TriangleMesh, validate_mesh

MAX_ELEMENT_COUNT = 2**32 - 1

# PLY scalar type names (both spellings) -> little-endian numpy dtype string.
_PLY_DTYPES = {
    "char": "<i1", "int8": "<i1",
    "uchar": "<u1", "uint8": "<u1",
    "short": "<i2", "int16": "<i2",
    "ushort": "<u2", "uint16": "<u2",
    "int": "<i4", "int32": "<i4",
    "uint": "<u4", "uint32": "<u4",
    "float": "<f4", "float32": "<f4",
    "double": "<f8", "float64": "<f8",
}
_CANONICAL_TYPE = {
    "<i1": "char", "<u1": "uchar", "<i2": "short", "<u2": "ushort",
    "<i4": "int", "<u4": "uint", "<f4": "float", "<f8": "double",
}

CANONICAL_VERTEX_LAYOUT = (
    ("x", "float"), ("y", "float"), ("z", "float"),
    ("red", "uchar"), ("green", "uchar"), ("blue", "uchar"),
)
_REQUIRED_TYPES = {
    "x": "float", "y": "float", "z": "float",
    "red": "uchar", "green": "uchar", "blue": "uchar",
}
_FACE_LIST_NAMES = ("vertex_indices", "vertex_index")


@dataclass(frozen=True)
class PlyHeader:
    """Parsed .ply header; ``body_offset`` is where element data begins."""

    format: str  # "ascii" or "binary_little_endian"
    vertex_count: int
    face_count: int
    vertex_properties: tuple[tuple[str, str], ...]  # (name, canonical type)
    face_list_types: tuple[str, str] | None  # (count type, index type)
    body_offset: int
    vertex_element_offset: int


@dataclass
class SurfaceFrame:
    """One triangulated mesh with two colour channels and optional labels."""

    mesh: TriangleMesh
    colours: ChannelData
    labels: np.ndarray | None = None
    source_path: str = ""
    extras: dict[str, np.ndarray] = field(default_factory=dict)
    vertex_layout: tuple[tuple[str, str], ...] | None = None

    def __post_init__(self):
        if self.labels is not None:
            self.labels = np.ascontiguousarray(self.labels, dtype=bool).reshape(-1)
        if self.vertex_layout is None:
            layout = list(CANONICAL_VERTEX_LAYOUT)
            for name, values in self.extras.items():
                layout.append((name, _CANONICAL_TYPE[values.dtype.newbyteorder("<").str]))
            self.vertex_layout = tuple(layout)
        else:
            self.vertex_layout = tuple((n, t) for n, t in self.vertex_layout)

    @property
    def vertex_count(self) -> int:
        return self.mesh.vertex_count

    @property
    def has_labels(self) -> bool:
        return self.labels is not None and bool(self.labels.any())

    def with_labels(self, labels: np.ndarray | None) -> "SurfaceFrame":
        """Copy of this frame carrying a different label layer."""
        return SurfaceFrame(
            mesh=self.mesh,
            colours=self.colours,
            labels=labels,
            source_path=self.source_path,
            extras=self.extras,
            vertex_layout=self.vertex_layout,
        )


@dataclass
class SurfaceSeries:
    """Ordered sequence of frames; vertex counts may differ per frame."""

    frames: list[SurfaceFrame]

    def __post_init__(self):
        if not self.frames:
            raise ValueError("a series needs at least one frame")

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, index: int) -> SurfaceFrame:
        return self.frames[index]

    def __iter__(self):
        return iter(self.frames)


def frames_equal(a: SurfaceFrame, b: SurfaceFrame) -> bool:
    """Field-exact frame comparison (source_path excluded).

    Positions compare bitwise as float32; an absent label layer equals an
    all-false one.
    """
    if a.mesh.positions.shape != b.mesh.positions.shape:
        return False
    if a.mesh.positions.tobytes() != b.mesh.positions.tobytes():
        return False
    if not np.array_equal(a.mesh.triangles, b.mesh.triangles):
        return False
    if not np.array_equal(a.colours.channel0, b.colours.channel0):
        return False
    if not np.array_equal(a.colours.channel1, b.colours.channel1):
        return False
    la = a.labels if a.labels is not None else np.zeros(a.vertex_count, dtype=bool)
    lb = b.labels if b.labels is not None else np.zeros(b.vertex_count, dtype=bool)
    if not np.array_equal(la, lb):
        return False
    if a.vertex_layout != b.vertex_layout:
        return False
    if set(a.extras) != set(b.extras):
        return False
    for name, va in a.extras.items():
        vb = b.extras[name]
        if va.dtype != vb.dtype or va.tobytes() != vb.tobytes():
            return False
    return True


# -- header ------------------------------------------------------------------

def _header_lines(data: bytes):
    """Yield (offset, text) header lines up to and including end_header."""
    cursor = 0
    while True:
        nl = data.find(b"\n", cursor)
        if nl < 0:
            raise PlyParseError(len(data), "header ends before end_header")
        raw = data[cursor:nl]
        if raw.endswith(b"\r"):
            raw = raw[:-1]
        try:
            text = raw.decode("ascii")
        except UnicodeDecodeError:
            raise PlyParseError(cursor, "header contains non-ASCII bytes") from None
        yield cursor, text
        cursor = nl + 1
        if text.strip() == "end_header":
            yield cursor, None  # sentinel carrying the body offset
            return


def parse_header(data: bytes) -> PlyHeader:
    if not data.startswith(b"ply\n") and not data.startswith(b"ply\r\n"):
        raise PlyParseError(0, "missing 'ply' magic line")
    fmt = None
    elements: list[list] = []  # [name, count, offset, props]
    body_offset = None
    lines = _header_lines(data)
    next(lines)  # magic
    for offset, text in lines:
        if text is None:
            body_offset = offset
            break
        parts = text.split()
        if not parts:
            continue
        keyword = parts[0]
        if keyword in ("comment", "obj_info"):
            continue
        if keyword == "format":
            if fmt is not None:
                raise PlyParseError(offset, "duplicate format line")
            if len(parts) != 3 or parts[2] != "1.0":
                raise PlyParseError(offset, f"unsupported format declaration {text!r}")
            if parts[1] == "binary_big_endian":
                raise PlyParseError(offset, "binary_big_endian files are not supported")
            if parts[1] not in ("ascii", "binary_little_endian"):
                raise PlyParseError(offset, f"unknown format {parts[1]!r}")
            fmt = parts[1]
        elif keyword == "element":
            if len(parts) != 3:
                raise PlyParseError(offset, f"malformed element line {text!r}")
            name = parts[1]
            if name not in ("vertex", "face"):
                raise PlyParseError(offset, f"unsupported element {name!r}")
            if any(e[0] == name for e in elements):
                raise PlyParseError(offset, f"duplicate element {name!r}")
            try:
                count = int(parts[2])
            except ValueError:
                raise PlyParseError(offset, f"bad element count {parts[2]!r}") from None
            if count < 0:
                raise PlyParseError(offset, f"negative element count {count}")
            if count > MAX_ELEMENT_COUNT:
                raise PlyParseError(offset, f"element count {count} exceeds 2^32-1")
            elements.append([name, count, offset, []])
        elif keyword == "property":
            if not elements:
                raise PlyParseError(offset, "property before any element")
            element = elements[-1]
            if parts[1] == "list":
                if len(parts) != 5:
                    raise PlyParseError(offset, f"malformed list property {text!r}")
                element[3].append((offset, "list", parts[2], parts[3], parts[4]))
            else:
                if len(parts) != 3:
                    raise PlyParseError(offset, f"malformed property line {text!r}")
                element[3].append((offset, "scalar", parts[1], parts[2]))
        elif keyword == "end_header":
            if text.strip() != "end_header":
                raise PlyParseError(offset, f"malformed end_header line {text!r}")
            continue  # sentinel with the body offset follows
        else:
            raise PlyParseError(offset, f"unrecognized header line {text!r}")
    if fmt is None:
        raise PlyParseError(body_offset, "header has no format line")

    vertex_count = None
    face_count = 0
    vertex_props: list[tuple[str, str]] = []
    vertex_offset = 0
    face_types = None
    for name, count, offset, props in elements:
        if name == "vertex":
            vertex_count = count
            vertex_offset = offset
            seen = set()
            for prop in props:
                if prop[1] == "list":
                    raise PlyParseError(prop[0], "list property not supported on vertices")
                _, _, type_name, prop_name = prop
                if type_name not in _PLY_DTYPES:
                    raise PlyParseError(prop[0], f"unknown property type {type_name!r}")
                if prop_name in seen:
                    raise PlyParseError(prop[0], f"duplicate vertex property {prop_name!r}")
                seen.add(prop_name)
                vertex_props.append((prop_name, _CANONICAL_TYPE[_PLY_DTYPES[type_name]]))
        else:
            face_count = count
            if len(props) != 1:
                bad = props[1] if len(props) > 1 else (offset,)
                raise PlyParseError(
                    bad[0], "face element must have exactly one property (the index list)"
                )
            prop = props[0]
            if prop[1] != "list":
                raise PlyParseError(prop[0], "face property must be a list of vertex indices")
            _, _, count_type, index_type, prop_name = prop
            if prop_name not in _FACE_LIST_NAMES:
                raise PlyParseError(prop[0], f"unknown face property {prop_name!r}")
            for t in (count_type, index_type):
                if t not in _PLY_DTYPES:
                    raise PlyParseError(prop[0], f"unknown property type {t!r}")
                if _PLY_DTYPES[t][1] == "f":
                    raise PlyParseError(prop[0], f"face list type {t!r} is not integral")
            face_types = (count_type, index_type)

    if vertex_count is None:
        raise PlyParseError(body_offset, "header declares no vertex element")
    if vertex_count == 0:
        raise PlyParseError(vertex_offset, "file declares 0 vertices")
    for required, required_type in _REQUIRED_TYPES.items():
        match = [t for n, t in vertex_props if n == required]
        if not match:
            raise PlyParseError(
                vertex_offset, f"missing required vertex property {required!r}"
            )
        if match[0] != required_type:
            raise PlyParseError(
                vertex_offset,
                f"vertex property {required!r} must be {required_type}, got {match[0]}",
            )
    return PlyHeader(
        format=fmt,
        vertex_count=vertex_count,
        face_count=face_count,
        vertex_properties=tuple(vertex_props),
        face_list_types=face_types,
        body_offset=body_offset,
        vertex_element_offset=vertex_offset,
    )


# -- body --------------------------------------------------------------------

def _split_body_lines(data: bytes, start: int):
    """Offsets and payloads of newline-separated lines from ``start``."""
    offsets = []
    lines = []
    cursor = start
    end = len(data)
    while cursor < end:
        nl = data.find(b"\n", cursor)
        if nl < 0:
            nl = end
        raw = data[cursor:nl]
        if raw.endswith(b"\r"):
            raw = raw[:-1]
        offsets.append(cursor)
        lines.append(raw)
        cursor = nl + 1
    return offsets, lines


def _tokens_to_floats(tokens, offset_of, reason: str):
    try:
        return np.array(tokens, dtype=np.float64)
    except ValueError:
        for i, tok in enumerate(tokens):
            try:
                float(tok)
            except ValueError:
                raise PlyParseError(
                    offset_of(i), f"{reason}: bad numeric token {tok.decode('ascii', 'replace')!r}"
                ) from None
        raise


def _validate_int_column(values, dtype_str, name, line_offsets, n_props):
    info = np.iinfo(np.dtype(dtype_str))
    integral = values == np.floor(values)
    in_range = (values >= info.min) & (values <= info.max)
    bad = ~(integral & in_range)
    if bad.any():
        flat = int(np.flatnonzero(bad)[0])
        raise PlyParseError(
            line_offsets[flat],
            f"value {values[flat]!r} out of range for {name} ({_CANONICAL_TYPE[dtype_str]})",
        )


def _parse_ascii_body(data: bytes, header: PlyHeader):
    offsets, lines = _split_body_lines(data, header.body_offset)
    # trailing blank lines are tolerated, anything else is an error
    while lines and not lines[-1].strip():
        lines.pop()
        offsets.pop()
    n_vert, n_face = header.vertex_count, header.face_count
    if len(lines) < n_vert + n_face:
        raise PlyParseError(
            len(data),
            f"body truncated: expected {n_vert} vertex and {n_face} face lines, "
            f"got {len(lines)}",
        )
    if len(lines) > n_vert + n_face:
        raise PlyParseError(offsets[n_vert + n_face], "unexpected trailing data")

    n_props = len(header.vertex_properties)
    vertex_tokens = []
    for i in range(n_vert):
        toks = lines[i].split()
        if len(toks) != n_props:
            raise PlyParseError(
                offsets[i],
                f"vertex line has {len(toks)} values, expected {n_props}",
            )
        vertex_tokens.extend(toks)
    with np.errstate(over="ignore"):
        values = _tokens_to_floats(
            vertex_tokens,
            lambda i: offsets[i // n_props],
            "vertex data",
        ).reshape(n_vert, n_props)
        columns = {}
        vertex_offsets = offsets[:n_vert]
        for j, (name, type_name) in enumerate(header.vertex_properties):
            dtype_str = _PLY_DTYPES[type_name]
            col = values[:, j]
            if dtype_str[1] in "iu":
                _validate_int_column(col, dtype_str, name, vertex_offsets, n_props)
            columns[name] = col.astype(dtype_str)

    triangles = np.zeros((n_face, 3), dtype=np.uint32)
    for i in range(n_face):
        line_no = n_vert + i
        toks = lines[line_no].split()
        if not toks:
            raise PlyParseError(offsets[line_no], "empty face line")
        try:
            count = int(toks[0])
        except ValueError:
            raise PlyParseError(
                offsets[line_no], f"bad face vertex count {toks[0].decode('ascii', 'replace')!r}"
            ) from None
        if count != 3:
            raise PlyParseError(
                offsets[line_no], f"non-triangle face with {count} vertices"
            )
        if len(toks) != 4:
            raise PlyParseError(
                offsets[line_no], f"face line has {len(toks) - 1} indices, expected 3"
            )
        for k in range(3):
            try:
                idx = int(toks[k + 1])
            except ValueError:
                raise PlyParseError(
                    offsets[line_no],
                    f"bad face index {toks[k + 1].decode('ascii', 'replace')!r}",
                ) from None
            if not 0 <= idx < header.vertex_count:
                raise PlyParseError(
                    offsets[line_no],
                    f"face index {idx} out of range for {header.vertex_count} vertices",
                )
            triangles[i, k] = idx
    face_offsets = offsets[n_vert:n_vert + n_face]
    return columns, triangles, vertex_offsets, face_offsets


def _parse_binary_body(data: bytes, header: PlyHeader):
    dtype = np.dtype([(n, _PLY_DTYPES[t]) for n, t in header.vertex_properties])
    start = header.body_offset
    need = header.vertex_count * dtype.itemsize
    if len(data) - start < need:
        raise PlyParseError(
            len(data),
            f"body truncated: vertex block needs {need} bytes, "
            f"{len(data) - start} available",
        )
    records = np.frombuffer(data, dtype=dtype, count=header.vertex_count, offset=start)
    columns = {n: records[n] for n, _ in header.vertex_properties}
    vertex_offsets = [start + i * dtype.itemsize for i in range(header.vertex_count)]

    face_start = start + need
    count_dt = np.dtype(_PLY_DTYPES[header.face_list_types[0]]) if header.face_list_types else np.dtype("<u1")
    index_dt = np.dtype(_PLY_DTYPES[header.face_list_types[1]]) if header.face_list_types else np.dtype("<u4")
    record = count_dt.itemsize + 3 * index_dt.itemsize
    n_face = header.face_count
    remaining = len(data) - face_start
    triangles = np.zeros((0, 3), dtype=np.uint32)
    if n_face:
        face_dtype = np.dtype([("n", count_dt), ("v", index_dt, (3,))])
        if remaining == n_face * record:
            faces = np.frombuffer(data, dtype=face_dtype, count=n_face, offset=face_start)
            counts = faces["n"]
            if (counts == 3).all():
                idx = faces["v"]
                bad = _first_bad_index(idx, header.vertex_count)
                if bad is not None:
                    raise PlyParseError(
                        face_start + bad * record,
                        f"face index out of range for {header.vertex_count} vertices",
                    )
                triangles = idx.astype(np.uint32)
            else:
                bad = int(np.flatnonzero(counts != 3)[0])
                raise PlyParseError(
                    face_start + bad * record,
                    f"non-triangle face with {int(counts[bad])} vertices",
                )
        else:
            # stride assumption broken: walk faces to locate the problem
            cursor = face_start
            for i in range(n_face):
                if cursor + count_dt.itemsize > len(data):
                    raise PlyParseError(len(data), "body truncated inside face block")
                count = int(np.frombuffer(data, dtype=count_dt, count=1, offset=cursor)[0])
                if count != 3:
                    raise PlyParseError(cursor, f"non-triangle face with {count} vertices")
                cursor += count_dt.itemsize + 3 * index_dt.itemsize
                if cursor > len(data):
                    raise PlyParseError(len(data), "body truncated inside face block")
            raise PlyParseError(cursor, "unexpected trailing data")
    elif remaining:
        raise PlyParseError(face_start, "unexpected trailing data")
    face_offsets = [face_start + i * record for i in range(n_face)]
    return columns, triangles, vertex_offsets, face_offsets


def _first_bad_index(idx, vertex_count):
    if idx.dtype.kind == "i":
        bad = (idx < 0) | (idx >= vertex_count)
    else:
        bad = idx >= vertex_count
    if bad.any():
        return int(np.flatnonzero(bad.any(axis=1))[0])
    return None


def parse_ply(data: bytes, source_path: str = "") -> SurfaceFrame:
    """Decode a .ply file into a SurfaceFrame.

    Raises
    ------
    PlyParseError
        On malformed headers, unsupported formats, truncated bodies,
        non-triangle faces, or meshes violating basic invariants.  The error
        names the byte offset where the problem was found.
    """
    header = parse_header(data)
    if header.format == "ascii":
        columns, triangles, vertex_offsets, face_offsets = _parse_ascii_body(data, header)
    else:
        columns, triangles, vertex_offsets, face_offsets = _parse_binary_body(data, header)

    positions = np.column_stack([columns["x"], columns["y"], columns["z"]]).astype(np.float32)
    finite = np.isfinite(positions).all(axis=1)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise PlyParseError(vertex_offsets[bad], f"non-finite coordinate at vertex {bad}")
    if triangles.size:
        degen = (
            (triangles[:, 0] == triangles[:, 1])
            | (triangles[:, 1] == triangles[:, 2])
            | (triangles[:, 0] == triangles[:, 2])
        )
        if degen.any():
            bad = int(np.flatnonzero(degen)[0])
            raise PlyParseError(face_offsets[bad], f"face {bad} repeats a vertex index")

    mesh = TriangleMesh(positions, triangles)
    colours = ChannelData(columns["red"], columns["green"])
    report = validate_mesh(mesh, colours)
    if not report.ok:
        raise PlyParseError(header.body_offset, "invalid mesh: " + "; ".join(report.problems))

    blue = np.asarray(columns["blue"])
    labels = blue >= 128 if blue.any() else None
    extras = {
        name: np.ascontiguousarray(columns[name])
        for name, _ in header.vertex_properties
        if name not in _REQUIRED_TYPES
    }
    return SurfaceFrame(
        mesh=mesh,
        colours=colours,
        labels=labels,
        source_path=source_path,
        extras=extras,
        vertex_layout=header.vertex_properties,
    )


def write_ply(frame: SurfaceFrame) -> bytes:
    """Encode a frame as binary_little_endian 1.0.

    Labels become blue bytes (255 where set, else 0); channel 0 and 1 go to
    red and green; extra properties are emitted in the frame's stored order.
    """
    report = validate_mesh(frame.mesh, frame.colours)
    if not report.ok:
        raise MeshValidationError(report)
    n = frame.mesh.vertex_count
    if frame.labels is not None and len(frame.labels) != n:
        raise ValueError(f"label layer has {len(frame.labels)} entries for {n} vertices")
    layout = frame.vertex_layout
    names = [name for name, _ in layout]
    if set(names) != set(_REQUIRED_TYPES) | set(frame.extras):
        raise ValueError("vertex layout does not match frame channels and extras")
    for name, values in frame.extras.items():
        if len(values) != n:
            raise ValueError(f"extra property {name!r} has {len(values)} entries for {n} vertices")

    header = ["ply", "format binary_little_endian 1.0", f"element vertex {n}"]
    for name, type_name in layout:
        header.append(f"property {type_name} {name}")
    header.append(f"element face {frame.mesh.triangle_count}")
    header.append("property list uchar uint vertex_indices")
    header.append("end_header")

    blue = (
        np.where(frame.labels, 255, 0).astype(np.uint8)
        if frame.labels is not None
        else np.zeros(n, dtype=np.uint8)
    )
    source = {
        "x": frame.mesh.positions[:, 0],
        "y": frame.mesh.positions[:, 1],
        "z": frame.mesh.positions[:, 2],
        "red": frame.colours.channel0,
        "green": frame.colours.channel1,
        "blue": blue,
    }
    vertex_dtype = np.dtype([(name, _PLY_DTYPES[t]) for name, t in layout])
    vertices = np.empty(n, dtype=vertex_dtype)
    for name, _ in layout:
        vertices[name] = source.get(name, frame.extras.get(name))
    face_dtype = np.dtype([("n", "<u1"), ("v", "<u4", (3,))])
    faces = np.empty(frame.mesh.triangle_count, dtype=face_dtype)
    faces["n"] = 3
    faces["v"] = frame.mesh.triangles
    return ("\n".join(header) + "\n").encode("ascii") + vertices.tobytes() + faces.tobytes()


# -- series ------------------------------------------------------------------

_DIGIT_RUN = re.compile(rb"(\d+)|(\D+)")
_DIGIT_RUN_S = re.compile(r"(\d+)")


def natural_key(name: str):
    """Sort key comparing digit runs numerically, case-insensitive elsewhere."""
    parts = _DIGIT_RUN_S.split(name)
    key = []
    for part in parts:
        if part.isdigit():
            key.append((1, int(part), ""))
        elif part:
            key.append((0, 0, part.casefold()))
    return tuple(key), name


def load_series(source) -> SurfaceSeries:
    """Load a .ply sequence from a directory or explicit file list.

    Frames are ordered by natural filename sort (``frame_2`` before
    ``frame_10``).  All files are attempted; if any fail, a SeriesLoadError
    with per-file diagnostics is raised and nothing is returned.
    """
    if isinstance(source, (str, Path)):
        directory = Path(source)
        files = [p for p in directory.iterdir() if p.suffix.lower() == ".ply"]
        if not files:
            raise SeriesLoadError([(str(directory), "no .ply files found")])
    else:
        files = [Path(p) for p in source]
        if not files:
            raise SeriesLoadError([("<file list>", "no .ply files given")])
    files.sort(key=lambda p: natural_key(p.name))

    frames = []
    failures = []
    for path in files:
        try:
            frames.append(parse_ply(path.read_bytes(), source_path=str(path)))
        except (PlyParseError, OSError) as exc:
            failures.append((str(path), str(exc)))
    if failures:
        raise SeriesLoadError(failures)
    return SurfaceSeries(frames)


def save_labelled_series(
    series: SurfaceSeries, directory, suffix: str = "_labelled"
) -> list[Path]:
    """Write one .ply per frame into ``directory``.

    Filenames keep each frame's original basename plus ``suffix``; frames
    without a source path are numbered.  Loading the output reproduces the
    series, labels included.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for i, frame in enumerate(series):
        if frame.source_path:
            stem = Path(frame.source_path).stem
        else:
            stem = f"frame_{i:04d}"
        path = directory / f"{stem}{suffix}.ply"
        path.write_bytes(write_ply(frame))
        written.append(path)
    return written
