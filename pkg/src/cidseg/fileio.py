"""Point-cloud file formats, label sidecars, hull export, JSON reports.

Supported cloud formats: ascii PLY, binary little-endian PLY, and plain
xyz text. Binary PLY round-trips coordinates bit-identically (coordinates
are written as doubles). Parse failures always raise ParseError with a
line (text) or byte (binary) offset; truncated or miscounted files never
yield a silent partial cloud.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ParseError, WriteError
from .geometry import PointCloud

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

_LABEL_PROPS = {"semantic_label": "semantic_labels",
                "instance_label": "instance_labels"}


@dataclass
class SceneFile:
    """On-disk scene: cloud file plus optional sidecar label file."""

    path: Path
    format: str | None = None  # ply-ascii | ply-binary-le | xyz-text
    sidecar_labels: Path | None = None

    def __post_init__(self):
        self.path = Path(self.path)
        if self.sidecar_labels is not None:
            self.sidecar_labels = Path(self.sidecar_labels)
        if self.format is not None and self.format not in (
                "ply-ascii", "ply-binary-le", "xyz-text"):
            raise InvalidInputError(f"unknown format {self.format!r}")

    def load(self) -> PointCloud:
        cloud = parse_point_cloud(self.path, self.format)
        if self.sidecar_labels is not None:
            semantic, instance = read_label_sidecar(self.sidecar_labels,
                                                    cloud.n_points)
            cloud.instance_labels = instance
            if semantic is not None:
                cloud.semantic_labels = semantic
        return cloud


def detect_format(path) -> str:
    """Guess the on-disk format from the extension, sniffing PLY flavor."""
    p = Path(path)
    ext = p.suffix.lower()
    if ext == ".ply":
        with open(p, "rb") as f:
            head = f.read(512)
        return "ply-binary-le" if b"binary_little_endian" in head else "ply-ascii"
    if ext in (".xyz", ".txt", ".pts"):
        return "xyz-text"
    raise InvalidInputError(f"cannot infer format from {p.name!r}; pass --format")


def _parse_ply_header(raw: bytes, path):
    """Returns (fmt, vertex_count, properties, header_lines, body_offset)."""
    end = raw.find(b"end_header")
    if end < 0:
        raise ParseError("missing end_header", path=path, line=1)
    nl = raw.find(b"\n", end)
    if nl < 0:
        raise ParseError("header not newline-terminated", path=path,
                         byte=end)
    body_offset = nl + 1
    header_text = raw[:body_offset].decode("ascii", errors="replace")
    lines = header_text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError("not a PLY file (missing magic)", path=path, line=1)
    fmt = None
    vertex_count = None
    properties = []  # (dtype code, name) in order, vertex element only
    in_vertex = False
    for ln, line in enumerate(lines[1:], start=2):
        tok = line.split()
        if not tok or tok[0] == "comment":
            continue
        if tok[0] == "format":
            if len(tok) < 2 or tok[1] not in ("ascii", "binary_little_endian"):
                raise ParseError(f"unsupported format {line.strip()!r}",
                                 path=path, line=ln)
            fmt = tok[1]
        elif tok[0] == "element":
            if len(tok) != 3:
                raise ParseError("malformed element line", path=path, line=ln)
            in_vertex = tok[1] == "vertex"
            if in_vertex:
                try:
                    vertex_count = int(tok[2])
                except ValueError:
                    raise ParseError(f"bad vertex count {tok[2]!r}",
                                     path=path, line=ln)
            elif tok[1] != "face":
                # face blocks follow the vertex block and are simply not
                # read; anything else is out of scope
                raise ParseError(f"unsupported element {tok[1]!r}",
                                 path=path, line=ln)
        elif tok[0] == "property" and in_vertex:
            if tok[1] == "list":
                raise ParseError("list property on vertex element unsupported",
                                 path=path, line=ln)
            if len(tok) != 3 or tok[1] not in _PLY_TYPES:
                raise ParseError(f"unsupported property {line.strip()!r}",
                                 path=path, line=ln)
            properties.append((_PLY_TYPES[tok[1]], tok[2]))
        elif tok[0] in ("property", "obj_info", "end_header"):
            continue
        else:
            raise ParseError(f"unrecognized header line {line.strip()!r}",
                             path=path, line=ln)
    if fmt is None:
        raise ParseError("header missing format line", path=path, line=1)
    if vertex_count is None or not properties:
        raise ParseError("header missing vertex element or properties",
                         path=path, line=1)
    names = [n for _, n in properties]
    for c in ("x", "y", "z"):
        if c not in names:
            raise ParseError(f"vertex element lacks coordinate {c!r}",
                             path=path, line=1)
    return fmt, vertex_count, properties, len(lines), body_offset


def _cloud_from_columns(columns: dict) -> PointCloud:
    pts = np.column_stack([columns["x"], columns["y"], columns["z"]])
    labels = {}
    for prop, attr in _LABEL_PROPS.items():
        if prop in columns:
            labels[attr] = columns[prop].astype(np.int64)
    return PointCloud(pts.astype(np.float64), **labels)


def parse_point_cloud(path, fmt: str | None = None) -> PointCloud:
    """Load a cloud from disk; labels come along when present in the file."""
    if isinstance(path, SceneFile):
        return path.load()
    path = Path(path)
    if fmt is None:
        fmt = detect_format(path)
    if fmt == "xyz-text":
        return _parse_xyz(path)
    if fmt not in ("ply-ascii", "ply-binary-le"):
        raise InvalidInputError(f"unknown format {fmt!r}")
    raw = path.read_bytes()
    kind, count, props, header_lines, body_offset = _parse_ply_header(raw, path)
    if fmt == "ply-ascii" and kind != "ascii":
        raise ParseError("expected ascii PLY, file is binary", path=path, line=2)
    if fmt == "ply-binary-le" and kind != "binary_little_endian":
        raise ParseError("expected binary PLY, file is ascii", path=path, line=2)

    names = [n for _, n in props]
    if kind == "binary_little_endian":
        dtype = np.dtype([(n, "<" + c) for c, n in props])
        need = count * dtype.itemsize
        body = raw[body_offset:]
        if len(body) < need:
            raise ParseError(
                f"vertex block truncated: need {need} bytes for {count} "
                f"vertices, found {len(body)}",
                path=path, byte=body_offset + len(body))
        rec = np.frombuffer(body[:need], dtype=dtype)
        columns = {n: np.ascontiguousarray(rec[n]).astype(np.float64)
                   if n in ("x", "y", "z") else np.ascontiguousarray(rec[n])
                   for n in names}
        return _cloud_from_columns(columns)

    # ascii body
    text = raw[body_offset:].decode("ascii", errors="replace")
    rows = np.empty((count, len(names)), dtype=np.float64)
    filled = 0
    for off, line in enumerate(text.splitlines()):
        ln = header_lines + off + 1
        s = line.strip()
        if not s:
            continue
        if filled >= count:
            break  # face records or trailing data
        tok = s.split()
        if len(tok) != len(names):
            raise ParseError(
                f"expected {len(names)} fields, found {len(tok)}",
                path=path, line=ln)
        try:
            rows[filled] = [float(v) for v in tok]
        except ValueError:
            raise ParseError(f"non-numeric field in {s!r}", path=path, line=ln)
        filled += 1
    if filled != count:
        raise ParseError(
            f"vertex count mismatch: header declares {count}, file has {filled}",
            path=path, line=header_lines + filled + 1)
    columns = {n: rows[:, i] for i, n in enumerate(names)}
    return _cloud_from_columns(columns)


def _parse_xyz(path) -> PointCloud:
    rows = []
    with open(path, "r") as f:
        for ln, line in enumerate(f, start=1):
            s = line.strip()
            if not s:
                continue
            tok = s.split()
            if len(tok) < 3:
                raise ParseError(f"need at least 3 numeric fields, found {len(tok)}",
                                 path=path, line=ln)
            try:
                rows.append((float(tok[0]), float(tok[1]), float(tok[2])))
            except ValueError:
                raise ParseError(f"non-numeric field in {s!r}", path=path, line=ln)
    if not rows:
        raise ParseError("no points in file", path=path, line=1)
    return PointCloud(np.array(rows, dtype=np.float64))


def _coords3(cloud: PointCloud) -> np.ndarray:
    pts = cloud.points
    if cloud.dim == 2:  # pad so 3-coordinate formats stay writable
        pts = np.column_stack([pts, np.zeros(len(pts))])
    return pts


def write_point_cloud(cloud: PointCloud, path, fmt: str = "ply-binary-le"):
    """Serialize a cloud (labels included for PLY formats)."""
    path = Path(path)
    pts = _coords3(cloud)
    labeled = [(prop, getattr(cloud, attr)) for prop, attr in _LABEL_PROPS.items()
               if getattr(cloud, attr) is not None]
    try:
        if fmt == "xyz-text":
            with open(path, "w") as f:
                for p in pts:
                    # repr of a Python float round-trips exactly
                    f.write(f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")
            return
        if fmt not in ("ply-ascii", "ply-binary-le"):
            raise InvalidInputError(f"unknown format {fmt!r}")
        header = ["ply",
                  "format ascii 1.0" if fmt == "ply-ascii"
                  else "format binary_little_endian 1.0",
                  f"element vertex {cloud.n_points}",
                  "property double x", "property double y", "property double z"]
        header += [f"property int {prop}" for prop, _ in labeled]
        header.append("end_header")
        if fmt == "ply-ascii":
            with open(path, "w") as f:
                f.write("\n".join(header) + "\n")
                for i in range(cloud.n_points):
                    row = [repr(float(pts[i, c])) for c in range(3)]
                    row += [str(int(lab[i])) for _, lab in labeled]
                    f.write(" ".join(row) + "\n")
            return
        dtype = np.dtype([("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
                         + [(prop, "<i4") for prop, _ in labeled])
        rec = np.empty(cloud.n_points, dtype=dtype)
        rec["x"], rec["y"], rec["z"] = pts[:, 0], pts[:, 1], pts[:, 2]
        for prop, lab in labeled:
            rec[prop] = lab.astype(np.int32)
        with open(path, "wb") as f:
            f.write(("\n".join(header) + "\n").encode("ascii"))
            f.write(rec.tobytes())
    except OSError as e:
        raise WriteError(f"cannot write {path}: {e}")


def read_label_sidecar(path, expected_count: int | None = None):
    """Label file: one line per point, either `instance` or `semantic instance`.

    Returns (semantic or None, instance).
    """
    sem, inst = [], []
    width = None
    with open(path, "r") as f:
        for ln, line in enumerate(f, start=1):
            s = line.strip()
            if not s:
                continue
            tok = s.split()
            if width is None:
                width = len(tok)
                if width not in (1, 2):
                    raise ParseError(f"expected 1 or 2 label columns, found {width}",
                                     path=path, line=ln)
            if len(tok) != width:
                raise ParseError("inconsistent column count", path=path, line=ln)
            try:
                vals = [int(v) for v in tok]
            except ValueError:
                raise ParseError(f"non-integer label in {s!r}", path=path, line=ln)
            if width == 1:
                inst.append(vals[0])
            else:
                sem.append(vals[0])
                inst.append(vals[1])
    if expected_count is not None and len(inst) != expected_count:
        raise ParseError(
            f"label count mismatch: cloud has {expected_count} points, "
            f"sidecar has {len(inst)}", path=path, line=len(inst) + 1)
    semantic = np.array(sem, dtype=np.int64) if sem else None
    return semantic, np.array(inst, dtype=np.int64)


def write_label_sidecar(path, instance_labels, semantic_labels=None):
    try:
        with open(path, "w") as f:
            if semantic_labels is None:
                for i in instance_labels:
                    f.write(f"{int(i)}\n")
            else:
                for s, i in zip(semantic_labels, instance_labels):
                    f.write(f"{int(s)} {int(i)}\n")
    except OSError as e:
        raise WriteError(f"cannot write {path}: {e}")


def write_hulls(parts, out_dir):
    """One OBJ per part, named part_<group id>.obj. Returns written paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise WriteError(f"cannot create {out}: {e}")
    paths = []
    for part in parts:
        p = out / f"part_{part.group_id}.obj"
        verts = part.vertices
        if verts.shape[1] == 2:
            verts = np.column_stack([verts, np.zeros(len(verts))])
        try:
            with open(p, "w") as f:
                f.write(f"# convex part {part.group_id}, degeneracy={part.degeneracy}\n")
                for v in verts:
                    f.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
                facets = np.asarray(part.facets)
                if facets.size and facets.shape[1] == 3:
                    for a, b, c in facets + 1:
                        f.write(f"f {a} {b} {c}\n")
                elif facets.size and len(verts) > 2:
                    # polygon: single face over the vertex cycle
                    cycle = " ".join(str(i + 1) for i in range(len(verts)))
                    f.write(f"f {cycle}\n")
                elif facets.size:
                    f.write("l 1 2\n")
        except OSError as e:
            raise WriteError(f"cannot write {p}: {e}")
        paths.append(p)
    return paths


def write_json_report(data: dict, path):
    """Deterministic JSON: sorted keys, repr floats, trailing newline."""
    try:
        with open(path, "w") as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise WriteError(f"cannot write {path}: {e}")
    except (TypeError, ValueError) as e:
        raise WriteError(f"report not serializable: {e}")


def convert_s3dis_room(room_dir) -> PointCloud:
    """Best-effort adapter for an S3DIS room directory (Annotations/*.txt).

    Instance ids follow sorted file order; semantic ids follow the sorted
    set of class-name prefixes. Color columns are ignored (the pipeline is
    geometry-only).
    """
    room = Path(room_dir)
    ann = room / "Annotations"
    files = sorted(ann.glob("*.txt"))
    if not files:
        raise InvalidInputError(f"no annotation files under {ann}")
    classes = sorted({f.stem.rsplit("_", 1)[0] for f in files})
    class_id = {c: i for i, c in enumerate(classes)}
    pts, sem, inst = [], [], []
    for i, f in enumerate(files):
        try:
            arr = np.loadtxt(f, usecols=(0, 1, 2), ndmin=2)
        except ValueError as e:
            raise ParseError(f"bad annotation file: {e}", path=f, line=1)
        pts.append(arr)
        sem.append(np.full(len(arr), class_id[f.stem.rsplit("_", 1)[0]], np.int64))
        inst.append(np.full(len(arr), i, np.int64))
    return PointCloud(np.vstack(pts), semantic_labels=np.concatenate(sem),
                      instance_labels=np.concatenate(inst))
