"""Minimal PLY reader/writer for vertex-only point clouds.

Only the ``vertex`` element's x, y, z properties are kept. Other vertex
properties are parsed and dropped; other elements (faces, edges, ...) are
skipped with a warning.
"""

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud, as_array
from .errors import DimensionError, IoError, ParseError, TruncationError

log = logging.getLogger(__name__)

# PLY scalar type name -> numpy little-endian dtype string
_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "<i2", "int16": "<i2",
    "ushort": "<u2", "uint16": "<u2",
    "int": "<i4", "int32": "<i4",
    "uint": "<u4", "uint32": "<u4",
    "float": "<f4", "float32": "<f4",
    "double": "<f8", "float64": "<f8",
}

_FORMATS = ("ascii", "binary_little_endian")


@dataclass
class _Element:
    name: str
    count: int
    line: int
    props: list = field(default_factory=list)  # (name, dtype) or (name, ("list", count_t, item_t))


@dataclass
class PlyDocument:
    """Parsed header plus vertex coordinates."""

    format: str
    vertex_count: int
    properties: list
    vertices: np.ndarray


def _parse_header(fh):
    magic = fh.readline()
    if magic.strip() != b"ply":
        raise ParseError("missing 'ply' magic", line=1)
    fmt = None
    elements = []
    lineno = 1
    while True:
        raw = fh.readline()
        lineno += 1
        if not raw:
            raise ParseError("unexpected end of file before end_header", line=lineno)
        try:
            text = raw.decode("ascii").strip()
        except UnicodeDecodeError:
            raise ParseError("non-ASCII header line", line=lineno) from None
        if not text:
            continue
        tok = text.split()
        key = tok[0]
        if key == "end_header":
            break
        if key in ("comment", "obj_info"):
            continue
        if key == "format":
            if len(tok) != 3 or tok[1] not in _FORMATS:
                raise ParseError(f"unsupported format line {text!r}", line=lineno)
            fmt = tok[1]
        elif key == "element":
            if len(tok) != 3:
                raise ParseError(f"bad element line {text!r}", line=lineno)
            try:
                count = int(tok[2])
            except ValueError:
                raise ParseError(f"bad element count {tok[2]!r}", line=lineno) from None
            if count < 0:
                raise ParseError("negative element count", line=lineno)
            elements.append(_Element(tok[1], count, lineno))
        elif key == "property":
            if not elements:
                raise ParseError("property before any element", line=lineno)
            if len(tok) == 3 and tok[1] in _TYPES:
                elements[-1].props.append((tok[2], _TYPES[tok[1]]))
            elif len(tok) == 5 and tok[1] == "list" and tok[2] in _TYPES and tok[3] in _TYPES:
                elements[-1].props.append((tok[4], ("list", _TYPES[tok[2]], _TYPES[tok[3]])))
            else:
                raise ParseError(f"bad property line {text!r}", line=lineno)
        else:
            raise ParseError(f"unknown header keyword {key!r}", line=lineno)
    if fmt is None:
        raise ParseError("header has no format line", line=lineno)
    vertex = [e for e in elements if e.name == "vertex"]
    if not vertex:
        raise ParseError("header declares no vertex element", line=lineno)
    names = [p[0] for p in vertex[0].props]
    for axis in "xyz":
        if axis not in names:
            raise ParseError(f"vertex element lacks property {axis!r}", line=vertex[0].line)
    return fmt, elements, lineno


def _read_ascii(fh, elements, header_lines):
    lines = fh.read().decode("ascii", errors="replace").splitlines()
    pos = 0
    vertices = None
    for el in elements:
        if el.name != "vertex":
            log.warning("skipping PLY element %r (%d records)", el.name, el.count)
        rows = []
        for i in range(el.count):
            while pos < len(lines) and not lines[pos].strip():
                pos += 1
            if pos >= len(lines):
                raise TruncationError(
                    f"element {el.name!r} declares {el.count} records, found {i}")
            if el.name == "vertex":
                tok = lines[pos].split()
                vals = {}
                j = 0
                try:
                    for name, dt in el.props:
                        if isinstance(dt, tuple):
                            n = int(tok[j])
                            j += 1 + n
                        else:
                            vals[name] = float(tok[j])
                            j += 1
                except (IndexError, ValueError):
                    raise ParseError(f"malformed vertex record {lines[pos]!r}",
                                     line=header_lines + pos + 1) from None
                rows.append((vals["x"], vals["y"], vals["z"]))
            pos += 1
        if el.name == "vertex":
            # values are rounded to the declared property precision
            types = dict(el.props)
            vertices = np.array(rows, dtype=np.float64).reshape(-1, 3)
            vertices = np.column_stack([vertices[:, k].astype(types[a]).astype(np.float64)
                                        for k, a in enumerate("xyz")])
    return vertices


def _read_binary(fh, elements):
    data = fh.read()
    offset = 0
    vertices = None
    for el in elements:
        if el.name != "vertex":
            log.warning("skipping PLY element %r (%d records)", el.name, el.count)
        if any(isinstance(dt, tuple) for _, dt in el.props):
            if el.name == "vertex":
                raise ParseError("list properties on vertex are not supported in binary PLY")
            # variable-length records: walk them one by one
            for i in range(el.count):
                for _, dt in el.props:
                    if isinstance(dt, tuple):
                        ct = np.dtype(dt[1])
                        if offset + ct.itemsize > len(data):
                            raise TruncationError(
                                f"element {el.name!r} truncated at record {i}")
                        n = int(np.frombuffer(data, ct, 1, offset)[0])
                        offset += ct.itemsize + n * np.dtype(dt[2]).itemsize
                    else:
                        offset += np.dtype(dt).itemsize
            if offset > len(data):
                raise TruncationError(f"element {el.name!r} truncated")
            continue
        rec = np.dtype([(name, dt) for name, dt in el.props])
        need = rec.itemsize * el.count
        if offset + need > len(data):
            have = (len(data) - offset) // rec.itemsize
            raise TruncationError(
                f"element {el.name!r} declares {el.count} records, found {have}")
        arr = np.frombuffer(data, rec, el.count, offset)
        offset += need
        if el.name == "vertex":
            vertices = np.column_stack([arr[a].astype(np.float64) for a in "xyz"])
    return vertices


def read_ply(path) -> PlyDocument:
    """Parse a PLY file into a :class:`PlyDocument`."""
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    with fh:
        fmt, elements, header_lines = _parse_header(fh)
        if fmt == "ascii":
            vertices = _read_ascii(fh, elements, header_lines)
        else:
            vertices = _read_binary(fh, elements)
    vertex = next(e for e in elements if e.name == "vertex")
    if vertices.shape[0] != vertex.count:
        raise TruncationError(
            f"vertex element declares {vertex.count} records, found {vertices.shape[0]}")
    return PlyDocument(fmt, vertex.count, [p[0] for p in vertex.props], vertices)


def load_ply(path, label=None) -> PointCloud:
    """Load the x, y, z vertex coordinates of a PLY file as a 3-D PointCloud."""
    doc = read_ply(path)
    if label is None:
        label = os.path.splitext(os.path.basename(str(path)))[0]
    return PointCloud(doc.vertices, label=label)


def write_ply(cloud, path, format="ascii", dtype=None):
    """Write a 3-D point cloud as a vertex-only PLY file.

    ASCII output uses ``float`` properties printed with 9 significant
    digits, enough to round-trip any float32 value. Binary output defaults
    to ``double`` so float64 coordinates survive bit-exactly; pass
    ``dtype="float"`` for the more common single-precision layout.
    """
    pts = as_array(cloud)
    if pts.shape[1] != 3:
        raise DimensionError(f"PLY export needs 3-D points, got dimension {pts.shape[1]}")
    if format not in ("ascii", "binary"):
        raise ValueError(f"format must be 'ascii' or 'binary', not {format!r}")
    if dtype is None:
        dtype = "float" if format == "ascii" else "double"
    if dtype not in ("float", "double"):
        raise ValueError(f"dtype must be 'float' or 'double', not {dtype!r}")
    fmt_line = "ascii 1.0" if format == "ascii" else "binary_little_endian 1.0"
    header = (
        "ply\n"
        f"format {fmt_line}\n"
        f"element vertex {pts.shape[0]}\n"
        f"property {dtype} x\n"
        f"property {dtype} y\n"
        f"property {dtype} z\n"
        "end_header\n"
    )
    try:
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            if format == "ascii":
                digits = 9 if dtype == "float" else 17
                lines = "".join(
                    " ".join(f"{v:.{digits}g}" for v in row) + "\n" for row in pts)
                fh.write(lines.encode("ascii"))
            else:
                fh.write(np.ascontiguousarray(pts, dtype=_TYPES[dtype]).tobytes())
    except OSError as exc:
        raise IoError(str(exc)) from exc
