"""PLY point-cloud reader/writer (ASCII and binary little-endian).

Written files always carry float32 x/y/z and uchar red/green/blue, so a
write is a float32 quantization point: read(write(c)) reproduces the file
byte-for-byte on a second write. Point ids are not stored; reading assigns
sequential ids from 0.
"""
from __future__ import annotations

import io

import numpy as np

from ..cloud import PointCloud
from ..errors import ParseError, UnsupportedFormat

# scalar PLY property name -> (numpy little-endian dtype, byte size)
_SCALAR_TYPES = {
    "char": ("i1", 1), "int8": ("i1", 1),
    "uchar": ("u1", 1), "uint8": ("u1", 1),
    "short": ("<i2", 2), "int16": ("<i2", 2),
    "ushort": ("<u2", 2), "uint16": ("<u2", 2),
    "int": ("<i4", 4), "int32": ("<i4", 4),
    "uint": ("<u4", 4), "uint32": ("<u4", 4),
    "float": ("<f4", 4), "float32": ("<f4", 4),
    "double": ("<f8", 8), "float64": ("<f8", 8),
}
_COLOR_NAMES = ("red", "green", "blue")


def _header_lines(header: bytes, path) -> list:
    lines = []
    for raw in header.split(b"\n"):
        raw = raw.rstrip(b"\r")
        try:
            lines.append(raw.decode("ascii"))
        except UnicodeDecodeError:
            raise ParseError("non-ASCII byte in header", path=path)
    return lines


def read_ply(path) -> PointCloud:
    """Load a point cloud from a PLY file.

    Positions may be float or double; colors (red/green/blue, uchar) are
    optional and default to white. Raises ParseError on malformed input and
    UnsupportedFormat for big-endian files, list-typed vertex properties,
    or a vertex element lacking x/y/z.
    """
    with open(path, "rb") as fh:
        blob = fh.read()

    end = blob.find(b"end_header")
    if not blob.startswith(b"ply") or end < 0:
        raise ParseError("not a PLY file (missing ply/end_header)", path=path)
    body_start = blob.find(b"\n", end)
    if body_start < 0:
        raise ParseError("truncated header", path=path)
    body_start += 1

    fmt = None
    elements = []  # (name, count, [(prop_name, type_name)])
    for lineno, line in enumerate(_header_lines(blob[:end], path), start=1):
        parts = line.split()
        if not parts or parts[0] in ("ply", "comment", "obj_info"):
            continue
        if parts[0] == "format":
            if len(parts) < 2:
                raise ParseError("malformed format line", path=path, line=lineno)
            if parts[1] == "ascii":
                fmt = "ascii"
            elif parts[1] == "binary_little_endian":
                fmt = "binary_le"
            else:
                raise UnsupportedFormat(
                    "unsupported PLY format " + parts[1], path=path, line=lineno
                )
        elif parts[0] == "element":
            if len(parts) != 3:
                raise ParseError("malformed element line", path=path, line=lineno)
            try:
                count = int(parts[2])
            except ValueError:
                raise ParseError("bad element count", path=path, line=lineno)
            elements.append((parts[1], count, []))
        elif parts[0] == "property":
            if not elements:
                raise ParseError("property before any element", path=path, line=lineno)
            if parts[1] == "list":
                elements[-1][2].append((parts[-1], "list"))
            elif len(parts) == 3:
                elements[-1][2].append((parts[2], parts[1]))
            else:
                raise ParseError("malformed property line", path=path, line=lineno)
        else:
            raise ParseError("unknown header keyword " + parts[0], path=path, line=lineno)

    if fmt is None:
        raise ParseError("missing format line", path=path)
    vertex = next((e for e in elements if e[0] == "vertex"), None)
    if vertex is None:
        raise ParseError("no vertex element", path=path)
    _, count, props = vertex
    names = [name for name, _ in props]
    if any(t == "list" for _, t in props):
        raise UnsupportedFormat("list-typed vertex property", path=path)
    if not all(axis in names for axis in ("x", "y", "z")):
        raise UnsupportedFormat("vertex element lacks x/y/z", path=path)
    for name, tname in props:
        if tname not in _SCALAR_TYPES:
            raise UnsupportedFormat("unknown property type " + tname, path=path)
    if fmt == "binary_le" and elements[0][0] != "vertex":
        raise UnsupportedFormat("binary PLY with non-vertex leading element", path=path)

    if fmt == "ascii":
        table = _read_ascii_rows(blob[body_start:], elements, count, len(props), path)
        # quantize to the declared storage type so ascii and binary reads
        # of the same logical content produce bit-identical clouds
        for name, tname in props:
            table[name] = table[name].astype(_SCALAR_TYPES[tname][0])
    else:
        dtype = np.dtype([(name, _SCALAR_TYPES[t][0]) for name, t in props])
        need = count * dtype.itemsize
        if len(blob) - body_start < need:
            raise ParseError("binary body shorter than vertex element", path=path)
        rec = np.frombuffer(blob, dtype=dtype, count=count, offset=body_start)
        table = {name: rec[name] for name in names}

    positions = np.column_stack(
        [table["x"], table["y"], table["z"]]
    ).astype(np.float64)
    if all(c in names for c in _COLOR_NAMES):
        colors = np.column_stack(
            [table[c] for c in _COLOR_NAMES]
        ).astype(np.uint8)
    else:
        colors = None
    return PointCloud.from_positions(positions, colors=colors)


def _read_ascii_rows(body: bytes, elements, count, ncols, path):
    try:
        text = body.decode("ascii")
    except UnicodeDecodeError:
        raise ParseError("non-ASCII byte in body", path=path)
    # rows of elements declared before vertex are skipped line-for-line
    skip = 0
    for name, ecount, _ in elements:
        if name == "vertex":
            break
        skip += ecount
    vertex = next(e for e in elements if e[0] == "vertex")
    if count == 0:
        return {name: np.empty(0) for name, _ in vertex[2]}
    try:
        data = np.loadtxt(
            io.StringIO(text), dtype=np.float64, skiprows=skip,
            max_rows=count, ndmin=2,
        )
    except ValueError as exc:
        raise ParseError("malformed vertex row: " + str(exc), path=path)
    if data.shape != (count, ncols):
        raise ParseError(
            "expected %d rows of %d values, got %s" % (count, ncols, data.shape),
            path=path,
        )
    return {name: data[:, i] for i, (name, _) in enumerate(vertex[2])}


_RECORD_DTYPE = np.dtype(
    [("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
     ("red", "u1"), ("green", "u1"), ("blue", "u1")]
)


def _header(count: int, fmt: str) -> bytes:
    fmt_name = "ascii" if fmt == "ascii" else "binary_little_endian"
    lines = [
        "ply",
        "format %s 1.0" % fmt_name,
        "element vertex %d" % count,
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "end_header",
    ]
    return ("\n".join(lines) + "\n").encode("ascii")


def write_ply(cloud: PointCloud, path, format: str = "binary_le") -> None:
    """Write a cloud as PLY; ``format`` is "ascii" or "binary_le".

    Output is deterministic: the same cloud always produces identical bytes.
    """
    if format not in ("ascii", "binary_le"):
        raise ValueError("format must be 'ascii' or 'binary_le'")
    pos32 = cloud.positions.astype(np.float32)
    with open(path, "wb") as fh:
        fh.write(_header(len(cloud), format))
        if format == "binary_le":
            rec = np.empty(len(cloud), dtype=_RECORD_DTYPE)
            rec["x"], rec["y"], rec["z"] = pos32[:, 0], pos32[:, 1], pos32[:, 2]
            for i, c in enumerate(_COLOR_NAMES):
                rec[c] = cloud.colors[:, i]
            fh.write(rec.tobytes())
        else:
            out = []
            for row, color in zip(pos32, cloud.colors):
                coords = " ".join(
                    np.format_float_positional(v, trim="0") for v in row
                )
                out.append("%s %d %d %d\n" % (coords, color[0], color[1], color[2]))
            fh.write("".join(out).encode("ascii"))
