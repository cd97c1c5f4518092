"""Wavefront OBJ mesh reader: `v` and `f` directives only.

Polygonal faces are fan-triangulated around their first vertex. Normals,
texture coordinates, materials, and groups are skipped. Triangles whose
area is at most 1e-12 m^2 are dropped after load.
"""
from __future__ import annotations

import numpy as np

from ..errors import EmptyMesh, ParseError
from ..mesh import MIN_TRIANGLE_AREA, TriangleMesh


def _face_index(token: str, vertex_count: int, path, lineno: int) -> int:
    head = token.split("/", 1)[0]
    try:
        idx = int(head)
    except ValueError:
        raise ParseError("bad face index " + repr(token), path=path, line=lineno)
    if idx > 0:
        idx -= 1  # OBJ indices are 1-based
    elif idx < 0:
        idx += vertex_count  # negative indices count back from the last vertex
    else:
        raise ParseError("face index 0 is invalid", path=path, line=lineno)
    if not 0 <= idx < vertex_count:
        raise ParseError("face index out of range", path=path, line=lineno)
    return idx


def read_obj(path) -> TriangleMesh:
    """Load a triangle mesh from an OBJ file.

    Raises ParseError on malformed directives or out-of-range indices and
    EmptyMesh when no (non-degenerate) face survives.
    """
    vertices = []
    triangles = []
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ParseError("vertex needs 3 coordinates", path=path, line=lineno)
                try:
                    vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
                except ValueError:
                    raise ParseError("bad vertex coordinate", path=path, line=lineno)
            elif parts[0] == "f":
                if len(parts) < 4:
                    raise ParseError("face needs at least 3 vertices", path=path, line=lineno)
                idx = [_face_index(tok, len(vertices), path, lineno) for tok in parts[1:]]
                for k in range(1, len(idx) - 1):
                    triangles.append([idx[0], idx[k], idx[k + 1]])
            # every other directive (vn, vt, usemtl, g, s, o, mtllib, l, p) is skipped

    if not triangles:
        raise EmptyMesh("OBJ file has no faces: %s" % path)
    mesh = TriangleMesh(
        np.array(vertices, dtype=np.float64),
        np.array(triangles, dtype=np.int64),
    ).drop_degenerate(MIN_TRIANGLE_AREA)
    if len(mesh) == 0:
        raise EmptyMesh("OBJ file has only degenerate faces: %s" % path)
    return mesh
