"""PLY (binary + ASCII) and OBJ mesh I/O.

Vertex order is preserved round-trip. PLY supports an optional per-vertex
integer property "label" and uchar red/green/blue colors (used for labeled
point clouds).
"""
from __future__ import annotations

import io
import numpy as np
from pathlib import Path

from ..errors import MeshError
from .core import TriMesh

_PLY_TYPES = {
    "char": "i1", "uchar": "u1", "short": "i2", "ushort": "u2",
    "int": "i4", "uint": "u4", "float": "f4", "double": "f8",
    "int8": "i1", "uint8": "u1", "int16": "i2", "uint16": "u2",
    "int32": "i4", "uint32": "u4", "float32": "f4", "float64": "f8",
}


def write_ply(path, mesh: TriMesh | None = None, *, points: np.ndarray | None = None,
              labels: np.ndarray | None = None, colors: np.ndarray | None = None,
              binary: bool = True) -> None:
    """Write a mesh or a bare point cloud to PLY.

    `labels` becomes an int32 vertex property "label"; `colors` becomes
    uchar red/green/blue.
    """
    if mesh is not None:
        verts = mesh.vertices
        faces = mesh.faces
        normals = mesh.vertex_normals
    else:
        verts = np.asarray(points, dtype=np.float64)
        faces = np.zeros((0, 3), dtype=np.int64)
        normals = None

    n = len(verts)
    header = ["ply",
              "format binary_little_endian 1.0" if binary else "format ascii 1.0",
              f"element vertex {n}",
              "property double x", "property double y", "property double z"]
    fields = [("x", "f8"), ("y", "f8"), ("z", "f8")]
    if normals is not None:
        header += ["property double nx", "property double ny", "property double nz"]
        fields += [("nx", "f8"), ("ny", "f8"), ("nz", "f8")]
    if labels is not None:
        if len(labels) != n:
            raise MeshError("labels length mismatch")
        header.append("property int label")
        fields.append(("label", "i4"))
    if colors is not None:
        if len(colors) != n:
            raise MeshError("colors length mismatch")
        header += ["property uchar red", "property uchar green", "property uchar blue"]
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    if len(faces):
        header += [f"element face {len(faces)}",
                   "property list uchar int vertex_indices"]
    header.append("end_header")

    vdata = np.empty(n, dtype=np.dtype(fields))
    vdata["x"], vdata["y"], vdata["z"] = verts[:, 0], verts[:, 1], verts[:, 2]
    if normals is not None:
        vdata["nx"], vdata["ny"], vdata["nz"] = normals[:, 0], normals[:, 1], normals[:, 2]
    if labels is not None:
        vdata["label"] = np.asarray(labels, dtype=np.int32)
    if colors is not None:
        col = np.asarray(colors, dtype=np.uint8)
        vdata["red"], vdata["green"], vdata["blue"] = col[:, 0], col[:, 1], col[:, 2]

    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            fh.write(vdata.tobytes())
            if len(faces):
                fdata = np.empty(len(faces), dtype=np.dtype([("cnt", "u1"), ("idx", "i4", 3)]))
                fdata["cnt"] = 3
                fdata["idx"] = faces.astype(np.int32)
                fh.write(fdata.tobytes())
        else:
            buf = io.StringIO()
            for row in vdata:
                buf.write(" ".join(repr(x) if isinstance(x, float) else str(x)
                                   for x in row) + "\n")
            for face in faces:
                buf.write(f"3 {face[0]} {face[1]} {face[2]}\n")
            fh.write(buf.getvalue().encode("ascii"))


def read_ply(path) -> tuple[TriMesh | None, dict]:
    """Read a PLY file.

    Returns (mesh_or_None, props) where props may contain "label", "colors",
    and "points" for face-less files.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    head_end = data.find(b"end_header")
    if head_end < 0:
        raise MeshError("not a PLY file (no end_header)")
    head_end = data.find(b"\n", head_end) + 1
    header = data[:head_end].decode("ascii", errors="replace").splitlines()
    body = data[head_end:]

    fmt = None
    elements: list[tuple[str, int, list]] = []
    for line in header:
        parts = line.strip().split()
        if not parts:
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if parts[1] == "list":
                elements[-1][2].append((parts[4], ("list", _PLY_TYPES[parts[2]],
                                                   _PLY_TYPES[parts[3]])))
            else:
                elements[-1][2].append((parts[2], _PLY_TYPES[parts[1]]))

    out: dict = {}
    verts = None
    normals = None
    faces = None

    if fmt == "ascii":
        tokens = body.decode("ascii").split("\n")
        cursor = 0
        for name, count, props in elements:
            if any(isinstance(t, tuple) for _, t in props):
                rows = []
                for _ in range(count):
                    vals = tokens[cursor].split()
                    cursor += 1
                    cnt = int(vals[0])
                    rows.append([int(x) for x in vals[1:1 + cnt]])
                if name == "face":
                    faces = np.asarray(rows, dtype=np.int64)
            else:
                arr = np.array([tokens[cursor + i].split() for i in range(count)],
                               dtype=np.float64)
                cursor += count
                cols = {p[0]: arr[:, i] for i, p in enumerate(props)}
                if name == "vertex":
                    verts, normals, out = _unpack_vertex(cols, out)
    else:
        little = fmt == "binary_little_endian"
        order = "<" if little else ">"
        offset = 0
        for name, count, props in elements:
            if any(isinstance(t, tuple) for _, t in props):
                # assume constant list length 3 (triangles)
                _, cnt_t, idx_t = props[0][1]
                dt = np.dtype([("cnt", order + cnt_t), ("idx", order + idx_t, 3)])
                arr = np.frombuffer(body, dtype=dt, count=count, offset=offset)
                offset += dt.itemsize * count
                if name == "face":
                    if len(arr) and (arr["cnt"] != 3).any():
                        raise MeshError("non-triangle faces are not supported")
                    faces = arr["idx"].astype(np.int64)
            else:
                dt = np.dtype([(p[0], order + p[1]) for p in props])
                arr = np.frombuffer(body, dtype=dt, count=count, offset=offset)
                offset += dt.itemsize * count
                if name == "vertex":
                    cols = {p[0]: arr[p[0]] for p in props}
                    verts, normals, out = _unpack_vertex(cols, out)

    if verts is None:
        raise MeshError("PLY file has no vertex element")
    if faces is None or len(faces) == 0:
        out["points"] = verts
        if normals is not None:
            out["normals"] = normals
        return None, out
    return TriMesh(verts, faces, normals), out


def _unpack_vertex(cols: dict, out: dict):
    verts = np.stack([cols["x"], cols["y"], cols["z"]], axis=1).astype(np.float64)
    normals = None
    if "nx" in cols:
        normals = np.stack([cols["nx"], cols["ny"], cols["nz"]], axis=1).astype(np.float64)
    if "label" in cols:
        out["label"] = np.asarray(cols["label"], dtype=np.int64)
    if "red" in cols:
        out["colors"] = np.stack([cols["red"], cols["green"], cols["blue"]],
                                 axis=1).astype(np.uint8)
    return verts, normals, out


def write_obj(path, mesh: TriMesh) -> None:
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]!r} {v[1]!r} {v[2]!r}\n")
        if mesh.vertex_normals is not None:
            for n in mesh.vertex_normals:
                fh.write(f"vn {n[0]!r} {n[1]!r} {n[2]!r}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def read_obj(path) -> TriMesh:
    verts, normals, faces = [], [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "vn":
                normals.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(tok.split("/")[0]) - 1 for tok in parts[1:]]
                for k in range(1, len(idx) - 1):  # fan-triangulate
                    faces.append([idx[0], idx[k], idx[k + 1]])
    if not verts or not faces:
        raise MeshError("OBJ file has no geometry")
    n = np.asarray(normals) if len(normals) == len(verts) else None
    return TriMesh(np.asarray(verts), np.asarray(faces), n)
