"""OBJ and ASCII PLY reading and writing for triangle meshes."""
from __future__ import annotations

import numpy as np

from .errors import InputError
from .mesh import TriMesh

__all__ = ["write_obj", "read_obj", "write_ply", "read_ply", "read_mesh", "write_mesh"]


def write_obj(mesh: TriMesh, path, comment=None):
    with open(path, "w") as fh:
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"# {line}\n")
        for p in mesh.vertices:
            fh.write("v %.17g %.17g %.17g\n" % tuple(p))
        for f in mesh.faces + 1:
            fh.write("f %d %d %d\n" % tuple(f))


def read_obj(path) -> TriMesh:
    """Read vertices and faces of a Wavefront OBJ file.

    Polygons are fan-triangulated; texture/normal indices (``f 1/2/3``) and
    negative (relative) indices are accepted; other records are ignored.
    """
    V, F = [], []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                try:
                    V.append([float(c) for c in parts[1:4]])
                except ValueError as exc:
                    raise InputError(f"{path}:{ln}: bad vertex record") from exc
            elif parts[0] == "f":
                try:
                    idx = [int(tok.split("/")[0]) for tok in parts[1:]]
                except ValueError as exc:
                    raise InputError(f"{path}:{ln}: bad face record") from exc
                idx = [i - 1 if i > 0 else len(V) + i for i in idx]
                if len(idx) < 3:
                    raise InputError(f"{path}:{ln}: face with fewer than 3 vertices")
                for k in range(1, len(idx) - 1):
                    F.append([idx[0], idx[k], idx[k + 1]])
    if not V:
        raise InputError(f"{path}: no vertices")
    F = np.array(F, dtype=np.int64).reshape(-1, 3)
    if F.size and (F.min() < 0 or F.max() >= len(V)):
        raise InputError(f"{path}: face index out of range")
    return TriMesh(np.array(V, dtype=float), F)


def write_ply(mesh: TriMesh, path):
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {mesh.n_vertices}\n")
        fh.write("property double x\nproperty double y\nproperty double z\n")
        fh.write(f"element face {mesh.n_faces}\n")
        fh.write("property list uchar int vertex_indices\nend_header\n")
        for p in mesh.vertices:
            fh.write("%.17g %.17g %.17g\n" % tuple(p))
        for f in mesh.faces:
            fh.write("3 %d %d %d\n" % tuple(f))


def read_ply(path) -> TriMesh:
    """Read an ASCII PLY file with ``vertex`` (x, y, z first) and ``face`` elements."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise InputError(f"{path}: not a PLY file")
    counts, order, k = {}, [], 1
    while k < len(lines) and lines[k].strip() != "end_header":
        parts = lines[k].split()
        if parts[:1] == ["format"] and parts[1] != "ascii":
            raise InputError(f"{path}: only ASCII PLY is supported")
        if parts[:1] == ["element"]:
            counts[parts[1]] = int(parts[2])
            order.append(parts[1])
        k += 1
    if k == len(lines):
        raise InputError(f"{path}: missing end_header")
    body = lines[k + 1:]
    V, F, pos = [], [], 0
    for name in order:
        rows = body[pos:pos + counts[name]]
        pos += counts[name]
        if name == "vertex":
            V = [[float(c) for c in r.split()[:3]] for r in rows]
        elif name == "face":
            for r in rows:
                vals = [int(c) for c in r.split()]
                idx = vals[1:1 + vals[0]]
                for j in range(1, len(idx) - 1):
                    F.append([idx[0], idx[j], idx[j + 1]])
    if len(V) != counts.get("vertex", 0):
        raise InputError(f"{path}: truncated vertex list")
    return TriMesh(np.array(V, dtype=float), np.array(F, dtype=np.int64).reshape(-1, 3))


def read_mesh(path) -> TriMesh:
    p = str(path).lower()
    if p.endswith(".obj"):
        return read_obj(path)
    if p.endswith(".ply"):
        return read_ply(path)
    raise InputError(f"unknown mesh format: {path}")


def write_mesh(mesh: TriMesh, path):
    p = str(path).lower()
    if p.endswith(".obj"):
        return write_obj(mesh, path)
    if p.endswith(".ply"):
        return write_ply(mesh, path)
    raise InputError(f"unknown mesh format: {path}")
