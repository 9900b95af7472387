"""Oriented triangle meshes: combinatorics and discrete curvature."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NonManifoldEdge, NonOrientable


@dataclass
class TriMesh:
    """Triangle mesh with counter-clockwise (outward) face orientation.

    Parameters
    ----------
    vertices : (V, 3) array_like
    faces : (F, 3) array_like of int
    """

    vertices: np.ndarray
    faces: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise InputError("vertices must have shape (V, 3)")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise InputError("face index out of range")

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def copy(self):
        return TriMesh(self.vertices.copy(), self.faces.copy())

    def flipped(self):
        return TriMesh(self.vertices.copy(), self.faces[:, ::-1].copy())

    def translated(self, offset):
        return TriMesh(self.vertices + np.asarray(offset, dtype=float), self.faces.copy())

    # -- combinatorics ---------------------------------------------------

    def directed_edges(self):
        f = self.faces
        return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])

    def edges(self):
        """Unique undirected edges ``(E, 2)`` and the number of faces on each."""
        if "edges" not in self._cache:
            d = np.sort(self.directed_edges(), axis=1)
            e, counts = np.unique(d, axis=0, return_counts=True)
            self._cache["edges"] = (e, counts)
        return self._cache["edges"]

    def check_manifold(self):
        e, counts = self.edges()
        if np.any(counts > 2):
            a, b = e[np.argmax(counts > 2)]
            raise NonManifoldEdge(f"edge ({a}, {b}) is shared by more than two faces")

    def check_orientation(self):
        d = self.directed_edges()
        _, counts = np.unique(d, axis=0, return_counts=True)
        if np.any(counts > 1):
            raise NonOrientable("a directed edge occurs twice: faces are not consistently oriented")

    def boundary_edges(self):
        """Directed boundary edges, oriented as in their unique face."""
        d = self.directed_edges()
        key = np.sort(d, axis=1)
        _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        return d[counts[inv.ravel()] == 1]

    def boundary_loops(self):
        """Closed cycles of boundary vertices following face orientation."""
        if "loops" in self._cache:
            return self._cache["loops"]
        be = self.boundary_edges()
        nxt = {}
        for a, b in be:
            nxt.setdefault(int(a), []).append(int(b))
        loops = []
        while nxt:
            start = next(iter(nxt))
            loop = [start]
            cur = start
            while True:
                outs = nxt.get(cur)
                if not outs:
                    raise InputError("boundary edges do not close into loops")
                b = outs.pop()
                if not outs:
                    del nxt[cur]
                if b == start:
                    break
                loop.append(b)
                cur = b
            loops.append(np.array(loop, dtype=np.int64))
        self._cache["loops"] = loops
        return loops

    @property
    def is_closed(self):
        return len(self.boundary_edges()) == 0

    def used_vertices(self):
        return np.unique(self.faces)

    def compact(self):
        """Drop unreferenced vertices; returns (mesh, old-to-new index map)."""
        used = self.used_vertices()
        remap = -np.ones(self.n_vertices, dtype=np.int64)
        remap[used] = np.arange(len(used))
        return TriMesh(self.vertices[used], remap[self.faces]), remap

    def vertex_neighbours(self):
        e, _ = self.edges()
        nb = [[] for _ in range(self.n_vertices)]
        for a, b in e:
            nb[a].append(b)
            nb[b].append(a)
        return nb

    # -- geometry --------------------------------------------------------

    def _corners(self):
        P = self.vertices[self.faces]
        return P[:, 0], P[:, 1], P[:, 2]

    def face_normals(self, unit=True):
        a, b, c = self._corners()
        n = np.cross(b - a, c - a)
        if unit:
            n = n / np.linalg.norm(n, axis=1, keepdims=True)
        return n

    def face_areas(self):
        return 0.5 * np.linalg.norm(self.face_normals(unit=False), axis=1)

    def vertex_normals(self):
        n = np.zeros_like(self.vertices)
        fn = self.face_normals(unit=False)
        for k in range(3):
            np.add.at(n, self.faces[:, k], fn)
        nrm = np.linalg.norm(n, axis=1, keepdims=True)
        nrm[nrm == 0] = 1.0
        return n / nrm

    def edge_lengths(self):
        e, _ = self.edges()
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    def corner_angles(self):
        """Interior angle at each corner, shape (F, 3)."""
        a, b, c = self._corners()
        def ang(p, q, r):
            u, w = q - p, r - p
            return np.arctan2(np.linalg.norm(np.cross(u, w), axis=1), np.einsum("ij,ij->i", u, w))
        return np.stack([ang(a, b, c), ang(b, c, a), ang(c, a, b)], axis=1)

    def boundary_vertex_mask(self):
        m = np.zeros(self.n_vertices, dtype=bool)
        be = self.boundary_edges()
        m[be.ravel()] = True
        return m

    def angle_defects(self):
        """``2 pi - sum of angles`` at interior vertices, ``pi - sum`` on the boundary."""
        s = np.zeros(self.n_vertices)
        ang = self.corner_angles()
        for k in range(3):
            np.add.at(s, self.faces[:, k], ang[:, k])
        full = np.where(self.boundary_vertex_mask(), np.pi, 2 * np.pi)
        return full - s

    def mixed_areas(self):
        """Mixed Voronoi area per vertex (obtuse triangles split by halves and quarters)."""
        a, b, c = self._corners()
        ang = self.corner_angles()
        area = self.face_areas()
        cot = 1.0 / np.tan(ang)
        l2 = np.stack([np.sum((b - c) ** 2, 1), np.sum((c - a) ** 2, 1), np.sum((a - b) ** 2, 1)], axis=1)
        # Voronoi share of corner k: (|e_k+1|^2 cot_k+1 ... ) / 8 with opposite-edge convention
        vor = np.empty_like(ang)
        vor[:, 0] = (l2[:, 1] * cot[:, 1] + l2[:, 2] * cot[:, 2]) / 8.0
        vor[:, 1] = (l2[:, 2] * cot[:, 2] + l2[:, 0] * cot[:, 0]) / 8.0
        vor[:, 2] = (l2[:, 0] * cot[:, 0] + l2[:, 1] * cot[:, 1]) / 8.0
        obtuse = ang > np.pi / 2
        any_obt = obtuse.any(axis=1)
        share = np.where(any_obt[:, None], np.where(obtuse, area[:, None] / 2, area[:, None] / 4), vor)
        out = np.zeros(self.n_vertices)
        for k in range(3):
            np.add.at(out, self.faces[:, k], share[:, k])
        return out

    def gauss_curvature(self):
        """Angle defect divided by mixed area (NaN on boundary vertices)."""
        K = self.angle_defects() / self.mixed_areas()
        K[self.boundary_vertex_mask()] = np.nan
        return K

    def cotan_laplacian(self, values=None):
        """Cotangent Laplacian of ``values`` (default: vertex positions), area-normalised."""
        X = self.vertices if values is None else np.asarray(values, dtype=float)
        cot = 1.0 / np.tan(self.corner_angles())
        out = np.zeros_like(X)
        f = self.faces
        for k in range(3):
            i, j, opp = f[:, (k + 1) % 3], f[:, (k + 2) % 3], k
            w = 0.5 * cot[:, opp]
            w = w.reshape((-1,) + (1,) * (X.ndim - 1))
            d = X[j] - X[i]
            np.add.at(out, i, w * d)
            np.add.at(out, j, -w * d)
        A = self.mixed_areas().reshape((-1,) + (1,) * (X.ndim - 1))
        return out / A

    def mean_curvature(self):
        """Signed vertex mean curvature ``H = -<Delta x, n>`` (chart convention)."""
        H = -np.einsum("ij,ij->i", self.cotan_laplacian(), self.vertex_normals())
        H[self.boundary_vertex_mask()] = np.nan
        return H

    def volume(self):
        a, b, c = self._corners()
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def bbox_diagonal(self):
        return float(np.linalg.norm(self.vertices.max(0) - self.vertices.min(0)))


def euler_characteristic(mesh: TriMesh):
    """Return ``(chi, b, g)`` with ``chi = V - E + F`` and ``g = (2 - chi - b) / 2``.

    Only vertices referenced by a face are counted.

    Raises
    ------
    NonManifoldEdge, NonOrientable
    """
    mesh.check_manifold()
    mesh.check_orientation()
    e, _ = mesh.edges()
    V = len(mesh.used_vertices())
    chi = V - len(e) + mesh.n_faces
    b = len(mesh.boundary_loops())
    twice_g = 2 - chi - b
    if twice_g < 0 or twice_g % 2:
        raise InputError(f"inconsistent topology: chi={chi}, b={b}")
    return int(chi), int(b), int(twice_g // 2)


def merge_meshes(*meshes: TriMesh) -> TriMesh:
    verts, faces, off = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + off)
        off += m.n_vertices
    return TriMesh(np.concatenate(verts), np.concatenate(faces))


def icosahedron(radius=1.0, subdivisions=0) -> TriMesh:
    """Icosahedron (optionally loop-subdivided and projected to the sphere)."""
    t = (1 + 5 ** 0.5) / 2
    V = np.array([[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
                  [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
                  [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], dtype=float)
    F = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                  [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                  [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                  [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    for _ in range(subdivisions):
        V, F = _subdivide(V, F)
        V /= np.linalg.norm(V, axis=1, keepdims=True)
    return TriMesh(radius * V, F)


def _subdivide(V, F):
    mid = {}
    verts = list(V)

    def m(a, b):
        k = (min(a, b), max(a, b))
        if k not in mid:
            mid[k] = len(verts)
            verts.append(0.5 * (V[a] + V[b]))
        return mid[k]

    out = []
    for a, b, c in F:
        ab, bc, ca = m(a, b), m(b, c), m(c, a)
        out += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
    return np.array(verts), np.array(out)


def torus(R=2.0, r=0.5, n_major=32, n_minor=16) -> TriMesh:
    """Standard embedded torus with outward orientation."""
    i, j = np.meshgrid(np.arange(n_major), np.arange(n_minor), indexing="ij")
    a = 2 * np.pi * i / n_major
    b = 2 * np.pi * j / n_minor
    V = np.stack([(R + r * np.cos(b)) * np.cos(a), (R + r * np.cos(b)) * np.sin(a), r * np.sin(b)], -1)
    idx = lambda p, q: (p % n_major) * n_minor + (q % n_minor)
    F = []
    for p in range(n_major):
        for q in range(n_minor):
            F.append([idx(p, q), idx(p + 1, q), idx(p + 1, q + 1)])
            F.append([idx(p, q), idx(p + 1, q + 1), idx(p, q + 1)])
    m = TriMesh(V.reshape(-1, 3), np.array(F))
    return m if m.volume() > 0 else m.flipped()


def grid_disc(radius=1.0, n_rings=8, n_theta=32) -> TriMesh:
    """Flat triangulated disc in the plane z = 0 (normal +z)."""
    verts = [[0.0, 0.0, 0.0]]
    faces = []
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    for k in range(1, n_rings + 1):
        rho = radius * k / n_rings
        verts += [[rho * np.cos(t), rho * np.sin(t), 0.0] for t in th]
    ring = lambda k, j: 1 + (k - 1) * n_theta + (j % n_theta)
    for j in range(n_theta):
        faces.append([0, ring(1, j), ring(1, j + 1)])
    for k in range(1, n_rings):
        for j in range(n_theta):
            faces.append([ring(k, j), ring(k + 1, j), ring(k + 1, j + 1)])
            faces.append([ring(k, j), ring(k + 1, j + 1), ring(k, j + 1)])
    return TriMesh(np.array(verts), np.array(faces))


def grid_mesh(positions, periodic=False) -> TriMesh:
    """Triangulate a chart sample grid ``(n1, n2, 3)``.

    With ``periodic`` the second index wraps around (the last column must
    not repeat the first).
    """
    P = np.asarray(positions, dtype=float)
    n1, n2 = P.shape[:2]
    idx = np.arange(n1 * n2).reshape(n1, n2)
    if periodic:
        idx = np.concatenate([idx, idx[:, :1]], axis=1)
    a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
    c, d = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
    F = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return TriMesh(P.reshape(-1, 3), F)
