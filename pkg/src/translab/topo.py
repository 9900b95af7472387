"""Topology and surgery on triangle meshes.

Level curves of the height, spherical caps glued onto planar boundary loops,
and the degree of the Gauss map counted two ways (angle-defect integral and
poles with outward normal ``+v``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .curves import PlanarCurve, curve_shortening_flow, diameter, resample_uniform, signed_area
from .errors import (CapOverlap, InputError, NoLevelSet, NonPlanarBoundary, OpenMesh,
                     PropertyViolation)
from .mesh import TriMesh, euler_characteristic, merge_meshes

__all__ = ["TriMesh", "euler_characteristic", "clip_mesh", "extract_level_curve", "LevelCurve",
           "build_cap", "CapSpec", "cap_ends", "CappedMesh", "Pole", "gauss_degree", "DegreeResult",
           "plane_basis"]


def plane_basis(v):
    """Orthonormal ``(e1, e2)`` with ``e1 x e2 = v``."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    a = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - v * (a @ v)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(v, e1)
    return e1, e2


# -- clipping and level sets -------------------------------------------------

def clip_mesh(mesh: TriMesh, normal, offset, keep="above", snap=True):
    """Keep the part of ``mesh`` where ``<p, normal> >= offset`` (or ``<=``).

    Triangles crossing the plane are split; cut vertices are shared between
    neighbouring triangles, so the new boundary is a union of closed loops.
    With ``snap`` the cut vertices are projected exactly onto the plane.
    """
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    sign = 1.0 if keep == "above" else -1.0
    d = sign * (mesh.vertices @ n - offset)
    inside = d >= 0
    V = [mesh.vertices]
    nv = mesh.n_vertices
    cut = {}
    extra = []

    def cut_vertex(a, b):
        nonlocal nv
        key = (min(a, b), max(a, b))
        if key not in cut:
            pa, pb = mesh.vertices[a], mesh.vertices[b]
            t = d[a] / (d[a] - d[b])
            p = pa + t * (pb - pa)
            if snap:
                p = p - ((p @ n) - offset) * n
            extra.append(p)
            cut[key] = nv
            nv += 1
        return cut[key]

    faces = []
    for f in mesh.faces:
        ins = inside[f]
        k = int(ins.sum())
        if k == 3:
            faces.append(list(f))
        elif k == 0:
            continue
        elif k == 1:
            r = int(np.argmax(ins))
            a, b, c = f[r], f[(r + 1) % 3], f[(r + 2) % 3]
            faces.append([a, cut_vertex(a, b), cut_vertex(a, c)])
        else:
            r = int(np.argmin(ins))
            c, a, b = f[r], f[(r + 1) % 3], f[(r + 2) % 3]
            pbc, pca = cut_vertex(b, c), cut_vertex(c, a)
            faces.append([a, b, pbc])
            faces.append([a, pbc, pca])
    if extra:
        V.append(np.array(extra))
    out, _ = TriMesh(np.concatenate(V), np.array(faces, dtype=np.int64).reshape(-1, 3)).compact()
    return out


@dataclass
class LevelCurve:
    points3d: np.ndarray
    closed: bool
    planar: PlanarCurve | None


def extract_level_curve(mesh: TriMesh, level, v=(0.0, 0.0, 1.0), perturb=1e-9):
    """Level set ``<p, v> = level`` by marching triangles.

    Returns a list of :class:`LevelCurve`; closed components carry their
    projection onto the plane orthogonal to ``v`` as a counter-clockwise
    :class:`PlanarCurve` (``None`` when that projection is not simple).
    """
    v = np.asarray(v, dtype=float)
    u = mesh.vertices @ v
    if not (u.min() < level < u.max()):
        raise NoLevelSet(f"level {level} outside the height range [{u.min()}, {u.max()}]")
    L = float(level)
    tries = 0
    while np.any(np.abs(u - L) < perturb):
        L += 2 * perturb
        tries += 1
        if tries > 1000:
            raise NoLevelSet("cannot move the level off the vertex values")
    above = u > L
    pts, key_to_id, adj = [], {}, {}

    def node(a, b):
        k = (min(a, b), max(a, b))
        if k not in key_to_id:
            t = (L - u[a]) / (u[b] - u[a])
            pts.append(mesh.vertices[a] + t * (mesh.vertices[b] - mesh.vertices[a]))
            key_to_id[k] = len(pts) - 1
        return key_to_id[k]

    for f in mesh.faces:
        s = above[f]
        if s.all() or not s.any():
            continue
        ends = [node(f[i], f[(i + 1) % 3]) for i in range(3) if s[i] != s[(i + 1) % 3]]
        a, b = ends
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    seen = set()
    out = []
    e1, e2 = plane_basis(v)
    P = np.array(pts)
    # open chains first (start at degree-1 nodes), then cycles
    starts = [k for k, nb in adj.items() if len(nb) == 1] + list(adj)
    for s0 in starts:
        if s0 in seen:
            continue
        chain = [s0]
        seen.add(s0)
        prev, cur = None, s0
        while True:
            nxt = [w for w in adj[cur] if w != prev and w not in seen]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            chain.append(cur)
            seen.add(cur)
        closed = len(chain) > 2 and s0 in adj[chain[-1]] and len(adj[s0]) == 2
        p3 = P[chain]
        planar = None
        if closed:
            try:
                planar = PlanarCurve(np.stack([p3 @ e1, p3 @ e2], 1))
            except InputError:      # projection not simple; keep the 3d loop only
                planar = None
            if signed_area(np.stack([p3 @ e1, p3 @ e2], 1)) < 0:
                p3 = p3[::-1]
        out.append(LevelCurve(p3, closed, planar))
    return out


# -- spherical caps ----------------------------------------------------------

def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3 - 2 * x)


def _smoothstep_int(x):
    """Integral of the smoothstep from 0 to x (x clipped to [0, 1], linear beyond)."""
    xc = np.clip(x, 0.0, 1.0)
    return xc ** 3 - 0.5 * xc ** 4 + np.maximum(x - 1.0, 0.0)


class HeightProfile:
    """Monotone height ``phi`` on [0, 1] of the spherical cap.

    ``phi(t) = t`` on ``[0, eps]``; ``phi(t) = sqrt(sigma^2 - (1 - t)^2)`` on
    ``[1 - delta, 1]``.  In between ``phi'`` blends slope 1 into the sphere
    slope with smoothstep transitions and a positive bump that supplies the
    remaining height, so ``phi`` is C^1 with ``phi' > 0`` on ``[0, 1)``.
    """

    def __init__(self, sigma, eps, delta):
        if not (0 < eps < 1 - delta < 1 and delta < sigma):
            raise InputError("need 0 < eps < 1 - delta with delta < sigma")
        self.sigma, self.eps, self.delta = sigma, eps, delta
        self.ta, self.tb = eps, 1 - delta
        self.phi_b = np.sqrt(sigma ** 2 - delta ** 2)
        self.m1 = delta / self.phi_b
        D = self.phi_b - eps
        if D <= 0:
            raise InputError("sigma too small for the collar width")
        T = self.tb - self.ta
        self.d1 = self.d2 = min(D / 2, T / 4)
        self.c = (D - self.d1 / 2 - self.m1 * self.d2 / 2) / T
        if self.c <= 0:
            raise InputError("no monotone height profile for these parameters")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        lo = t <= self.ta
        hi = t >= self.tb
        mid = ~(lo | hi)
        out[lo] = t[lo]
        out[hi] = np.sqrt(np.maximum(self.sigma ** 2 - (1 - t[hi]) ** 2, 0.0))
        x = t[mid] - self.ta
        T = self.tb - self.ta
        # slope 1 - S1 over the first transition
        one = x - self.d1 * _smoothstep_int(x / self.d1)
        # slope m1 * S2 over the last transition (S2 rises on [T - d2, T])
        two = self.m1 * self.d2 * _smoothstep_int((x - (T - self.d2)) / self.d2)
        tau = x / T
        bump = self.c * T * (10 * tau ** 3 - 15 * tau ** 4 + 6 * tau ** 5)
        out[mid] = self.ta + one + two + bump
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        lo = t <= self.ta
        hi = t >= self.tb
        mid = ~(lo | hi)
        out[lo] = 1.0
        r = 1 - t[hi]
        out[hi] = r / np.sqrt(np.maximum(self.sigma ** 2 - r ** 2, 1e-300))
        x = t[mid] - self.ta
        T = self.tb - self.ta
        tau = x / T
        out[mid] = (1 - _smoothstep(x / self.d1) + self.m1 * _smoothstep((x - (T - self.d2)) / self.d2)
                    + self.c * 30 * tau ** 2 * (1 - tau) ** 2)
        return out


@dataclass
class CapSpec:
    """Planar isotopy frames, height profile and parameters of one cap."""

    t: np.ndarray
    frames: list
    phi: np.ndarray
    sigma: float
    eps: float
    delta: float
    center: np.ndarray
    d0: float
    properties: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


def _ray_anchor(pts, center, direction):
    """Arclength fraction where the ray ``center + s * direction`` leaves the polyline."""
    closed = np.vstack([pts, pts[:1]])
    seg = np.diff(closed, axis=0)
    lens = np.linalg.norm(seg, axis=1)
    cum = np.concatenate([[0], np.cumsum(lens)])
    d = direction / np.linalg.norm(direction)
    best, best_s = None, -1.0
    for k in range(len(pts)):
        a, e = closed[k] - center, seg[k]
        M = np.array([[d[0], -e[0]], [d[1], -e[1]]])
        det = np.linalg.det(M)
        if abs(det) < 1e-15:
            continue
        s, w = np.linalg.solve(M, a)
        if s >= 0 and -1e-12 <= w <= 1 + 1e-12 and s > best_s:
            best_s, best = s, (cum[k] + w * lens[k]) / cum[-1]
    if best is None:
        # not star-shaped about the centre: take the closest vertex direction
        ang = np.arctan2(*(pts - center).T[::-1]) - np.arctan2(d[1], d[0])
        k = int(np.argmin(np.abs(np.angle(np.exp(1j * ang)))))
        best = cum[k] / cum[-1]
    return float(best)


def _arclength_fractions(pts):
    closed = np.vstack([pts, pts[:1]])
    lens = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    return np.concatenate([[0], np.cumsum(lens)[:-1]]) / lens.sum()


def _min_enclosing_circle(pts):
    """Welzl-style minimal enclosing circle (iterative, randomised order fixed by seed)."""
    P = np.asarray(pts, dtype=float)[np.random.default_rng(0).permutation(len(pts))]

    def circ2(a, b):
        c = 0.5 * (a + b)
        return c, np.linalg.norm(a - c)

    def circ3(a, b, c):
        ax, ay = a
        bx, by = b
        cx, cy = c
        d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
        if abs(d) < 1e-300:
            pts3 = [a, b, c]
            best = max(((pts3[i], pts3[j]) for i in range(3) for j in range(i + 1, 3)),
                       key=lambda q: np.linalg.norm(q[0] - q[1]))
            return circ2(*best)
        ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d
        uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d
        o = np.array([ux, uy])
        return o, np.linalg.norm(a - o)

    inside = lambda c, r, p: np.linalg.norm(p - c) <= r * (1 + 1e-12) + 1e-15
    c, r = P[0], 0.0
    for i in range(1, len(P)):
        if inside(c, r, P[i]):
            continue
        c, r = P[i], 0.0
        for j in range(i):
            if inside(c, r, P[j]):
                continue
            c, r = circ2(P[i], P[j])
            for k in range(j):
                if not inside(c, r, P[k]):
                    c, r = circ3(P[i], P[j], P[k])
    return c, r


def build_cap(alpha0, sigma, n_flow=24, n_shrink=16, n_sphere=8, n_collar=3, collar=None,
              check=True, flow_kwargs=None):
    """Spherical cap over a planar boundary curve.

    The cap is a disc mesh whose ring at parameter ``t`` in [0, 1] is the
    planar curve ``beta_t`` lifted to height ``phi(t)``:

    * ``t`` in ``[0, eps]`` (``eps = sigma / 4``): the collar ``alpha_t``
      (by default ``alpha_t = alpha_0``);
    * then frames of the length-normalised curve shortening flow of
      ``alpha_0`` until it is round, blended into an exact circle about the
      centre ``p`` of the minimal enclosing circle;
    * then circles shrinking to radius ``delta`` and finally the spherical
      part with radius ``1 - t`` and height ``sqrt(sigma^2 - (1 - t)^2)``.

    Parameters
    ----------
    alpha0 : PlanarCurve or (N, 2) array
        Boundary curve; its vertices become ring 0 bit for bit.
    sigma : float
        Apex height.
    collar : callable, optional
        ``collar(t) -> (N, 2)`` giving ``alpha_t`` for ``t`` in ``[0, eps]``.

    Returns
    -------
    (CapSpec, TriMesh)
        Mesh vertices are ``(x, y, height)``; vertex 0..N-1 is ring 0 and the
        last vertex is the apex.  Faces are oriented with normal ``+z``.

    Raises
    ------
    PropertyViolation
        If a cap property fails after construction.
    """
    if sigma <= 0:
        raise InputError("sigma must be positive")
    raw = np.asarray(alpha0.points if isinstance(alpha0, PlanarCurve) else alpha0, dtype=float)
    PlanarCurve(raw)  # simplicity check
    if np.allclose(raw[0], raw[-1]):
        raw = raw[:-1]
    # ring 0 is the input in counter-clockwise order
    base = raw if signed_area(raw) > 0 else raw[::-1].copy()
    N = len(base)
    d0 = diameter(base)
    eps = sigma / 4

    center, _ = _min_enclosing_circle(base)
    fr0 = _arclength_fractions(base)
    anchor_dir = base[0] - center

    # planar isotopy: normalised flow, then blend to the exact circle
    flow_kwargs = dict(flow_kwargs or {})
    work = resample_uniform(base, max(N, 64))
    flow = curve_shortening_flow(PlanarCurve(work), normalize=True, **flow_kwargs)
    idx = np.unique(np.linspace(0, len(flow.frames) - 1, n_flow).round().astype(int))
    flow_frames = [flow.frames[i] for i in idx]
    # translate so that the flow ends centred at p
    drift = center - np.mean(flow_frames[-1], axis=0)
    R_round = flow.lengths[-1] / (2 * np.pi)
    delta = min(0.5 * sigma, 0.5 * R_round, 0.25)

    def on_ring(pts):
        s0 = _ray_anchor(pts, center, anchor_dir)
        return resample_uniform(pts, fractions=fr0, start=s0)

    def circle_ring(radius):
        a0 = np.arctan2(anchor_dir[1], anchor_dir[0])
        ang = a0 + 2 * np.pi * fr0
        return center + radius * np.stack([np.cos(ang), np.sin(ang)], 1)

    # parameter layout on [eps, 1 - delta]
    t_flow_end = eps + 0.45 * (1 - delta - eps)
    t_blend_end = eps + 0.55 * (1 - delta - eps)
    rings, ts = [], []
    # collar
    for k, t in enumerate(np.linspace(0, eps, n_collar + 1)):
        pts = base.copy() if collar is None or k == 0 else np.asarray(collar(t), float)
        rings.append(pts)
        ts.append(t)
    # flow frames (first frame is alpha_0 itself, already used at t = eps)
    nf = len(flow_frames)
    for k in range(1, nf):
        w = k / (nf - 1)
        t = eps + w * (t_flow_end - eps)
        f = flow_frames[k] + w * drift
        rings.append(on_ring(f))
        ts.append(t)
    final = on_ring(flow_frames[-1] + drift)
    circ = circle_ring(R_round)
    for w in np.linspace(0, 1, 5)[1:]:
        t = t_flow_end + w * (t_blend_end - t_flow_end)
        s = w * w * (3 - 2 * w)
        rings.append((1 - s) * final + s * circ)
        ts.append(t)
    for w in np.linspace(0, 1, n_shrink + 1)[1:]:
        t = t_blend_end + w * (1 - delta - t_blend_end)
        rings.append(circle_ring(R_round + (delta - R_round) * w))
        ts.append(t)
    for t in np.linspace(1 - delta, 1, n_sphere + 1)[1:-1]:
        rings.append(circle_ring(1 - t))
        ts.append(t)
    ts = np.array(ts)
    prof = HeightProfile(sigma, eps, delta)
    phi = prof(ts)

    verts = [np.column_stack([r, np.full(N, h)]) for r, h in zip(rings, phi)]
    verts.append(np.array([[center[0], center[1], sigma]]))
    V = np.concatenate(verts)
    apex = len(V) - 1
    F = []
    for k in range(len(rings) - 1):
        a, b = k * N, (k + 1) * N
        for j in range(N):
            j1 = (j + 1) % N
            F.append([a + j, a + j1, b + j1])
            F.append([a + j, b + j1, b + j])
    last = (len(rings) - 1) * N
    for j in range(N):
        F.append([last + j, last + (j + 1) % N, apex])
    mesh = TriMesh(V, np.array(F))
    spec = CapSpec(ts, rings, phi, float(sigma), float(eps), float(delta), center, d0)
    spec.diagnostics["profile"] = prof
    spec.diagnostics["flow_steps"] = flow.steps
    spec.diagnostics["flow_ratio"] = float(flow.ratios[-1])
    if check:
        check_cap(spec, mesh, base, raise_on_fail=True)
    return spec, mesh


def check_cap(spec: CapSpec, mesh: TriMesh, alpha0, raise_on_fail=False):
    """Evaluate the four cap properties on a constructed cap mesh."""
    N = len(alpha0)
    V = mesh.vertices
    apex = len(V) - 1
    props, diag = {}, spec.diagnostics
    # (a) collar: every ring with t <= eps equals alpha_0 bitwise
    collar_rings = [k for k, t in enumerate(spec.t) if t <= spec.eps]
    props["a_collar"] = bool(np.array_equal(V[:N, :2], alpha0)) and all(
        np.array_equal(V[k * N:(k + 1) * N, :2], spec.frames[k]) for k in collar_rings)
    # (b) 0 <= u <= sigma, u(apex) = sigma, apex the unique critical vertex
    u = V[:, 2]
    nb = mesh.vertex_neighbours()
    higher = np.array([any(u[w] > u[i] for w in nb[i]) for i in range(len(V))])
    crit = np.nonzero(~higher)[0]
    props["b_height"] = bool(u.min() >= 0 and u.max() <= spec.sigma and u[apex] == spec.sigma
                             and list(crit) == [apex])
    # (c) diameter bound with mesh slack
    h = float(mesh.edge_lengths().max())
    dC = diameter_3d(V)
    diag.update(d_C=dC, h=h, bound=2 * spec.sigma + spec.d0 + 2 * h)
    props["c_diameter"] = bool(dC <= 2 * spec.sigma + spec.d0 + 2 * h)
    # (d) positive discrete Gauss curvature at the apex
    K_apex = float(mesh.angle_defects()[apex])
    diag["K_apex_defect"] = K_apex
    props["d_apex_K"] = K_apex > 0
    spec.properties = props
    if raise_on_fail:
        bad = [k for k, ok in props.items() if not ok]
        if bad:
            raise PropertyViolation(bad[0], f"cap property {bad[0]} failed ({diag})")
    return props


def diameter_3d(P):
    from scipy.spatial import ConvexHull
    from scipy.spatial.distance import pdist
    P = np.asarray(P, dtype=float)
    try:
        P = P[ConvexHull(P).vertices]
    except Exception:  # flat point sets
        pass
    return float(pdist(P).max())


# -- capping ends ------------------------------------------------------------

@dataclass
class Pole:
    position: np.ndarray
    normal_sign: int          # +1 if the outward normal at the pole is +v
    vertex: int
    loop: int


@dataclass
class CappedMesh:
    mesh: TriMesh
    poles: list
    sigmas: list
    caps: list
    seam_dihedral: float


def _loop_depths(planars):
    depth = []
    for i, c in enumerate(planars):
        d = 0
        for j, o in enumerate(planars):
            if i != j and o.contains(c.points[:1])[0]:
                d += 1
        depth.append(d)
    return depth


def _caps_overlap(cap_meshes, v, cell):
    """True if two caps cross along a vertical ray (checked on a grid of rays)."""
    e1, e2 = plane_basis(v)
    allv = np.concatenate([m.vertices for m in cap_meshes])
    uv_all = np.stack([allv @ e1, allv @ e2], 1)
    origin = uv_all.min(0) - cell
    shape = tuple((np.ceil((uv_all.max(0) + cell - origin) / cell)).astype(int))
    hits = []
    for m in cap_meshes:
        uv = np.stack([m.vertices @ e1, m.vertices @ e2], 1)[m.faces]
        val = (m.vertices @ v)[m.faces]
        bins, vals, _ = kernels.grid_hits(uv, val, origin, cell, shape)
        nb = shape[0] * shape[1]
        lo, hi, cnt = kernels.binned_minmax(bins, vals, nb)
        hits.append((lo, hi, cnt))
    for i in range(len(hits)):
        for j in range(i + 1, len(hits)):
            lo_i, hi_i, ci = hits[i]
            lo_j, hi_j, cj = hits[j]
            both = (ci > 0) & (cj > 0)
            if not both.any():
                continue
            # nested caps are vertically ordered: one must lie strictly above the other on every shared ray
            above = np.all(lo_i[both] > hi_j[both])
            below = np.all(hi_i[both] < lo_j[both])
            if not (above or below):
                return True
    return False


def cap_ends(mesh: TriMesh, v=(0.0, 0.0, 1.0), sigma=0.1, max_reductions=8, **cap_kwargs) -> CappedMesh:
    """Glue spherical caps onto all boundary loops of ``mesh``.

    Loops must be planar and orthogonal to ``v``; a loop above the origin
    (``<p, v> > 0``) gets an upper cap, one below a lower cap.  For nested
    loops (as on a truncated catenoid) the outer caps are raised by a factor
    of 3 per nesting level.  If caps still cross, ``sigma`` is halved up to
    ``max_reductions`` times.

    Returns
    -------
    CappedMesh
        Closed mesh with outward orientation (positive volume) and one pole
        per cap.  The pole sign is read off the combinatorial orientation of
        the apex fan, so it is exactly ``+1`` or ``-1``.

    Raises
    ------
    NonPlanarBoundary, CapOverlap
    """
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    loops = mesh.boundary_loops()
    if not loops:
        raise InputError("mesh has no boundary loops to cap")
    e1, e2 = plane_basis(v)
    heights, planars, sides, ccw_loops = [], [], [], []
    for lp in loops:
        P = mesh.vertices[lp]
        if signed_area(np.stack([P @ e1, P @ e2], 1)) < 0:
            lp = lp[::-1]
            P = P[::-1]
        hts = P @ v
        L = float(hts.mean())
        if np.max(np.abs(hts - L)) > 1e-6 * max(1.0, abs(L)):
            raise NonPlanarBoundary(f"boundary loop deviates {np.ptp(hts):.3e} from a plane orthogonal to v")
        ccw_loops.append(lp)
        heights.append(L)
        planars.append(PlanarCurve(np.stack([P @ e1, P @ e2], 1)))
        sides.append(1.0 if L > 0 else -1.0)
    loops = ccw_loops
    depth = _loop_depths(planars)
    sig = float(sigma)
    for attempt in range(max_reductions + 1):
        caps, cap_meshes, sigmas = [], [], []
        for li, lp in enumerate(loops):
            same = [depth[k] for k in range(len(loops)) if sides[k] == sides[li]]
            s_loop = sig * 3.0 ** (max(same) - depth[li])
            P = mesh.vertices[lp]
            uv = np.stack([P @ e1, P @ e2], 1)
            spec, cm = build_cap(uv, s_loop, **cap_kwargs)
            W = cm.vertices
            world = (np.outer(W[:, 0], e1) + np.outer(W[:, 1], e2)
                     + np.outer(heights[li] + sides[li] * W[:, 2], v))
            world[:len(lp)] = P   # exact shared vertices
            faces = cm.faces if sides[li] > 0 else cm.faces[:, ::-1]
            caps.append(spec)
            cap_meshes.append(TriMesh(world, faces))
            sigmas.append(s_loop)
        ups = [m for m, s in zip(cap_meshes, sides) if s > 0]
        downs = [m for m, s in zip(cap_meshes, sides) if s < 0]
        cell = 0.5 * float(np.median(mesh.edge_lengths()))
        if not any(len(g) > 1 and _caps_overlap(g, v * (1 if g is ups else -1), cell) for g in (ups, downs)):
            break
        sig *= 0.5
    else:
        raise CapOverlap(f"caps still overlap after {max_reductions} reductions of sigma")

    # glue: reuse the loop vertex indices for ring 0
    V = [mesh.vertices]
    F = [mesh.faces]
    nv = mesh.n_vertices
    apex_ids, apex_fans = [], []
    directed = {(int(a), int(b)) for a, b in mesh.boundary_edges()}
    for li, (lp, cm) in enumerate(zip(loops, cap_meshes)):
        n0 = len(lp)
        remap = np.concatenate([lp, nv + np.arange(cm.n_vertices - n0)])
        faces = remap[cm.faces]
        # the cap must traverse the loop opposite to the mesh
        a, b = faces[0, 0], faces[0, 1]
        if (int(a), int(b)) in directed:
            faces = faces[:, ::-1]
        V.append(cm.vertices[n0:])
        F.append(faces)
        apex = nv + cm.n_vertices - n0 - 1
        apex_ids.append(apex)
        apex_fans.append(faces[-n0:])
        nv += cm.n_vertices - n0
    closed = TriMesh(np.concatenate(V), np.concatenate(F))
    flip = closed.volume() < 0
    if flip:
        closed = closed.flipped()
    poles = []
    for li, (apex, fan) in enumerate(zip(apex_ids, apex_fans)):
        if flip:
            fan = fan[:, ::-1]
        P = closed.vertices
        n = np.cross(P[fan[:, 1]] - P[fan[:, 0]], P[fan[:, 2]] - P[fan[:, 0]]).sum(0)
        poles.append(Pole(P[apex].copy(), int(np.sign(n @ v)), int(apex), li))
    return CappedMesh(closed, poles, sigmas, caps, seam_dihedral(closed, loops))


def seam_dihedral(mesh: TriMesh, loops):
    """Largest normal jump (radians) across edges of the glued loops."""
    fn = mesh.face_normals()
    d = mesh.directed_edges()
    Fn = mesh.n_faces
    face_of = np.tile(np.arange(Fn), 3)
    edge_face = {}
    for (a, b), f in zip(map(tuple, d), face_of):
        edge_face[(a, b)] = f
    worst = 0.0
    for lp in loops:
        for a, b in zip(lp, np.roll(lp, -1)):
            f1, f2 = edge_face.get((int(a), int(b))), edge_face.get((int(b), int(a)))
            if f1 is None or f2 is None:
                continue
            worst = max(worst, float(np.arccos(np.clip(fn[f1] @ fn[f2], -1, 1))))
    return worst


# -- degree of the Gauss map -------------------------------------------------

@dataclass
class DegreeResult:
    integral: int
    integral_raw: float
    pole_degree: int | None
    n_poles: int
    n_plus: int
    mismatch: bool
    chi: int
    genus: int
    defect_error: float


def gauss_degree(mesh: TriMesh, poles=None, v=(0.0, 0.0, 1.0)) -> DegreeResult:
    """Degree of the Gauss map of a closed oriented mesh, two ways.

    The integral method sums the angle defects (``2 pi chi`` exactly) and
    divides by ``4 pi``.  The pole method counts caps whose outward apex
    normal is ``+v``, weighted by the sign of the discrete Gauss curvature
    there.
    """
    if not mesh.is_closed:
        raise OpenMesh("the Gauss map degree needs a closed mesh")
    chi, b, g = euler_characteristic(mesh)
    defects = mesh.angle_defects()
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[mesh.faces.ravel()] = True
    S = float(defects[used].sum())
    raw = S / (4 * np.pi)
    integral = int(round(raw))
    pole_deg, n_plus = None, 0
    if poles:
        pole_deg = 0
        for p in poles:
            if p.normal_sign > 0:
                n_plus += 1
                pole_deg += int(np.sign(defects[p.vertex]))
    mismatch = pole_deg is not None and pole_deg != integral
    return DegreeResult(integral, raw, pole_deg, len(poles or []), n_plus, mismatch, chi, g,
                        abs(S - 2 * np.pi * chi))
