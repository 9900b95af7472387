"""Discrete moving-plane (Alexandrov reflection) sweeps on triangle meshes.

A sweep direction ``w`` orthogonal to ``v`` defines the planes
``Pi(t) = {<p, w> = t}``.  Fibres of the projection onto ``Pi`` are
discretised by square bins and sampled with rays parallel to ``w``; each
ray hit carries the sweep coordinate ``x = <p, w>``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import EmptySweep, InputError, NoLevelSet
from .mesh import TriMesh
from .topo import clip_mesh, extract_level_curve, plane_basis

__all__ = ["SweepConfig", "SweepResult", "RelationResult", "SweepSets", "rhs_relation",
           "sweep_sets", "is_graph_over", "alexandrov_sweep", "default_config", "direction",
           "reflection_distance", "far_field_gap", "FarFieldGap", "perturb_mesh"]

NORMAL_SLACK = 1e-6


def direction(theta, v=(0.0, 0.0, 1.0)):
    """Unit sweep direction at angle ``theta`` in the plane orthogonal to ``v``.

    For ``v = e3`` this is ``(cos theta, sin theta, 0)``.
    """
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    if np.allclose(v, [0, 0, 1]):
        e1, e2 = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    else:
        e1, e2 = plane_basis(v)
    return np.cos(theta) * e1 + np.sin(theta) * e2


@dataclass(frozen=True)
class SweepConfig:
    """Sweep parameters.

    ``direction`` is the unit sweep normal ``w`` (orthogonal to ``v``),
    ``t_grid`` the strictly decreasing plane offsets, ``bin_size`` the
    fibre bin width on ``Pi`` and ``tolerance`` the dominance slack.
    """

    direction: np.ndarray
    t_grid: np.ndarray
    bin_size: float
    tolerance: float
    v: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        w = np.asarray(self.direction, dtype=float)
        v = np.asarray(self.v, dtype=float)
        v = v / np.linalg.norm(v)
        nw = np.linalg.norm(w)
        if nw == 0:
            raise InputError("sweep direction must be non-zero")
        w = w / nw
        if abs(w @ v) > 1e-12:
            raise InputError(f"sweep direction not orthogonal to v (<w,v> = {w @ v:.3e})")
        t = np.asarray(self.t_grid, dtype=float).ravel()
        if len(t) > 1 and not np.all(np.diff(t) < 0):
            raise InputError("t_grid must be strictly decreasing")
        if not self.bin_size > 0:
            raise InputError("bin_size must be positive")
        if not self.tolerance >= 0:
            raise InputError("tolerance must be non-negative")
        object.__setattr__(self, "direction", w)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t_grid", t)

    def plane_axes(self):
        """Orthonormal coordinates ``(v x w, v)`` on ``Pi``."""
        return np.cross(self.v, self.direction), self.v


def default_config(mesh: TriMesh, w, v=(0.0, 0.0, 1.0), bin_size=None, tolerance=None,
                   t_grid=None) -> SweepConfig:
    """Config with bins of twice the median edge length and slack of one bin.

    The default ``t_grid`` runs from the largest to the smallest sweep
    coordinate in steps of at most one bin and contains ``t = 0`` when it
    lies in that range.
    """
    if bin_size is None:
        bin_size = 2.0 * float(np.median(mesh.edge_lengths()))
    if tolerance is None:
        tolerance = bin_size
    if t_grid is None:
        w = np.asarray(w, float) / np.linalg.norm(w)
        x = mesh.vertices[mesh.used_vertices()] @ w
        hi, lo = float(x.max()), float(x.min())
        if lo <= 0.0 <= hi:
            up = np.arange(0.0, hi + 1e-12, bin_size)
            down = -np.arange(bin_size, -lo + 1e-12, bin_size)
            t_grid = np.concatenate([up[::-1], down])
        else:
            n = max(2, int(np.ceil((hi - lo) / bin_size)) + 1)
            t_grid = np.linspace(hi, lo, n)
    return SweepConfig(w, t_grid, float(bin_size), float(tolerance), v)


# -- the order relation between point sets -------------------------------------

@dataclass
class RelationResult:
    holds: bool
    witness: tuple | None       # (bin index a, b) of the first failing bin
    vacuous: bool
    n_shared: int
    margin: float               # min over shared bins of min(A) - max(B)


def _bin_grid(uv, cell):
    origin = uv.min(axis=0) - 0.5 * cell
    shape = np.floor((uv.max(axis=0) - origin) / cell).astype(int) + 1
    return origin, shape


def rhs_relation(A, B, config: SweepConfig) -> RelationResult:
    """Is the point set ``A`` on the right hand side of ``B`` along ``w``?

    Per fibre bin on ``Pi`` populated by both sets, the smallest sweep
    coordinate of ``A`` must be at least the largest of ``B`` minus the
    tolerance.  With no shared bin the relation holds vacuously and
    ``vacuous`` is set.
    """
    A = np.atleast_2d(np.asarray(A, float))
    B = np.atleast_2d(np.asarray(B, float))
    ea, eb = config.plane_axes()
    w = config.direction
    if len(A) == 0 or len(B) == 0:
        return RelationResult(True, None, True, 0, np.inf)
    uvA = np.stack([A @ ea, A @ eb], 1)
    uvB = np.stack([B @ ea, B @ eb], 1)
    origin, shape = _bin_grid(np.vstack([uvA, uvB]), config.bin_size)
    nb = int(shape[0] * shape[1])

    def flat(uv):
        ij = np.floor((uv - origin) / config.bin_size).astype(np.int64)
        return ij[:, 0] * shape[1] + ij[:, 1]

    loA, _, cA = kernels.binned_minmax(flat(uvA), A @ w, nb)
    _, hiB, cB = kernels.binned_minmax(flat(uvB), B @ w, nb)
    shared = np.nonzero((cA > 0) & (cB > 0))[0]
    if len(shared) == 0:
        return RelationResult(True, None, True, 0, np.inf)
    gap = loA[shared] - hiB[shared]
    bad = np.nonzero(gap < -config.tolerance)[0]
    wit = None
    if len(bad):
        b = int(shared[bad[0]])
        wit = (b // int(shape[1]), b % int(shape[1]))
    return RelationResult(len(bad) == 0, wit, False, len(shared), float(gap.min()))


# -- sweep sets ----------------------------------------------------------------

@dataclass
class SweepSets:
    plus: TriMesh | None          # M_+(t), part with <p, w> >= t
    minus: TriMesh | None         # M_-(t)
    plus_reflected: TriMesh | None
    section: list                 # level curves <p, w> = t


def reflect(points, w, t):
    """Reflection ``p -> p + 2 (t - <p, w>) w`` through ``Pi(t)``."""
    w = np.asarray(w, float) / np.linalg.norm(w)
    P = np.asarray(points, float)
    return P + 2.0 * (t - P @ w)[..., None] * w


def _empty_or(m: TriMesh):
    return m if m.n_faces else None


def sweep_sets(mesh: TriMesh, w, t) -> SweepSets:
    """Split ``mesh`` at ``Pi(t)`` (crossing triangles are cut).

    Empty halves are ``None``; ``section`` is empty when ``Pi(t)`` misses the
    mesh.  The reflected upper half keeps its vertex order, so its
    orientation is reversed relative to ``mesh``.
    """
    w = np.asarray(w, float) / np.linalg.norm(w)
    x = mesh.vertices[mesh.used_vertices()] @ w
    plus = _empty_or(clip_mesh(mesh, w, t, "above")) if x.max() >= t else None
    minus = _empty_or(clip_mesh(mesh, w, t, "below")) if x.min() <= t else None
    refl = None
    if plus is not None:
        refl = TriMesh(reflect(plus.vertices, w, t), plus.faces.copy())
    try:
        section = extract_level_curve(mesh, t, v=w)
    except NoLevelSet:
        section = []
    return SweepSets(plus, minus, refl, section)


# -- fibre sampling --------------------------------------------------------------

@dataclass
class _Fibres:
    bins: np.ndarray
    x: np.ndarray
    tris: np.ndarray
    origin: np.ndarray
    shape: tuple
    cell: float


def _fibres(mesh: TriMesh, w, ea, eb, cell) -> _Fibres:
    V = mesh.vertices[mesh.faces]                       # (T, 3, 3)
    uv = np.stack([V @ ea, V @ eb], axis=-1)           # (T, 3, 2)
    val = V @ w
    flat_uv = uv.reshape(-1, 2)
    origin, shape = _bin_grid(flat_uv, cell)
    bins, x, tris = kernels.grid_hits(uv, val, origin, cell, shape)
    return _Fibres(bins, x, tris, origin, (int(shape[0]), int(shape[1])), float(cell))


def _bin_center(fib: _Fibres, b, ea, eb):
    a, c = divmod(int(b), fib.shape[1])
    uv = fib.origin + (np.array([a, c]) + 0.5) * fib.cell
    return uv[0] * ea + uv[1] * eb


def _slack_faces(mesh: TriMesh, w):
    """Faces whose normal is orthogonal to ``w`` within the slack.

    Slivers (area below 1e-12 of the squared median edge, e.g. cut by
    :func:`clip_mesh` at a vertex) carry no reliable normal and are skipped.
    """
    area = mesh.face_areas()
    scale = float(np.median(mesh.edge_lengths())) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        n = mesh.face_normals()
    return (area > 1e-12 * scale) & (np.abs(n @ w) < NORMAL_SLACK)


def _normal_threshold(mesh: TriMesh, w):
    """Largest ``min_x`` over triangles whose normal is orthogonal to ``w``.

    A triangle lying entirely in ``x > t`` with such a normal spoils the graph
    property of ``M_+(t)``; the upper set is clean for ``t`` at or above the
    returned value (``-inf`` if no triangle qualifies).
    """
    bad = _slack_faces(mesh, w)
    if not bad.any():
        return -np.inf
    xmin = (mesh.vertices[mesh.faces] @ w).min(axis=1)
    scale = max(1.0, float(np.abs(xmin).max()))
    return float(xmin[bad].max()) - 1e-9 * scale


def is_graph_over(subset: TriMesh, w, bin_size=None, tolerance=None, v=None):
    """Is the triangle set a graph over the plane orthogonal to ``w``?

    True iff along every binned ray parallel to ``w`` the hits agree within
    ``tolerance`` and no triangle normal is orthogonal to ``w`` within
    1e-6.  Returns ``(ok, witness_point)``.
    """
    w = np.asarray(w, float) / np.linalg.norm(w)
    if subset is None or subset.n_faces == 0:
        return True, None
    if bin_size is None:
        bin_size = 2.0 * float(np.median(subset.edge_lengths()))
    if tolerance is None:
        tolerance = bin_size
    if v is None:
        ea, eb = plane_basis(w)
    else:
        v = np.asarray(v, float)
        ea, eb = np.cross(v, w), v
    bad = np.nonzero(_slack_faces(subset, w))[0]
    if len(bad):
        return False, subset.vertices[subset.faces[bad[0]]].mean(axis=0)
    fib = _fibres(subset, w, ea, eb, bin_size)
    if len(fib.bins) == 0:
        return True, None
    nb = fib.shape[0] * fib.shape[1]
    lo, hi, _ = kernels.binned_minmax(fib.bins, fib.x, nb)
    spread = np.where(np.isfinite(lo), hi - lo, 0.0)
    over = np.nonzero(spread > tolerance)[0]
    if len(over):
        return False, _bin_center(fib, over[0], ea, eb)
    return True, None


# -- reflection distance -----------------------------------------------------

def _surface_samples(mesh: TriMesh, spacing):
    """Vertices plus barycentric samples on every triangle at about ``spacing``."""
    V = mesh.vertices[mesh.faces]
    out = [mesh.vertices[mesh.used_vertices()]]
    L = np.linalg.norm(V - np.roll(V, 1, axis=1), axis=2).max(axis=1)
    k_all = np.clip(np.ceil(L / spacing).astype(int), 1, 16)
    for k in np.unique(k_all):
        sel = V[k_all == k]
        i, j = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
        m = (i + j) <= k
        a, b = i[m] / k, j[m] / k
        bary = np.stack([1 - a - b, a, b], 1)           # (S, 3)
        out.append(np.einsum("sk,tkd->tsd", bary, sel).reshape(-1, 3))
    return np.vstack(out)


def reflection_distance(A: TriMesh | None, B: TriMesh | None, spacing):
    """Two-sided Hausdorff distance between triangle sets, sampled at ``spacing``."""
    if A is None or B is None:
        return np.inf if (A is None) != (B is None) else 0.0
    pa, pb = _surface_samples(A, spacing), _surface_samples(B, spacing)
    d_ab = cKDTree(pb).query(pa)[0].max()
    d_ba = cKDTree(pa).query(pb)[0].max()
    return float(max(d_ab, d_ba))


# -- the sweep -------------------------------------------------------------------

@dataclass
class SweepResult:
    """Per-offset records of a moving-plane sweep.

    ``in_A[i]`` says whether ``t_grid[i]`` belongs to the set of offsets
    where ``M_+(t)`` is a graph over ``Pi`` and its reflection dominates
    ``M_-(t)``.  ``A_interval`` is the largest suffix ``[t*, inf)`` of the
    grid inside that set (``None`` if ``t_grid[0]`` already fails) and
    ``offset = t*``.
    """

    config: SweepConfig
    theta: float | None
    t: np.ndarray
    is_graph: np.ndarray
    dominance: np.ndarray
    margin: np.ndarray
    n_shared: np.ndarray
    graph_witness: list          # per t: 3d point of the first failing bin or None
    dom_witness: list
    A_interval: tuple | None     # (t*, inf)
    offset: float | None
    raw_is_suffix: bool          # the raw membership flags already form a suffix
    symmetric_at_zero: bool | None
    reflection_distance: float | None
    zero_witness: np.ndarray | None
    normal_separation: float | None   # min |<n, w>| over M_+(t*) triangles
    near_contacts: int           # shared bins with |margin| < bin_size at t*
    notes: list = field(default_factory=list)

    @property
    def in_A(self):
        return self.is_graph & self.dominance

    def to_json_dict(self):
        def f(x):
            if x is None:
                return None
            x = float(x)
            return x if np.isfinite(x) else ("inf" if x > 0 else "-inf")
        return {
            "theta": f(self.theta),
            "direction": [float(c) for c in self.config.direction],
            "bin_size": float(self.config.bin_size),
            "tolerance": float(self.config.tolerance),
            "n_t": int(len(self.t)),
            "A_interval": None if self.A_interval is None else [f(self.A_interval[0]), "inf"],
            "offset": f(self.offset),
            "raw_is_suffix": bool(self.raw_is_suffix),
            "symmetric_at_zero": None if self.symmetric_at_zero is None else bool(self.symmetric_at_zero),
            "reflection_distance": f(self.reflection_distance),
            "zero_witness": None if self.zero_witness is None else [float(c) for c in self.zero_witness],
            "normal_separation": f(self.normal_separation),
            "near_contacts": int(self.near_contacts),
            "notes": list(self.notes),
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,is_graph,dominance,margin,witness_x,witness_y,witness_z\n")
            for i, t in enumerate(self.t):
                wit = self.dom_witness[i] if self.dom_witness[i] is not None else self.graph_witness[i]
                wx = ("%.17g,%.17g,%.17g" % tuple(wit)) if wit is not None else ",,"
                fh.write("%.17g,%d,%d,%.17g,%s\n" % (t, self.is_graph[i], self.dominance[i],
                                                     self.margin[i], wx))


def _longest_suffix(flags):
    """Number of leading ``True`` entries (the grid is scanned from large t)."""
    bad = np.nonzero(~flags)[0]
    return int(bad[0]) if len(bad) else len(flags)


def alexandrov_sweep(mesh: TriMesh, theta=None, config: SweepConfig | None = None,
                     v=(0.0, 0.0, 1.0), zero_check=True) -> SweepResult:
    """Moving-plane sweep along ``w`` = ``direction(theta)`` (or ``config.direction``).

    Parameters
    ----------
    mesh : TriMesh
        Embedded surface; boundary loops should lie away from the swept range.
    theta : float, optional
        Sweep angle; ignored when ``config`` is given.
    config : SweepConfig, optional
        Defaults to :func:`default_config`.
    zero_check : bool
        Also evaluate the symmetry verdict at ``t = 0``: dominance along
        ``w`` and ``-w`` plus the two-sided reflection distance between
        ``M*_+(0)`` and ``M_-(0)``.

    Raises
    ------
    EmptySweep
        If no ray of the sweep hits the mesh or no plane of ``t_grid``
        meets it.
    """
    if config is None:
        if theta is None:
            raise InputError("give theta or config")
        config = default_config(mesh, direction(theta, v), v)
    w = config.direction
    ea, eb = config.plane_axes()
    cell, tol = config.bin_size, config.tolerance
    x_all = mesh.vertices[mesh.used_vertices()] @ w
    tg = config.t_grid
    if len(tg) == 0 or tg.min() > x_all.max() or tg.max() < x_all.min():
        raise EmptySweep("no plane of the sweep meets the mesh")
    fib = _fibres(mesh, w, ea, eb, cell)
    if len(fib.bins) == 0:
        raise EmptySweep("no sweep ray hits the mesh")
    nb = fib.shape[0] * fib.shape[1]
    g_ok, d_ok, g_wit, d_wit, margin, n_both = kernels.sweep_scan(fib.bins, fib.x, nb, tg, tol)
    g_ok = g_ok & (tg >= _normal_threshold(mesh, w))
    gw = [None if b < 0 else _bin_center(fib, b, ea, eb) + tg[i] * w for i, b in enumerate(g_wit)]
    dw = [None if b < 0 else _bin_center(fib, b, ea, eb) + tg[i] * w for i, b in enumerate(d_wit)]
    for i in range(len(tg)):
        if not g_ok[i] and gw[i] is None:
            gw[i] = tg[i] * w     # normal-slack violation; no binned witness
    flags = g_ok & d_ok
    k = _longest_suffix(flags)
    raw_suffix = bool(np.all(flags[:k]) and not np.any(flags[k:]))
    # structural invariant: the reported interval is a suffix of the grid
    assert np.all(flags[:k]), "reported interval is not a suffix"
    A_int = (float(tg[k - 1]), np.inf) if k > 0 else None
    offset = float(tg[k - 1]) if k > 0 else None
    notes = []
    if not raw_suffix:
        notes.append("membership flags are not monotone in t beyond the reported suffix")

    sep, near = None, 0
    if offset is not None:
        plus = mesh.faces[(mesh.vertices[mesh.faces] @ w).min(axis=1) >= offset]
        if len(plus):
            n = mesh.face_normals()[(mesh.vertices[mesh.faces] @ w).min(axis=1) >= offset]
            sep = float(np.abs(n @ w).min())
        near = _near_contacts(fib, nb, offset, cell)

    sym, dist, zwit = None, None, None
    if zero_check and x_all.min() < 0 < x_all.max():
        sym, dist, zwit = _zero_verdict(mesh, fib, nb, config, ea, eb)
    elif zero_check:
        notes.append("t = 0 outside the sweep range")
    return SweepResult(config, theta, tg, g_ok, d_ok, margin, n_both, gw, dw, A_int, offset,
                       raw_suffix, sym, dist, zwit, sep, near, notes)


def _near_contacts(fib, nb, t, cell):
    plus = fib.x >= t
    minus = fib.x <= t
    _, pmax, pc = kernels.binned_minmax(fib.bins[plus], fib.x[plus], nb)
    _, mmax, mc = kernels.binned_minmax(fib.bins[minus], fib.x[minus], nb)
    both = (pc > 0) & (mc > 0)
    gap = (2 * t - pmax[both]) - mmax[both]
    return int(np.sum(np.abs(gap) < cell))


def _zero_verdict(mesh, fib, nb, config, ea, eb):
    w, tol = config.direction, config.tolerance
    t0 = np.zeros(1)
    _, d_fw, _, wit_fw, _, _ = kernels.sweep_scan(fib.bins, fib.x, nb, t0, tol)
    _, d_bw, _, wit_bw, _, _ = kernels.sweep_scan(fib.bins, -fib.x, nb, t0, tol)
    wit = None
    if wit_fw[0] >= 0:
        wit = _bin_center(fib, wit_fw[0], ea, eb)
    elif wit_bw[0] >= 0:
        wit = _bin_center(fib, wit_bw[0], ea, eb)
    sets = sweep_sets(mesh, w, 0.0)
    spacing = 0.25 * float(np.median(mesh.edge_lengths()))
    dist = reflection_distance(sets.plus_reflected, sets.minus, spacing)
    return bool(d_fw[0] and d_bw[0]), dist, wit


# -- noise and far field ---------------------------------------------------------

def perturb_mesh(mesh: TriMesh, amplitude, seed=0, relative=False, v=(0.0, 0.0, 1.0)):
    """Add i.i.d. Gaussian noise of standard deviation ``amplitude`` to every vertex.

    With ``relative`` the amplitude is a fraction of the largest distance of
    a vertex from the axis through the origin along ``v``.
    """
    rng = np.random.default_rng(seed)
    scale = 1.0
    if relative:
        v = np.asarray(v, float) / np.linalg.norm(v)
        P = mesh.vertices
        scale = float(np.linalg.norm(P - np.outer(P @ v, v), axis=1).max())
    V = mesh.vertices + amplitude * scale * rng.standard_normal(mesh.vertices.shape)
    return TriMesh(V, mesh.faces.copy())


@dataclass
class FarFieldGap:
    t: np.ndarray
    lower_bound: np.ndarray     # min over the window of the gap lower bound at each t
    t2: float

    @property
    def positive(self):
        return bool(np.all(self.lower_bound > 0))


def far_field_gap(fit, t2, t_values=None, r_window=(10.0, 50.0), n=64):
    """Lower bound of ``g_t - g`` on the fitted far-field graph model.

    ``g(x) = a2 |x|^2 + a_log log|x| + c`` with remainder ``C/|x|`` where
    ``C = fit.remainder``; ``g_t`` is ``g`` at the reflected point
    ``(2t - x1, x2)``.  Points are taken from the annulus
    ``r_window`` restricted to ``x1 <= t2``, and the bound subtracts both
    remainders.  Offsets default to ``t in [2 t2, 4 t2]``.
    """
    if t_values is None:
        t_values = np.linspace(2 * t2, 4 * t2, 9)
    t_values = np.asarray(t_values, float)
    if np.any(t_values < 2 * t2):
        raise InputError("offsets must satisfy t >= 2 t2")
    r = np.linspace(r_window[0], r_window[1], n)
    phi = np.linspace(0, 2 * np.pi, 4 * n, endpoint=False)
    R, P = np.meshgrid(r, phi, indexing="ij")
    x1, x2 = (R * np.cos(P)).ravel(), (R * np.sin(P)).ravel()
    keep = x1 <= t2
    x1, x2 = x1[keep], x2[keep]

    def G(rho):
        return fit.a2 * rho ** 2 + fit.a_log * np.log(rho) + fit.const

    rho = np.hypot(x1, x2)
    C = abs(fit.remainder)
    out = []
    for t in t_values:
        rho_t = np.hypot(2 * t - x1, x2)
        out.append(float(np.min(G(rho_t) - G(rho) - C / rho_t - C / rho)))
    return FarFieldGap(t_values, np.array(out), float(t2))
