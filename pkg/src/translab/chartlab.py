"""Finite-difference differential geometry on structured parametric charts.

A chart is a map ``f: [a1, b1] x [a2, b2] -> R^3`` sampled on a tensor grid.
:func:`compute_fields` evaluates the metric, the scalar second fundamental
form and every derived quantity used by :mod:`translab.verify` with central
stencils of order 2 or 4.  Nodes whose stencils would leave the grid are set
to NaN instead of being filled with one-sided differences.

Conventions
-----------
``xi = normalize(f_1 x f_2)``, ``A_ij = -<f_ij, xi>``, ``H = g^ij A_ij``,
``K = det A / det g`` and ``u = <f, v>``.  A translator then satisfies
``H = -<v, xi>``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateChart, InputError, NonFiniteField

DEGENERACY_FLOOR = 1e-10
DET_FLOOR = 1e-14

_STENCILS = {
    # order: (first-derivative weights, second-derivative weights, divisor1, divisor2)
    2: (np.array([-1.0, 0.0, 1.0]), np.array([1.0, -2.0, 1.0]), 2.0, 1.0),
    4: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]), np.array([-1.0, 16.0, -30.0, 16.0, -1.0]), 12.0, 12.0),
}


@dataclass(frozen=True)
class ChartPatch:
    """Positions of a parametric surface on a rectangular grid.

    Attributes
    ----------
    u1, u2 : ndarray
        Uniform parameter samples along the two grid axes.
    positions : ndarray, shape (n1, n2, 3)
    v : ndarray, shape (3,)
        Unit translation direction.
    boundary_mask : ndarray of bool, shape (n1, n2)
        True on the outermost ring of grid nodes.
    """

    u1: np.ndarray
    u2: np.ndarray
    positions: np.ndarray
    v: np.ndarray
    boundary_mask: np.ndarray

    def __post_init__(self):
        if abs(np.linalg.norm(self.v) - 1.0) > 1e-12:
            raise InputError("translation direction v must be a unit vector")
        if self.positions.shape != (len(self.u1), len(self.u2), 3):
            raise InputError("positions must have shape (n1, n2, 3)")
        if not (self.h1 > 0 and self.h2 > 0):
            raise InputError("grid spacings must be positive")

    @property
    def shape(self):
        return self.positions.shape[:2]

    @property
    def h1(self) -> float:
        return float(self.u1[1] - self.u1[0])

    @property
    def h2(self) -> float:
        return float(self.u2[1] - self.u2[0])

    @property
    def height(self) -> np.ndarray:
        return self.positions @ self.v

    def flipped(self) -> "ChartPatch":
        """Same surface with the second parameter reversed (opposite orientation)."""
        return ChartPatch(self.u1, -self.u2[::-1], self.positions[:, ::-1].copy(), self.v,
                          self.boundary_mask[:, ::-1].copy())


def _boundary_ring(shape):
    mask = np.zeros(shape, dtype=bool)
    mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
    return mask


def _evaluate(evaluator, U1, U2):
    out = evaluator(U1, U2)
    if isinstance(out, (tuple, list)):
        out = np.stack([np.broadcast_to(np.asarray(c, dtype=float), U1.shape) for c in out], axis=-1)
    out = np.asarray(out, dtype=float)
    if out.shape == (3,) + U1.shape:
        out = np.moveaxis(out, 0, -1)
    if out.shape != U1.shape + (3,):
        raise InputError(f"evaluator returned shape {out.shape}, expected {U1.shape + (3,)}")
    return out


def build_chart_grid(evaluator: Callable, domain, resolution, v=(0.0, 0.0, 1.0)) -> ChartPatch:
    """Sample ``evaluator`` on a tensor grid over a closed rectangle.

    Parameters
    ----------
    evaluator : callable
        ``evaluator(U1, U2)`` with broadcast arrays, returning either an array
        of shape ``U1.shape + (3,)`` or a triple of coordinate arrays.
    domain : ((a1, b1), (a2, b2))
    resolution : (n1, n2)
        Node counts, each at least 8.
    v : array_like
        Unit translation direction.

    Raises
    ------
    DegenerateChart
        If the coordinate tangents at an interior node are (numerically)
        parallel.
    """
    (a1, b1), (a2, b2) = domain
    n1, n2 = (int(n) for n in resolution)
    if n1 < 8 or n2 < 8:
        raise InputError("resolution must be at least 8 in each direction")
    if not (b1 > a1 and b2 > a2):
        raise InputError("domain must have positive area")
    v = np.asarray(v, dtype=float)
    u1 = np.linspace(a1, b1, n1)
    u2 = np.linspace(a2, b2, n2)
    U1, U2 = np.meshgrid(u1, u2, indexing="ij")
    pos = _evaluate(evaluator, U1, U2)
    if not np.all(np.isfinite(pos)):
        raise NonFiniteField("evaluator produced non-finite positions")

    # one pass of central differences is enough to spot a collapsed direction
    t1 = (pos[2:, 1:-1] - pos[:-2, 1:-1]) / (2 * (u1[1] - u1[0]))
    t2 = (pos[1:-1, 2:] - pos[1:-1, :-2]) / (2 * (u2[1] - u2[0]))
    cross = np.linalg.norm(np.cross(t1, t2), axis=-1)
    if cross.size and cross.min() < DEGENERACY_FLOOR:
        i, j = np.unravel_index(np.argmin(cross), cross.shape)
        raise DegenerateChart(f"coordinate tangents are parallel at node ({i + 1}, {j + 1})")
    return ChartPatch(u1, u2, pos, v, _boundary_ring((n1, n2)))


# -- finite differences ----------------------------------------------------

def _shift(F, axis, k):
    """``F`` shifted so that entry i holds F[i + k]; NaN where undefined."""
    out = np.full_like(F, np.nan)
    n = F.shape[axis]
    src = [slice(None)] * F.ndim
    dst = [slice(None)] * F.ndim
    if k >= 0:
        src[axis], dst[axis] = slice(k, n), slice(0, n - k)
    else:
        src[axis], dst[axis] = slice(0, n + k), slice(-k, n)
    out[tuple(dst)] = F[tuple(src)]
    return out


def diff(F, axis, h, order=2, deriv=1):
    """Central finite difference of ``F`` along ``axis`` (NaN near the ends)."""
    w1, w2, d1, d2 = _STENCILS[order]
    w, d = (w1, d1 * h) if deriv == 1 else (w2, d2 * h * h)
    r = len(w) // 2
    out = np.zeros_like(F, dtype=float)
    for k, c in zip(range(-r, r + 1), w):
        if c != 0.0:
            out += c * _shift(F, axis, k)
    if deriv == 1:
        # keep the NaN frame even though the centre weight is zero
        out[_edge_index(F.ndim, axis, r, F.shape[axis])] = np.nan
    return out / d


def _edge_index(ndim, axis, r, n):
    idx = [slice(None)] * ndim
    keep = np.zeros(n, dtype=bool)
    keep[:r] = keep[n - r:] = True
    idx[axis] = keep
    return tuple(idx)


def interior_mask(shape, depth):
    """True on nodes at least ``depth`` nodes away from the grid boundary."""
    m = np.zeros(shape, dtype=bool)
    n1, n2 = shape
    if n1 > 2 * depth and n2 > 2 * depth:
        m[depth:n1 - depth, depth:n2 - depth] = True
    return m


# -- tensor helpers --------------------------------------------------------

def inverse2(g):
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    inv = np.empty_like(g)
    inv[..., 0, 0] = g[..., 1, 1] / det
    inv[..., 1, 1] = g[..., 0, 0] / det
    inv[..., 0, 1] = inv[..., 1, 0] = -g[..., 0, 1] / det
    return inv, det


def inner(ginv, a, b):
    """``g^ij a_i b_j`` for covariant vectors."""
    return np.einsum("...ij,...i,...j->...", ginv, a, b)


def norm2_2tensor(ginv, T):
    return np.einsum("...ia,...jb,...ij,...ab->...", ginv, ginv, T, T)


def norm2_3tensor(ginv, T):
    return np.einsum("...ia,...jb,...kc,...ijk,...abc->...", ginv, ginv, ginv, T, T)


@dataclass(frozen=True)
class GeometryFields:
    """Per-node geometric quantities of a chart.

    Arrays are indexed ``[i, j, ...]`` by grid node.  Lower tensor indices are
    covariant with respect to the chart coordinates; ``grad_*`` arrays hold
    contravariant components.  Entries outside :attr:`populated` are NaN.
    """

    patch: ChartPatch
    fd_order: int
    radius: int
    populated: np.ndarray
    tangents: np.ndarray          # (n1, n2, 2, 3)
    g: np.ndarray
    ginv: np.ndarray
    det_g: np.ndarray
    christoffel: np.ndarray       # [..., k, i, j] = Gamma^k_ij
    xi: np.ndarray
    A: np.ndarray
    H: np.ndarray
    K: np.ndarray
    u: np.ndarray
    du: np.ndarray
    grad_u: np.ndarray
    grad_u_sq: np.ndarray
    hess_u: np.ndarray
    dH: np.ndarray
    grad_H_sq: np.ndarray
    nabla_A: np.ndarray           # [..., i, j, k] = (nabla_i A)_jk
    nabla_A_sq: np.ndarray
    A_sq: np.ndarray
    lap_H: np.ndarray
    lap_u: np.ndarray
    lap_A_sq: np.ndarray
    v_dot_xi: np.ndarray
    extras: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.patch.shape

    def gradient(self, s):
        """Covariant components ``(d_1 s, d_2 s)`` of a scalar field."""
        p = self.patch
        return np.stack([diff(s, 0, p.h1, self.fd_order), diff(s, 1, p.h2, self.fd_order)], axis=-1)

    def raise_index(self, w):
        return np.einsum("...ij,...j->...i", self.ginv, w)

    def inner(self, a, b):
        return inner(self.ginv, a, b)

    def to_ambient(self, w_up):
        """Ambient 3-vector ``w^i f_i`` of a contravariant tangent field."""
        return np.einsum("...i,...ik->...k", w_up, self.tangents)

    def divergence(self, w_up):
        """Covariant divergence ``(1/sqrt g) d_i (sqrt g w^i)``."""
        p = self.patch
        sg = np.sqrt(self.det_g)
        d1 = diff(sg * w_up[..., 0], 0, p.h1, self.fd_order)
        d2 = diff(sg * w_up[..., 1], 1, p.h2, self.fd_order)
        return (d1 + d2) / sg

    def laplacian(self, s):
        return laplace_beltrami(self, s)

    def masked(self, s, depth=None):
        """Copy of ``s`` with NaN outside an interior region of given depth."""
        out = np.array(s, dtype=float, copy=True)
        m = self.populated if depth is None else interior_mask(self.shape, depth)
        out[~m] = np.nan
        return out


def _second_derivs(F, p, order):
    f11 = diff(F, 0, p.h1, order, deriv=2)
    f22 = diff(F, 1, p.h2, order, deriv=2)
    f12 = diff(diff(F, 1, p.h2, order), 0, p.h1, order)
    return f11, f12, f22


def compute_fields(patch: ChartPatch, fd_order: int = 2, flip: bool = False) -> GeometryFields:
    """Evaluate all geometric fields of ``patch`` by central differences.

    Parameters
    ----------
    patch : ChartPatch
    fd_order : {2, 4}
        Formal accuracy of the stencils.
    flip : bool
        Use ``-xi`` instead of the chart orientation.  Every orientation
        dependent field (``A``, ``H``, ``<v, xi>``, ...) changes sign.

    Returns
    -------
    GeometryFields
        Populated on nodes at least ``2 * r`` away from the boundary, where
        ``r = fd_order // 2`` is the stencil radius.
    """
    if fd_order not in _STENCILS:
        raise InputError("fd_order must be 2 or 4")
    r = fd_order // 2
    depth = 2 * r
    shape = patch.shape
    if min(shape) <= 2 * depth:
        raise InputError("grid too small for the requested stencil")
    P = patch.positions
    h1, h2 = patch.h1, patch.h2

    f1 = diff(P, 0, h1, fd_order)
    f2 = diff(P, 1, h2, fd_order)
    f11, f12, f22 = _second_derivs(P, patch, fd_order)

    g = np.empty(shape + (2, 2))
    g[..., 0, 0] = np.einsum("...k,...k->...", f1, f1)
    g[..., 1, 1] = np.einsum("...k,...k->...", f2, f2)
    g[..., 0, 1] = g[..., 1, 0] = np.einsum("...k,...k->...", f1, f2)
    ginv, det_g = inverse2(g)

    n = np.cross(f1, f2)
    nn = np.linalg.norm(n, axis=-1, keepdims=True)
    inner_r = interior_mask(shape, r)
    if np.any(nn[inner_r] < DEGENERACY_FLOOR) or np.any(det_g[inner_r] <= DET_FLOOR):
        raise DegenerateChart("metric is not positive definite at an interior node")
    xi = n / nn
    if flip:
        xi = -xi

    A = np.empty(shape + (2, 2))
    A[..., 0, 0] = -np.einsum("...k,...k->...", f11, xi)
    A[..., 1, 1] = -np.einsum("...k,...k->...", f22, xi)
    A[..., 0, 1] = A[..., 1, 0] = -np.einsum("...k,...k->...", f12, xi)
    H = np.einsum("...ij,...ij->...", ginv, A)
    K = (A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] ** 2) / det_g

    v = patch.v
    u = P @ v
    du = np.stack([f1 @ v, f2 @ v], axis=-1)
    grad_u = np.einsum("...ij,...j->...i", ginv, du)
    grad_u_sq = inner(ginv, du, du)

    # Christoffel symbols from differentiated metric components
    dg = np.stack([diff(g, 0, h1, fd_order), diff(g, 1, h2, fd_order)], axis=-3)  # [..., l, i, j] = d_l g_ij
    lower = 0.5 * (np.einsum("...ijl->...lij", dg) + np.einsum("...jil->...lij", dg) - dg)
    # lower[..., l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    gamma = np.einsum("...kl,...lij->...kij", ginv, lower)
    gamma = 0.5 * (gamma + np.swapaxes(gamma, -1, -2))

    uij = np.empty(shape + (2, 2))
    uij[..., 0, 0] = f11 @ v
    uij[..., 1, 1] = f22 @ v
    uij[..., 0, 1] = uij[..., 1, 0] = f12 @ v
    hess_u = uij - np.einsum("...kij,...k->...ij", gamma, du)

    dH = np.stack([diff(H, 0, h1, fd_order), diff(H, 1, h2, fd_order)], axis=-1)
    grad_H_sq = inner(ginv, dH, dH)

    dA = np.stack([diff(A, 0, h1, fd_order), diff(A, 1, h2, fd_order)], axis=-3)  # [..., i, j, k]
    nabla_A = (dA
               - np.einsum("...lij,...lk->...ijk", gamma, A)
               - np.einsum("...lik,...jl->...ijk", gamma, A))
    nabla_A_sq = norm2_3tensor(ginv, nabla_A)
    A_sq = norm2_2tensor(ginv, A)

    base = dict(patch=patch, fd_order=fd_order, radius=r, tangents=np.stack([f1, f2], axis=-2),
                g=g, ginv=ginv, det_g=det_g, christoffel=gamma, xi=xi)
    populated = interior_mask(shape, depth)
    partial = GeometryFields(populated=populated, A=A, H=H, K=K, u=u, du=du, grad_u=grad_u,
                             grad_u_sq=grad_u_sq, hess_u=hess_u, dH=dH, grad_H_sq=grad_H_sq,
                             nabla_A=nabla_A, nabla_A_sq=nabla_A_sq, A_sq=A_sq,
                             lap_H=None, lap_u=None, lap_A_sq=None, v_dot_xi=xi @ v, **base)
    lap_H = laplace_beltrami(partial, H)
    lap_u = laplace_beltrami(partial, u)
    lap_A_sq = laplace_beltrami(partial, A_sq)

    values = dict(A=A, H=H, K=K, u=u, du=du, grad_u=grad_u, grad_u_sq=grad_u_sq, hess_u=hess_u,
                  dH=dH, grad_H_sq=grad_H_sq, nabla_A=nabla_A, nabla_A_sq=nabla_A_sq, A_sq=A_sq,
                  lap_H=lap_H, lap_u=lap_u, lap_A_sq=lap_A_sq, v_dot_xi=xi @ v)
    for name, arr in values.items():
        inside = arr[populated]
        if not np.all(np.isfinite(inside)):
            raise NonFiniteField(f"field {name} is not finite on the populated region")
        if name != "u":
            arr[~populated] = np.nan
    return GeometryFields(populated=populated, **values, **base)


def laplace_beltrami(fields: GeometryFields, scalar) -> np.ndarray:
    """Laplace-Beltrami operator ``g^ij (d_ij s - Gamma^k_ij d_k s)``.

    The result is NaN wherever a stencil touches a NaN of ``scalar`` or of
    the Christoffel symbols, so the populated region shrinks by the stencil
    radius relative to the input.
    """
    p = fields.patch
    s = np.asarray(scalar, dtype=float)
    if s.shape != p.shape:
        raise InputError("scalar field must live on the chart grid")
    o = fields.fd_order
    s11, s12, s22 = _second_derivs(s, p, o)
    ds = np.stack([diff(s, 0, p.h1, o), diff(s, 1, p.h2, o)], axis=-1)
    hess = np.empty(p.shape + (2, 2))
    hess[..., 0, 0], hess[..., 1, 1] = s11, s22
    hess[..., 0, 1] = hess[..., 1, 0] = s12
    hess = hess - np.einsum("...kij,...k->...ij", fields.christoffel, ds)
    out = np.einsum("...ij,...ij->...", fields.ginv, hess)
    if np.any(np.isinf(out)):
        raise NonFiniteField("Laplace-Beltrami produced an infinite value")
    return out


# -- CSV exchange ----------------------------------------------------------

def write_chart_csv(patch: ChartPatch, path) -> None:
    """Write the node table ``u1, u2, x, y, z``; ``v`` goes in a comment line."""
    U1, U2 = np.meshgrid(patch.u1, patch.u2, indexing="ij")
    with open(path, "w", newline="") as fh:
        fh.write("# v=%s\n" % ",".join("%.17g" % c for c in patch.v))
        w = csv.writer(fh)
        w.writerow(["u1", "u2", "x", "y", "z"])
        P = patch.positions
        for i in range(patch.shape[0]):
            for j in range(patch.shape[1]):
                w.writerow(["%.17g" % c for c in (U1[i, j], U2[i, j], *P[i, j])])


def read_chart_csv(path) -> ChartPatch:
    v = np.array([0.0, 0.0, 1.0])
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                if line.startswith("# v="):
                    v = np.array([float(c) for c in line[4:].split(",")])
                continue
            rows.append(line)
    reader = csv.reader(rows)
    header = next(reader)
    if header[:5] != ["u1", "u2", "x", "y", "z"]:
        raise InputError(f"{path}: unexpected chart header {header}")
    data = np.array([[float(c) for c in row] for row in reader if row])
    u1 = np.unique(data[:, 0])
    u2 = np.unique(data[:, 1])
    if len(u1) * len(u2) != len(data):
        raise InputError(f"{path}: nodes do not form a tensor grid")
    order = np.lexsort((data[:, 1], data[:, 0]))
    pos = data[order, 2:5].reshape(len(u1), len(u2), 3)
    return ChartPatch(u1, u2, pos, v, _boundary_ring((len(u1), len(u2))))


SCALAR_FIELDS = ("H", "K", "u", "grad_u_sq", "grad_H_sq", "A_sq", "nabla_A_sq",
                 "lap_H", "lap_u", "lap_A_sq", "v_dot_xi")


def write_fields_csv(fields: GeometryFields, path, names: Sequence[str] = SCALAR_FIELDS) -> None:
    """One row per node, one column per scalar field; unpopulated nodes are blank."""
    p = fields.patch
    U1, U2 = np.meshgrid(p.u1, p.u2, indexing="ij")
    cols = [getattr(fields, n) for n in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u1", "u2", "populated", *names])
        for i in range(p.shape[0]):
            for j in range(p.shape[1]):
                vals = ["" if not np.isfinite(c[i, j]) else "%.17g" % c[i, j] for c in cols]
                w.writerow(["%.17g" % U1[i, j], "%.17g" % U2[i, j], int(fields.populated[i, j]), *vals])
