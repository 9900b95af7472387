"""Identity residuals, derived fields and convergence orders for translators.

Every residual is a non-negative per-node field on the populated region of a
:class:`~translab.chartlab.GeometryFields`.  Reports collect max/mean values
per identity and resolution; :func:`convergence_order` turns a ladder of
reports into observed orders.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .chartlab import GeometryFields, interior_mask, norm2_2tensor, norm2_3tensor
from .errors import EmptyRegion, InputError, ZeroResidual

LEMMA_IDENTITIES = ("a", "b", "c", "d", "e", "f", "g", "h")
HK_IDENTITIES = ("hk1", "hk2", "hk3")
IDENTITIES = LEMMA_IDENTITIES + HK_IDENTITIES + (
    "trans", "gauss_eq", "w_div", "w_K", "q2", "h_ratio", "barrier")

ZERO_FLOOR = 1e-13
H_FLOOR = 1e-6
GRAD_FLOOR = 1e-6
PLATEAU_TOL = 1e-10


@dataclass
class ResidualEntry:
    name: str
    max: float
    mean: float
    resolution: int
    spacing: float
    count: int


@dataclass
class ResidualReport:
    """Named residual statistics, possibly over several resolutions."""

    entries: list = field(default_factory=list)
    orders: dict = field(default_factory=dict)
    exact: set = field(default_factory=set)
    region: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def add(self, name, values, resolution, spacing):
        if name not in IDENTITIES:
            raise InputError(f"unregistered identity {name!r}")
        vals = np.asarray(values, dtype=float)
        vals = vals[np.isfinite(vals)]
        if vals.size == 0:
            self.notes[name] = "empty region"
            self.region[name] = 0
            return
        if np.any(vals < 0):
            raise InputError("residuals must be non-negative")
        self.entries.append(ResidualEntry(name, float(vals.max()), float(vals.mean()),
                                          int(resolution), float(spacing), int(vals.size)))
        self.region[name] = int(vals.size)

    def names(self):
        seen = []
        for e in self.entries:
            if e.name not in seen:
                seen.append(e.name)
        return seen

    def get(self, name, resolution=None):
        """Entry for ``name`` at ``resolution`` (default: finest available)."""
        cand = [e for e in self.entries if e.name == name]
        if resolution is not None:
            cand = [e for e in cand if e.resolution == resolution]
        if not cand:
            raise KeyError(name)
        return min(cand, key=lambda e: e.spacing)

    def max(self, name, resolution=None):
        return self.get(name, resolution).max

    def extend(self, other: "ResidualReport"):
        self.entries.extend(other.entries)
        self.notes.update(other.notes)
        for k, v in other.region.items():
            self.region[k] = v
        return self

    def to_json(self):
        doc = {}
        for name in self.names():
            rows = sorted((e for e in self.entries if e.name == name), key=lambda e: e.resolution)
            order = self.orders.get(name)
            doc[name] = {
                "levels": [{"resolution": e.resolution, "spacing": e.spacing, "max": e.max,
                            "mean": e.mean, "count": e.count} for e in rows],
                "order": None if order is None or not np.isfinite(order) else order,
                "exact": name in self.exact,
            }
        for name, note in self.notes.items():
            doc.setdefault(name, {"levels": [], "order": None, "exact": False})["note"] = note
        return json.dumps(doc, sort_keys=True, indent=2)

    def write_json(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["identity", "resolution", "spacing", "max", "mean", "count", "order", "exact"])
            for e in sorted(self.entries, key=lambda e: (e.name, e.resolution)):
                o = self.orders.get(e.name)
                w.writerow([e.name, e.resolution, "%.17g" % e.spacing, "%.17g" % e.max, "%.17g" % e.mean,
                            e.count, "" if o is None or not np.isfinite(o) else "%.17g" % o,
                            int(e.name in self.exact)])


def _resolution(fields):
    return int(max(fields.shape))


def _spacing(fields):
    return float(max(fields.patch.h1, fields.patch.h2))


def _pop(fields, arr, extra=0):
    out = np.array(arr, dtype=float, copy=True)
    mask = fields.populated if extra == 0 else interior_mask(fields.shape, 2 * fields.radius + extra)
    out[~mask] = np.nan
    return out


# -- single fields ---------------------------------------------------------

def translator_residual(fields: GeometryFields) -> np.ndarray:
    """``|H + <v, xi>|`` per node; invariant under reversing the orientation."""
    return _pop(fields, np.abs(fields.H + fields.v_dot_xi))


def gauss_equation_residual(fields):
    """``|K det g - det A|``: roundoff-level by construction."""
    A = fields.A
    return _pop(fields, np.abs(fields.K * fields.det_g - (A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] ** 2)))


def scalar_curvature_residual(fields):
    """``| |A|^2 - H^2 + 2K |`` (algebraic on surfaces)."""
    return _pop(fields, np.abs(fields.A_sq - fields.H ** 2 + 2 * fields.K))


def lemma_rel_fields(fields: GeometryFields) -> dict:
    """Per-node residual fields of identities (a) to (h)."""
    F = fields
    v = F.patch.v
    grad_amb = F.to_ambient(F.grad_u)
    v_tan = v - F.v_dot_xi[..., None] * F.xi
    HA = F.H[..., None, None] * F.A
    A_grad = np.einsum("...ij,...i->...j", F.A, F.grad_u)
    e_vec = F.dH + A_grad
    gH_gu = np.einsum("...i,...i->...", F.dH, F.grad_u)
    dA2 = F.gradient(F.A_sq)
    return {
        "a": np.linalg.norm(grad_amb - v_tan, axis=-1),
        "b": np.abs(F.grad_u_sq - 1 + F.H ** 2),
        "c": np.sqrt(np.abs(norm2_2tensor(F.ginv, F.hess_u - HA))),
        "d": np.abs(F.lap_u + F.grad_u_sq - 1),
        "e": np.sqrt(np.abs(F.inner(e_vec, e_vec))),
        "f": np.abs(F.lap_H + F.H * F.A_sq + gH_gu),
        "g": np.abs(F.K * F.grad_u_sq + F.grad_H_sq + F.H * gH_gu),
        "h": np.abs(F.lap_A_sq - 2 * F.nabla_A_sq + np.einsum("...i,...i->...", dA2, F.grad_u)
                    + 2 * F.A_sq ** 2),
    }


def lemma_rel_residuals(fields: GeometryFields, include_checks=True) -> ResidualReport:
    """Residual report for identities (a) to (h), plus ``trans`` and ``gauss_eq``."""
    rep = ResidualReport()
    n, h = _resolution(fields), _spacing(fields)
    for name, val in lemma_rel_fields(fields).items():
        rep.add(name, _pop(fields, val), n, h)
    if include_checks:
        rep.add("trans", translator_residual(fields), n, h)
        rep.add("gauss_eq", gauss_equation_residual(fields), n, h)
    return rep


def hk_fields(fields: GeometryFields) -> dict:
    """``|K - rhs|`` for the three (H, K) formulas.

    ``hk1`` uses a direct finite-difference Laplacian of ``log sqrt(1 + H^2)``;
    ``hk3`` is restricted to nodes with ``H > 1e-6`` (NaN elsewhere).
    """
    F = fields
    H, K, G = F.H, F.K, F.grad_H_sq
    q = 1 + H ** 2
    lap_log = F.laplacian(0.5 * np.log(q))
    rhs1 = lap_log - 2 * G / q ** 2 + H ** 4 / q
    rhs2 = H / q * F.lap_H - G / q + H ** 4 / q
    pos = H > H_FLOOR
    with np.errstate(invalid="ignore", divide="ignore"):
        logH = np.where(pos, np.log(np.where(pos, H, 1.0)), np.nan)
    lap_logH = F.laplacian(logH)
    rhs3 = H ** 2 / q * (lap_logH + H ** 2)
    hk3 = np.where(pos, np.abs(K - rhs3), np.nan)
    return {"hk1": np.abs(K - rhs1), "hk2": np.abs(K - rhs2), "hk3": hk3}


def hk_expansion_gap(fields):
    """Difference between hk1 (chain-rule expansion of the log Laplacian) and hk2."""
    F = fields
    H, G = F.H, F.grad_H_sq
    q = 1 + H ** 2
    lap_log = H * F.lap_H / q + (1 - H ** 2) * G / q ** 2
    rhs1 = lap_log - 2 * G / q ** 2 + H ** 4 / q
    rhs2 = H / q * F.lap_H - G / q + H ** 4 / q
    return _pop(fields, np.abs(rhs1 - rhs2))


def hk_residuals(fields: GeometryFields) -> ResidualReport:
    rep = ResidualReport()
    n, h = _resolution(fields), _spacing(fields)
    vals = hk_fields(fields)
    rep.add("hk1", _pop(fields, vals["hk1"], extra=fields.radius), n, h)
    rep.add("hk2", _pop(fields, vals["hk2"]), n, h)
    rep.add("hk3", _pop(fields, vals["hk3"], extra=fields.radius), n, h)
    rep.region["hk3_nodes"] = int(np.sum(np.isfinite(_pop(fields, vals["hk3"], extra=fields.radius))))
    return rep


@dataclass
class WField:
    W: np.ndarray          # contravariant components, NaN outside the valid set
    div: np.ndarray
    k_gap: np.ndarray
    valid: np.ndarray


def w_field(fields: GeometryFields, region=None) -> tuple:
    """``W = -(grad H + H grad u) / |grad u|^2`` with ``div W`` and ``|K - <grad H, W>|``.

    Parameters
    ----------
    region : bool array, optional
        Further restriction of the node set (e.g. to stay away from
        ``Crit(u)``).

    Returns
    -------
    (WField, ResidualReport)

    Raises
    ------
    EmptyRegion
        If no populated node has ``|grad u|^2 > 1e-6``.
    """
    F = fields
    valid = F.populated & (F.grad_u_sq > GRAD_FLOOR)
    if region is not None:
        valid &= region
    if not valid.any():
        raise EmptyRegion("no node outside Crit(u)")
    gradH = F.raise_index(F.dH)
    with np.errstate(divide="ignore", invalid="ignore"):
        W = -(gradH + F.H[..., None] * F.grad_u) / F.grad_u_sq[..., None]
    W[~valid] = np.nan
    div = np.abs(F.divergence(W))
    k_gap = np.abs(F.K - np.einsum("...i,...i->...", F.dH, W))
    k_gap[~valid] = np.nan
    rep = ResidualReport()
    n, h = _resolution(F), _spacing(F)
    rep.add("w_div", div, n, h)
    rep.add("w_K", k_gap, n, h)
    return WField(W, div, k_gap, valid), rep


@dataclass
class TheoremAResult:
    h: np.ndarray
    q2: np.ndarray
    local_max: list
    region: np.ndarray


def theorem_a_quantities(fields: GeometryFields) -> TheoremAResult:
    """``h = |A|^2 / H^2``, ``Q^2 = |H nabla A - dH (x) A|^2`` and the local maxima of ``h``.

    A node counts as a local maximum when ``h`` there is at least every one
    of its 8 neighbours minus a plateau tolerance of 1e-10.
    """
    F = fields
    region = F.populated & (np.abs(F.H) > H_FLOOR)
    if not region.any():
        raise EmptyRegion("H vanishes on the populated region")
    h = np.where(region, F.A_sq / np.where(region, F.H, 1.0) ** 2, np.nan)
    T = F.H[..., None, None, None] * F.nabla_A - F.dH[..., :, None, None] * F.A[..., None, :, :]
    q2 = np.where(region, norm2_3tensor(F.ginv, T), np.nan)
    n1, n2 = h.shape
    core = h[1:-1, 1:-1]
    ok = np.isfinite(core)
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            if a == 0 and b == 0:
                continue
            nb = h[1 + a:n1 - 1 + a, 1 + b:n2 - 1 + b]
            ok &= np.isfinite(nb) & (core >= nb - PLATEAU_TOL)
    locs = [(int(i) + 1, int(j) + 1) for i, j in zip(*np.nonzero(ok))]
    return TheoremAResult(h, q2, locs, region)


@dataclass
class BarrierResult:
    value: float
    index: tuple
    position: np.ndarray
    lam: float

    @property
    def certifies_mean_convex(self):
        return self.value > 0


def barrier_infimum(fields: GeometryFields, lam=0.5) -> BarrierResult:
    """Infimum of ``H exp(lam u)`` over the populated nodes and where it is attained."""
    if not 0 < lam < 1:
        raise InputError("lambda must lie in (0, 1)")
    g = np.where(fields.populated, fields.H * np.exp(lam * fields.u), np.inf)
    idx = np.unravel_index(np.argmin(g), g.shape)
    return BarrierResult(float(g[idx]), tuple(int(i) for i in idx), fields.patch.positions[idx], lam)


def crit_u_check(fields, eps, tol=None):
    """Node-level comparison of ``|grad u| < eps`` with ``|H^2 - 1| < 2 eps + tol``.

    Returns a dict of boolean counts.  The forward implication holds whenever
    identity (b) does; the converse only up to ``sqrt``-type slack, which is
    reported as ``converse_sqrt``.
    """
    F = fields
    m = F.populated
    b_res = np.abs(F.grad_u_sq - (1 - F.H ** 2))[m]
    tol = float(np.max(b_res)) if tol is None else tol
    g = np.sqrt(np.abs(F.grad_u_sq[m]))
    d = np.abs(F.H[m] ** 2 - 1)
    small_g = g < eps
    small_d = d < 2 * eps + tol
    return {
        "tol": tol,
        "forward": bool(np.all(~small_g | small_d)),
        "converse_sqrt": bool(np.all(~(d < eps ** 2) | (g < np.sqrt(eps ** 2 + tol) + 1e-15))),
        "n_crit": int(small_g.sum()),
    }


def all_residuals(fields: GeometryFields, region_w=None) -> ResidualReport:
    rep = lemma_rel_residuals(fields)
    rep.extend(hk_residuals(fields))
    try:
        rep.extend(w_field(fields, region=region_w)[1])
    except EmptyRegion:
        rep.notes["w_div"] = rep.notes["w_K"] = "empty region"
    n, h = _resolution(fields), _spacing(fields)
    try:
        ta = theorem_a_quantities(fields)
        rep.add("q2", ta.q2, n, h)
    except EmptyRegion:
        rep.notes["q2"] = "empty region"
    return rep


def h_ratio_residual(fields, target=1.0):
    """``| |A|^2 / H^2 - target |`` where ``|H| > 1e-6``."""
    return np.abs(theorem_a_quantities(fields).h - target)


def exp_u_h_residual(fields):
    """``| e^u |H| - 1 |``, which vanishes on a grim hyperplane with ``min u = 0``."""
    return _pop(fields, np.abs(np.exp(fields.u) * np.abs(fields.H) - 1.0))


# -- convergence ------------------------------------------------------------

def convergence_order(reports, names=None, strict=False) -> ResidualReport:
    """Merge single-resolution reports and estimate observed orders.

    The order between consecutive resolutions is
    ``log(res_1 / res_2) / log(h_1 / h_2)`` with the actual grid spacings;
    the reported order is the mean over consecutive pairs.  Identities whose
    max residual is below 1e-13 at every level are marked exact (order NaN).

    Raises
    ------
    ZeroResidual
        Only with ``strict=True``, when an identity is exact.
    """
    merged = ResidualReport()
    for r in reports:
        merged.extend(r)
    names = names or merged.names()
    for name in names:
        rows = sorted((e for e in merged.entries if e.name == name), key=lambda e: -e.spacing)
        if len(rows) < 2:
            continue
        if all(e.max < ZERO_FLOOR for e in rows):
            merged.exact.add(name)
            merged.orders[name] = float("nan")
            if strict:
                raise ZeroResidual(f"identity {name} holds to roundoff; order undefined")
            continue
        pairs = []
        for e1, e2 in zip(rows[:-1], rows[1:]):
            if e1.max < ZERO_FLOOR or e2.max < ZERO_FLOOR:
                continue
            pairs.append(np.log(e1.max / e2.max) / np.log(e1.spacing / e2.spacing))
        merged.orders[name] = float(np.mean(pairs)) if pairs else float("nan")
    return merged
