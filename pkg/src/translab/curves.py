"""Closed planar polylines and curve shortening flow."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from . import kernels
from .errors import Collapsed, InputError, SelfIntersection


def signed_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def area_centroid(pts):
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    A = 0.5 * cr.sum()
    return np.array([((x + xn) * cr).sum(), ((y + yn) * cr).sum()]) / (6 * A)


def diameter(pts):
    pts = np.asarray(pts, dtype=float)
    if len(pts) > 3:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except Exception:  # degenerate (collinear) input: fall back to all points
            pass
    return float(pdist(pts).max()) if len(pts) > 1 else 0.0


@dataclass(frozen=True)
class PlanarCurve:
    """Closed, simple, counter-clockwise polyline (no repeated end point).

    Construction reorders clockwise input and rejects self-intersections
    with :class:`InputError`.
    """

    points: np.ndarray
    _meta: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise InputError("a planar curve needs at least 3 points of shape (N, 2)")
        if np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        found, i, j = kernels.polyline_crossing(pts)
        if found:
            raise InputError(f"curve is not simple: segments {i} and {j} cross")
        if signed_area(pts) < 0:
            pts = pts[::-1].copy()
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def length(self):
        return float(np.linalg.norm(np.roll(self.points, -1, 0) - self.points, axis=1).sum())

    @property
    def area(self):
        return signed_area(self.points)

    @property
    def centroid(self):
        return area_centroid(self.points)

    @property
    def diameter(self):
        return diameter(self.points)

    @property
    def isoperimetric_ratio(self):
        return self.length ** 2 / (4 * np.pi * self.area)

    def contains(self, q):
        """Even-odd point-in-polygon test for an array of query points."""
        q = np.atleast_2d(q)
        x, y = self.points[:, 0], self.points[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        inside = np.zeros(len(q), dtype=bool)
        for k in range(len(x)):
            cond = (y[k] > q[:, 1]) != (yn[k] > q[:, 1])
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = x[k] + (q[:, 1] - y[k]) * (xn[k] - x[k]) / (yn[k] - y[k])
            inside ^= cond & (q[:, 0] < xc)
        return inside


def circle(radius=1.0, n=128, center=(0.0, 0.0), phase=0.0):
    t = phase + 2 * np.pi * np.arange(n) / n
    return PlanarCurve(np.stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)], 1))


def ellipse(a=2.0, b=1.0, n=256, center=(0.0, 0.0)):
    """Ellipse sampled uniformly in arclength."""
    t = np.linspace(0, 2 * np.pi, 4097)
    p = np.stack([a * np.cos(t), b * np.sin(t)], 1)
    s = np.concatenate([[0], np.cumsum(np.linalg.norm(np.diff(p, axis=0), axis=1))])
    ts = np.interp(np.linspace(0, s[-1], n, endpoint=False), s, t)
    return PlanarCurve(np.stack([center[0] + a * np.cos(ts), center[1] + b * np.sin(ts)], 1))


def resample_uniform(pts, n=None, fractions=None, start=0.0):
    """Resample a closed polyline at uniform arclength with a periodic cubic spline.

    ``fractions`` (in [0, 1)) overrides the uniform spacing; ``start`` is the
    arclength fraction of the first output sample.
    """
    pts = np.asarray(pts, dtype=float)
    n = len(pts) if n is None else n
    closed = np.vstack([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    L = s[-1]
    spl = CubicSpline(s, closed, bc_type="periodic", axis=0)
    f = np.arange(n) / n if fractions is None else np.asarray(fractions, dtype=float)
    return spl(((start + f) % 1.0) * L)


def curvature_vectors(pts):
    """Discrete curvature vector ``(T_{i+1/2} - T_{i-1/2}) / mean segment length``.

    Exact (magnitude ``1/r``) on regular polygons inscribed in a circle.
    """
    e_next = np.roll(pts, -1, 0) - pts
    e_prev = pts - np.roll(pts, 1, 0)
    l_next = np.linalg.norm(e_next, axis=1, keepdims=True)
    l_prev = np.linalg.norm(e_prev, axis=1, keepdims=True)
    return (e_next / l_next - e_prev / l_prev) / (0.5 * (l_next + l_prev))


@dataclass
class FlowResult:
    times: np.ndarray
    frames: list            # list of (N, 2) arrays
    ratios: np.ndarray
    areas: np.ndarray
    lengths: np.ndarray
    reason: str
    steps: int
    embedded: bool = True
    halvings: int = 0

    @property
    def final(self) -> PlanarCurve:
        return PlanarCurve(self.frames[-1])

    def enclosed_radius(self):
        return np.sqrt(self.areas / np.pi)


def polygon_ratio_floor(n):
    """Isoperimetric ratio ``n tan(pi/n) / pi`` of the regular n-gon."""
    return n * np.tan(np.pi / n) / np.pi


def curve_shortening_flow(curve: PlanarCurve, normalize=False, t_end=None, until_round=True,
                          round_tol=1e-4, cfl=0.25, max_steps=200_000, record_every=1,
                          check_every=1) -> FlowResult:
    """Explicit polyline curve shortening flow with arclength resampling.

    Parameters
    ----------
    curve : PlanarCurve
        At least 32 samples; the sample count is kept fixed.
    normalize : bool
        After every step rescale about the area centroid to the initial length.
    t_end : float, optional
        Stop at this flow time.
    until_round : bool
        Stop once ``L^2 / (4 pi A) < 1 + round_tol`` (or once the ratio is
        within ``0.1 * round_tol`` of the regular-polygon floor).
    cfl : float
        ``dt = cfl * (min spacing)^2``, at most 0.5.

    Raises
    ------
    SelfIntersection
        If a step still produces a crossing after 40 halvings of ``dt``.
    Collapsed
        If the enclosed area drops below 1e-12 without normalisation.
    """
    if not isinstance(curve, PlanarCurve):
        curve = PlanarCurve(curve)
    if len(curve) < 32:
        raise InputError("curve shortening needs at least 32 samples")
    if not 0 < cfl <= 0.5:
        raise InputError("cfl must lie in (0, 0.5]")
    if t_end is None and not until_round:
        raise InputError("give t_end or until_round")
    x = curve.points.copy()
    N = len(x)
    L0 = curve.length
    floor = polygon_ratio_floor(N)

    def stats(p):
        L = float(np.linalg.norm(np.roll(p, -1, 0) - p, axis=1).sum())
        A = signed_area(p)
        return L, A, L * L / (4 * np.pi * A)

    L, A, q = stats(x)
    times, frames, ratios, areas, lengths = [0.0], [x.copy()], [q], [A], [L]
    t, steps, halvings, reason = 0.0, 0, 0, "max_steps"
    while steps < max_steps:
        if until_round and (q < 1 + round_tol or q - floor < 0.1 * round_tol):
            reason = "round"
            break
        if t_end is not None and t >= t_end - 1e-15:
            reason = "t_end"
            break
        h = np.linalg.norm(np.roll(x, -1, 0) - x, axis=1).min()
        dt = cfl * h * h
        if t_end is not None:
            dt = min(dt, t_end - t)
        kappa = curvature_vectors(x)
        for k in range(41):
            y = x + dt * kappa
            y = resample_uniform(y, N, start=0.0)
            if steps % check_every or not kernels.polyline_crossing(y)[0]:
                break
            if k == 40:
                raise SelfIntersection(f"flow step at t={t:.6g} crosses itself after 40 halvings")
            dt *= 0.5
            halvings += 1
        t += dt
        if normalize:
            c = area_centroid(y)
            Ly = float(np.linalg.norm(np.roll(y, -1, 0) - y, axis=1).sum())
            y = c + (y - c) * (L0 / Ly)
        x = y
        steps += 1
        L, A, q = stats(x)
        if not normalize and A < 1e-12:
            raise Collapsed(f"curve collapsed at t={t:.6g}")
        if steps % record_every == 0:
            times.append(t)
            frames.append(x.copy())
            ratios.append(q)
            areas.append(A)
            lengths.append(L)
    if times[-1] != t:
        times.append(t)
        frames.append(x.copy())
        ratios.append(q)
        areas.append(A)
        lengths.append(L)
    return FlowResult(np.array(times), frames, np.array(ratios), np.array(areas), np.array(lengths),
                      reason, steps, True, halvings)


def write_frames_csv(times, frames, path):
    """Multi-record CSV ``t, index, x, y`` (one record per sample per frame)."""
    with open(path, "w") as fh:
        fh.write("t,index,x,y\n")
        for t, f in zip(times, frames):
            for i, (a, b) in enumerate(f):
                fh.write("%.17g,%d,%.17g,%.17g\n" % (t, i, a, b))
