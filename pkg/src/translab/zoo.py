"""Example translators: grim reaper, rotational profiles and graphs.

The rotational translators are generated from the arclength system

    r' = cos(theta),  z' = sin(theta),  theta' = cos(theta) - sin(theta) / r

which says that profile curvature plus rotational curvature equals
``cos(theta)``, the translator condition ``H = -<v, xi>`` for the revolved
chart below.  Graphs ``z = w(x, y)`` satisfy

    div(Dw / W) = 1 / W,   W = sqrt(1 + |Dw|^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import spsolve

from .chartlab import ChartPatch, build_chart_grid
from .errors import (DomainError, InputError, IntegrationFailure, NoConvergence,
                     SingularityError, WindowError)
from .mesh import TriMesh

HALF_PI = 0.5 * np.pi
ODE_TOL = 1e-12
# apex series start: truncation error of the series is O(s^5) ~ 1e-15 here
APEX_START = 1e-3


# -- grim reaper -------------------------------------------------------------

def _check_grim_interval(lo, hi):
    if not lo < hi:
        raise InputError("empty interval")
    if lo <= -HALF_PI or hi >= HALF_PI:
        raise DomainError(f"interval ({lo}, {hi}) must lie strictly inside (-pi/2, pi/2)")


def grim_reaper(c=0.0, domain=(-1.0, 1.0), n=257):
    """Samples ``(x, c - log cos x)`` of the grim reaper, shape ``(n, 2)``."""
    lo, hi = domain
    _check_grim_interval(lo, hi)
    if n < 8:
        raise InputError("need at least 8 samples")
    x = np.linspace(lo, hi, n)
    return np.stack([x, c - np.log(np.cos(x))], axis=1)


def grim_curvature(x):
    """Curvature ``cos x`` of the grim reaper graph."""
    return np.cos(x)


def grim_hyperplane(domain=((-1.0, 1.0), (0.0, 1.0)), resolution=(64, 64), c=0.0) -> ChartPatch:
    """Chart ``(x, y) -> (x, -y, c - log cos x)`` with ``v = e3``.

    The second coordinate is reversed so that the chart normal points
    downwards and ``H = cos x > 0``.
    """
    (lo, hi), _ = domain
    _check_grim_interval(lo, hi)
    if np.isscalar(resolution):
        resolution = (resolution, resolution)
    return build_chart_grid(lambda x, y: (x, -y, c - np.log(np.cos(x))), domain, resolution)


# -- rotational profiles ---------------------------------------------------

def _rhs(s, y):
    r, z, th = y
    return [np.cos(th), np.sin(th), np.cos(th) - np.sin(th) / r]


_RK4_STEP = 2.5e-4
_RUN_GAP = 0.05


def _rk4_march(y, s0, s1):
    """Classical RK4 for the profile ODE from ``s0`` to ``s1`` (scalar state)."""
    ds = s1 - s0
    if ds == 0.0:
        return y
    n = max(1, math.ceil(abs(ds) / _RK4_STEP))
    h = ds / n
    r, z, th = y

    def f(r, th):
        c, sn = math.cos(th), math.sin(th)
        return c, sn, c - sn / r

    for _ in range(n):
        a1, b1, c1 = f(r, th)
        a2, b2, c2 = f(r + 0.5 * h * a1, th + 0.5 * h * c1)
        a3, b3, c3 = f(r + 0.5 * h * a2, th + 0.5 * h * c2)
        a4, b4, c4 = f(r + h * a3, th + h * c3)
        r += h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        z += h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        th += h / 6 * (c1 + 2 * c2 + 2 * c3 + c4)
    return r, z, th


def _theta_prime(r, th):
    with np.errstate(divide="ignore", invalid="ignore"):
        tp = np.cos(th) - np.sin(th) / r
    apex = r < 1e-12
    return np.where(apex, 0.5 * np.cos(th), tp)


def _apex_series(s):
    """Series of the paraboloid profile at the axis."""
    th = s / 2 - s ** 3 / 32
    r = s - s ** 3 / 24
    z = s ** 2 / 4 - 5 * s ** 4 / 384
    return r, z, th


def _integrate(y0, s0, s_end, step, guard_axis):
    events = None
    if guard_axis:
        def hit_axis(s, y):
            return y[0] - 1e-9
        hit_axis.terminal = True
        events = hit_axis
    sol = solve_ivp(_rhs, (s0, s_end), y0, method="DOP853", rtol=ODE_TOL, atol=ODE_TOL,
                    dense_output=True, events=events)
    if sol.status == 1:
        raise SingularityError("profile reached the rotation axis")
    if sol.status != 0:
        raise IntegrationFailure(sol.message)
    return sol


@dataclass(frozen=True)
class ProfileCurve:
    """Arclength-sampled generating curve of a rotational translator.

    Samples lie on the uniform grid ``s = s[0] + k * step``.  For catenoids
    ``s < 0`` is the lower branch (traversed towards the neck) and
    ``s > 0`` the upper branch; ``theta`` is continuous across the neck.
    """

    s: np.ndarray
    r: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    kind: str
    step: float
    neck: float | None = None

    @property
    def theta_prime(self):
        return _theta_prime(self.r, self.theta)

    def __len__(self):
        return len(self.s)

    def evaluate(self, s):
        """Profile ``(r, z, theta)`` at arbitrary arclength.

        Sorted query points are visited by one classical RK4 march per run
        of nearby points (substeps of at most 2.5e-4), each run starting
        from a single stored sample.  The integration error is then a smooth
        function of ``s``, which keeps high-order finite differences of
        revolved charts clean.  The paraboloid uses its axis series below
        the first integrated sample.
        """
        s = np.asarray(s, dtype=float)
        if np.any(s < self.s[0] - 1e-12) or np.any(s > self.s[-1] + 1e-12):
            raise InputError("arclength outside the sampled range")
        flat, inverse = np.unique(s.ravel(), return_inverse=True)
        out = np.empty((3, flat.size))
        a = min(APEX_START, self.s[-1] / 4) if self.kind == "paraboloid" else -np.inf
        apex = flat < a
        if np.any(apex):
            out[:, apex] = _apex_series(flat[apex])
        order = np.flatnonzero(~apex)  # already sorted
        q = flat[order]
        # a new run starts wherever consecutive queries are far apart
        breaks = np.flatnonzero(np.diff(q) > _RUN_GAP) + 1
        for run in np.split(np.arange(len(q)), breaks):
            if not len(run):
                continue
            s_first = q[run[0]]
            k = int(np.clip(np.floor((s_first - self.s[0]) / self.step + 1e-9), 0, len(self.s) - 1))
            s0, y = float(self.s[k]), (float(self.r[k]), float(self.z[k]), float(self.theta[k]))
            if s0 < a:
                s0, y = a, tuple(float(v) for v in _apex_series(np.float64(a)))
            for i in run:
                s0, y = q[i], _rk4_march(y, s0, q[i])
                out[:, order[i]] = y
        r, z, th = (out[j][inverse].reshape(s.shape) for j in range(3))
        if s.ndim == 0:
            return float(r), float(z), float(th)
        return r, z, th

    def branch(self, which="upper"):
        """Samples of one branch as ``(s, r, z, theta)`` with ``|s|`` increasing."""
        if self.kind == "paraboloid":
            if which != "upper":
                raise InputError("the paraboloid has a single branch")
            return self.s, self.r, self.z, self.theta
        i0 = int(np.argmin(np.abs(self.s)))
        if which == "upper":
            sl = slice(i0, None)
            return self.s[sl], self.r[sl], self.z[sl], self.theta[sl]
        if which == "lower":
            sl = slice(i0, None, -1)
            return self.s[sl], self.r[sl], self.z[sl], self.theta[sl]
        raise InputError(f"unknown branch {which!r}")

    def graph(self, radius, which="upper"):
        """Height ``z`` of a branch over the given radii (re-graphing ``r -> z``)."""
        s_b, r_b, _, _ = self.branch(which)
        radius = np.asarray(radius, dtype=float)
        if np.any(radius < r_b[0] - 1e-12) or np.any(radius > r_b[-1]):
            raise InputError("radius outside the branch range")
        # r is monotone along the branch; refine the linear guess by Newton
        s = np.interp(radius, r_b, s_b)
        for _ in range(4):
            r, z, th = self.evaluate(s)
            dr = np.cos(th)
            ok = np.abs(dr) > 1e-3
            s = np.where(ok, s - (r - radius) / np.where(ok, dr, 1.0), s)
            s = np.clip(s, min(s_b[0], s_b[-1]), max(s_b[0], s_b[-1]))
        return self.evaluate(s)[1]

    def s_at_height(self, height, which="upper"):
        """Arclength on a branch where ``z`` first reaches ``height``."""
        s_b, _, z_b, th_b = self.branch(which)
        sgn = 1.0 if which == "upper" else -1.0
        # z is increasing along the branch once theta (mod 2 pi) is in (0, pi)
        rising = np.sin(th_b) * sgn > 0
        idx = np.nonzero(rising & (z_b >= height))[0]
        if len(idx) == 0:
            raise InputError(f"branch never reaches height {height}")
        k = idx[0]
        lo, hi = s_b[max(k - 1, 0)], s_b[k]
        s = hi
        for _ in range(8):
            _, z, th = self.evaluate(s)
            dz = np.sin(th)
            s = float(np.clip(s - (z - height) / dz, min(lo, hi), max(lo, hi)))
        return s

    def arclength_defect(self):
        """Max deviation of ``|(dr, dz)| / ds`` from 1 on the sampled grid."""
        ds = np.diff(self.s)
        chord = np.hypot(np.diff(self.r), np.diff(self.z)) / ds
        # chords of a unit-speed curve fall short by kappa^2 ds^2 / 24
        kappa = np.abs(0.5 * (self.theta_prime[1:] + self.theta_prime[:-1]))
        return float(np.max(np.abs(chord - (1 - kappa ** 2 * ds ** 2 / 24))))


def rotational_profile(kind="paraboloid", s_max=20.0, step=1e-3, neck=1.0) -> ProfileCurve:
    """Integrate the generating curve of a rotational translator.

    Parameters
    ----------
    kind : {"paraboloid", "catenoid"}
    s_max : float
        Arclength of each branch.
    step : float
        Sampling step of the output (integration itself is adaptive, DOP853
        with rtol = atol = 1e-12).
    neck : float
        Neck radius ``R`` of the catenoid.

    Returns
    -------
    ProfileCurve
        Heights are shifted so that ``min z = 0``.
    """
    if s_max <= 0 or step <= 0:
        raise InputError("s_max and step must be positive")
    n = int(round(s_max / step))
    if n < 8:
        raise InputError("s_max / step must give at least 8 samples")
    s = step * np.arange(n + 1)
    if kind == "paraboloid":
        s0 = min(APEX_START, s[-1] / 4)
        r0, z0, t0 = _apex_series(np.float64(s0))
        sol = _integrate([r0, z0, t0], s0, s[-1], step, guard_axis=False)
        near = s < s0
        r, z, th = np.empty_like(s), np.empty_like(s), np.empty_like(s)
        r[near], z[near], th[near] = _apex_series(s[near])
        r[~near], z[~near], th[~near] = sol.sol(s[~near])
        z -= z.min()
        prof = ProfileCurve(s, r, z, th, "paraboloid", step)
        if np.any(np.diff(r) <= 0) or np.any(np.diff(z) <= 0):
            raise IntegrationFailure("paraboloid profile is not monotone")
        return prof
    if kind == "catenoid":
        if neck is None or neck <= 0:
            raise InputError("catenoid needs a positive neck radius")
        up = _integrate([neck, 0.0, HALF_PI], 0.0, s[-1], step, guard_axis=True).sol(s)
        lo = _integrate([neck, 0.0, -HALF_PI], 0.0, s[-1], step, guard_axis=True).sol(s)
        # reversing the lower branch turns theta into theta + pi; the ODE is unchanged
        S = np.concatenate([-s[:0:-1], s])
        R = np.concatenate([lo[0][:0:-1], up[0]])
        Z = np.concatenate([lo[1][:0:-1], up[1]])
        T = np.concatenate([lo[2][:0:-1] + np.pi, up[2]])
        Z -= Z.min()
        if np.any(R < neck * (1 - 1e-9)):
            raise SingularityError("catenoid profile entered the neck radius")
        return ProfileCurve(S, R, Z, T, "catenoid", step, neck=float(neck))
    raise InputError(f"unknown profile kind {kind!r}")


# -- surfaces of revolution -------------------------------------------------

def revolved_chart(profile: ProfileCurve, s_range, n_s=64, n_theta=64, phi_range=(0.0, 2 * np.pi)) -> ChartPatch:
    """Chart ``(s, phi) -> (r cos phi, -r sin phi, z)``.

    ``phi`` runs clockwise seen from above so that ``xi = (sin t cos p,
    -sin t sin p, -cos t)`` and a translator has ``H = cos(theta)``.
    """
    def ev(S, P):
        r, z, _ = profile.evaluate(S)
        return (r * np.cos(P), -r * np.sin(P), z)
    return build_chart_grid(ev, (tuple(s_range), tuple(phi_range)), (n_s, n_theta))


def apex_chart(profile: ProfileCurve, half_width, n=64) -> ChartPatch:
    """Smooth chart of the paraboloid around its apex.

    ``(a, b) -> (b rho(s), a rho(s), z(s))`` with ``s = |(a, b)|`` and
    ``rho = r(s) / s``; smooth because ``r`` is odd and ``z`` even in ``s``.
    """
    if profile.kind != "paraboloid":
        raise InputError("apex chart needs a paraboloid profile")

    def ev(A, B):
        s = np.hypot(A, B)
        r, z, _ = profile.evaluate(s)
        small = s < 1e-3
        sr, sz, _ = _apex_series(s)
        r = np.where(small, sr, r)
        z = np.where(small, sz, z)
        with np.errstate(invalid="ignore", divide="ignore"):
            rho = np.where(s > 0, r / np.where(s > 0, s, 1.0), 1.0)
        return (B * rho, A * rho, z)
    w = float(half_width)
    return build_chart_grid(ev, ((-w, w), (-w, w)), (n, n))


def revolve(profile: ProfileCurve, n_theta=64, n_s=None, height=None, s_range=None):
    """Revolve a profile into a chart and a closed-orientation triangle mesh.

    Parameters
    ----------
    profile : ProfileCurve
    n_theta : int
        Angular resolution (at least 16).
    n_s : int, optional
        Number of rings per branch; defaults to ``n_theta // 2``.
    height : float, optional
        Truncate each branch where it first reaches this height, so that the
        boundary rings are exactly planar.
    s_range : (float, float), optional
        Arclength interval (ignored if ``height`` is given).

    Returns
    -------
    (ChartPatch, TriMesh)
        The mesh normal agrees with the chart normal ``xi``; a paraboloid
        apex is closed by a triangle fan.
    """
    if n_theta < 16:
        raise InputError("n_theta must be at least 16")
    n_s = n_s or max(n_theta // 2, 8)
    if height is not None:
        hi = profile.s_at_height(height, "upper")
        lo = profile.s_at_height(height, "lower") if profile.kind == "catenoid" else profile.s[0]
    elif s_range is not None:
        lo, hi = s_range
    else:
        lo, hi = profile.s[0], profile.s[-1]
    if profile.kind == "catenoid":
        n_rings = 2 * n_s + 1
    else:
        n_rings = n_s + 1
    s_nodes = np.linspace(lo, hi, n_rings)
    s_nodes[0], s_nodes[-1] = lo, hi
    chart_lo = lo if profile.kind == "catenoid" else max(lo, s_nodes[1] * 0.5)
    chart = revolved_chart(profile, (chart_lo, hi), n_s=max(n_rings, 8), n_theta=max(n_theta + 1, 8))

    r, z, _ = profile.evaluate(s_nodes)
    if height is not None:
        z[-1] = height
        if profile.kind == "catenoid":
            z[0] = height
    phi = 2 * np.pi * np.arange(n_theta) / n_theta
    apex = profile.kind == "paraboloid" and r[0] < 1e-12
    verts, faces = [], []
    first_ring = 1 if apex else 0
    if apex:
        verts.append([0.0, 0.0, z[0]])
    for k in range(first_ring, n_rings):
        verts.extend(np.stack([r[k] * np.cos(phi), -r[k] * np.sin(phi), np.full(n_theta, z[k])], 1))
    base = 1 if apex else 0

    def vid(k, j):
        return base + (k - first_ring) * n_theta + (j % n_theta)

    if apex:
        for j in range(n_theta):
            faces.append([0, vid(1, j), vid(1, j + 1)])
    for k in range(first_ring, n_rings - 1):
        for j in range(n_theta):
            faces.append([vid(k, j), vid(k + 1, j), vid(k + 1, j + 1)])
            faces.append([vid(k, j), vid(k + 1, j + 1), vid(k, j + 1)])
    return chart, TriMesh(np.array(verts), np.array(faces))


# -- graphical translators -------------------------------------------------

@dataclass(frozen=True)
class HeightField:
    """Graph ``z = values`` over a masked rectangular grid."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    boundary: np.ndarray
    boundary_values: np.ndarray
    residual_norm: float
    iterations: int
    tol: float

    def radial_samples(self, center=(0.0, 0.0)):
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        r = np.hypot(X - center[0], Y - center[1])
        return r[self.mask], self.values[self.mask]


def disc_mask(x, y, radius, center=(0.0, 0.0)):
    X, Y = np.meshgrid(x, y, indexing="ij")
    return (X - center[0]) ** 2 + (Y - center[1]) ** 2 <= radius ** 2 * (1 + 1e-12)


def boundary_nodes(mask):
    """Nodes of ``mask`` with an 8-neighbour outside the mask or the grid."""
    pad = np.pad(mask, 1, constant_values=False)
    inner = np.ones_like(mask)
    n1, n2 = mask.shape
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            inner &= pad[1 + a:1 + a + n1, 1 + b:1 + b + n2]
    return mask & ~inner


def _derivs(w, hx, hy):
    wx = np.full_like(w, np.nan)
    wy, wxx, wyy, wxy = (np.full_like(w, np.nan) for _ in range(4))
    c = (slice(1, -1), slice(1, -1))
    wx[c] = (w[2:, 1:-1] - w[:-2, 1:-1]) / (2 * hx)
    wy[c] = (w[1:-1, 2:] - w[1:-1, :-2]) / (2 * hy)
    wxx[c] = (w[2:, 1:-1] - 2 * w[1:-1, 1:-1] + w[:-2, 1:-1]) / hx ** 2
    wyy[c] = (w[1:-1, 2:] - 2 * w[1:-1, 1:-1] + w[1:-1, :-2]) / hy ** 2
    wxy[c] = (w[2:, 2:] - w[2:, :-2] - w[:-2, 2:] + w[:-2, :-2]) / (4 * hx * hy)
    return wx, wy, wxx, wyy, wxy


def graph_residual(w, hx, hy, mask=None):
    """Discrete translator operator ``P / W^3 - 1 / W`` on interior nodes.

    ``P = (1 + w_y^2) w_xx - 2 w_x w_y w_xy + (1 + w_x^2) w_yy``; entries on
    boundary nodes (and outside ``mask``) are NaN.
    """
    w = np.asarray(w, dtype=float)
    wx, wy, wxx, wyy, wxy = _derivs(w, hx, hy)
    W = np.sqrt(1 + wx ** 2 + wy ** 2)
    P = (1 + wy ** 2) * wxx - 2 * wx * wy * wxy + (1 + wx ** 2) * wyy
    R = P / W ** 3 - 1 / W
    if mask is not None:
        R[~mask | boundary_nodes(mask)] = np.nan
    return R


def _stencils(n1, n2, hx, hy):
    I1, I2 = sp.identity(n1, format="csr"), sp.identity(n2, format="csr")
    d1 = sp.diags([-1, 1], [-1, 1], shape=(n1, n1)) / (2 * hx)
    d2 = sp.diags([-1, 1], [-1, 1], shape=(n2, n2)) / (2 * hy)
    dd1 = sp.diags([1, -2, 1], [-1, 0, 1], shape=(n1, n1)) / hx ** 2
    dd2 = sp.diags([1, -2, 1], [-1, 0, 1], shape=(n2, n2)) / hy ** 2
    # row-major flattening: index = i * n2 + j
    Dx, Dy = sp.kron(d1, I2), sp.kron(I1, d2)
    return (Dx.tocsr(), Dy.tocsr(), sp.kron(dd1, I2).tocsr(), sp.kron(I1, dd2).tocsr(),
            sp.kron(d1, d2).tocsr())


def graphical_translator_solve(x, y, boundary_values, mask=None, tol=1e-10, max_iter=50,
                               initial=None) -> HeightField:
    """Damped Newton solve of the graphical translator equation.

    Parameters
    ----------
    x, y : 1-D arrays
        Uniform grid coordinates.
    boundary_values : array (nx, ny) or callable ``(X, Y) -> array``
        Dirichlet data; only values on boundary nodes are used.
    mask : bool array, optional
        Domain nodes (default: the full rectangle).
    tol : float
        Target for the max-norm of the discrete residual.
    max_iter : int
    initial : array, optional
        Starting iterate; defaults to the solution of ``Delta w = 1``.

    Raises
    ------
    NoConvergence
        With the last iterate and residual attached.
    """
    x, y = np.asarray(x, float), np.asarray(y, float)
    if tol < 0:
        raise InputError("tol must be non-negative")
    hx, hy = x[1] - x[0], y[1] - y[0]
    if not (np.allclose(np.diff(x), hx) and np.allclose(np.diff(y), hy)):
        raise InputError("grid spacing must be uniform")
    n1, n2 = len(x), len(y)
    mask = np.ones((n1, n2), bool) if mask is None else np.asarray(mask, bool)
    X, Y = np.meshgrid(x, y, indexing="ij")
    bv = boundary_values(X, Y) if callable(boundary_values) else np.asarray(boundary_values, float)
    bnd = boundary_nodes(mask)
    if not np.all(np.isfinite(bv[bnd])):
        raise InputError("boundary values must be finite")
    interior = mask & ~bnd
    if not interior.any():
        raise InputError("domain has no interior nodes")

    Dx, Dy, Dxx, Dyy, Dxy = _stencils(n1, n2, hx, hy)
    idx = np.flatnonzero(interior.ravel())
    w = np.zeros((n1, n2))
    w[bnd] = bv[bnd]
    if initial is None:
        # small-gradient limit of the operator: Delta w = 1 with the same data
        L = (Dxx + Dyy).tocsr()
        rhs = 1.0 - L[idx] @ w.ravel()
        w[interior] = spsolve(L[idx][:, idx].tocsc(), rhs)
    else:
        w[interior] = np.asarray(initial, float)[interior]

    def residual(wf):
        return graph_residual(wf, hx, hy)[interior]

    R = residual(w)
    res = float(np.max(np.abs(R)))
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NoConvergence(f"no convergence after {max_iter} Newton steps (residual {res:.3e})",
                                iterate=w, residual=res)
        wx, wy, wxx, wyy, wxy = (d[interior] for d in _derivs(w, hx, hy))
        W = np.sqrt(1 + wx ** 2 + wy ** 2)
        P = (1 + wy ** 2) * wxx - 2 * wx * wy * wxy + (1 + wx ** 2) * wyy
        q = (-3 * P / W ** 4 + 1 / W ** 2) / W
        cx = (2 * wx * wyy - 2 * wy * wxy) / W ** 3 + q * wx
        cy = (2 * wy * wxx - 2 * wx * wxy) / W ** 3 + q * wy
        J = (sp.diags(cx) @ Dx[idx][:, idx] + sp.diags(cy) @ Dy[idx][:, idx]
             + sp.diags((1 + wy ** 2) / W ** 3) @ Dxx[idx][:, idx]
             + sp.diags((1 + wx ** 2) / W ** 3) @ Dyy[idx][:, idx]
             + sp.diags(-2 * wx * wy / W ** 3) @ Dxy[idx][:, idx])
        delta = spsolve(J.tocsc(), -R)
        lam, accepted = 1.0, False
        for _ in range(31):
            trial = w.copy()
            trial[interior] += lam * delta
            Rt = residual(trial)
            rt = float(np.max(np.abs(Rt)))
            if np.isfinite(rt) and rt < res:
                accepted = True
                break
            lam *= 0.5
        it += 1
        if not accepted:
            raise NoConvergence(f"damped Newton stalled at residual {res:.3e}", iterate=w, residual=res)
        w, R, res = trial, Rt, rt
    return HeightField(x, y, w, mask, bnd, np.where(bnd, bv, np.nan), res, it, tol)


# -- far-field asymptotics -------------------------------------------------

@dataclass(frozen=True)
class AsymptoticFit:
    a2: float
    a_log: float
    const: float
    remainder: float
    alpha: float
    n_samples: int


def asymptotic_fit(source, r_window=(10.0, 50.0), which="upper", min_samples=16) -> AsymptoticFit:
    """Fit ``z ~ a2 r^2 + a_log log r + c`` on a radial window.

    Parameters
    ----------
    source : ProfileCurve, HeightField or (r, z) tuple
    r_window : (r0, r1)
        ``r0 >= 5``.
    which : str
        Catenoid branch.

    Returns
    -------
    AsymptoticFit
        ``remainder = max |z - fit| * r`` on the window and ``alpha = r z' / z``
        (the log-log slope) at ``r1``.
    """
    r0, r1 = map(float, r_window)
    if r0 < 5 or r1 <= r0:
        raise WindowError("window must satisfy 5 <= r0 < r1")
    if isinstance(source, ProfileCurve):
        _, rb, zb, _ = source.branch(which)
    elif isinstance(source, HeightField):
        rb, zb = source.radial_samples()
    else:
        rb, zb = (np.asarray(a, float) for a in source)
    sel = (rb >= r0) & (rb <= r1)
    if sel.sum() < min_samples:
        raise WindowError(f"only {int(sel.sum())} samples in radial window [{r0}, {r1}]")
    r, z = rb[sel], zb[sel]
    M = np.stack([r ** 2, np.log(r), np.ones_like(r)], axis=1)
    coef, *_ = np.linalg.lstsq(M, z, rcond=None)
    remainder = float(np.max(np.abs(z - M @ coef) * r))
    if isinstance(source, ProfileCurve) and r1 <= rb.max():
        z1 = source.graph(r1, which)
        s1 = np.interp(r1, rb, source.branch(which)[0])
        _, _, th = source.evaluate(s1)
        alpha = float(r1 * np.tan(th) / z1)
    else:
        # local slope of log z against log r from the samples nearest r1
        near = r >= r1 - 0.05 * (r1 - r0)
        slope = np.polyfit(np.log(r[near]), np.log(z[near]), 1)[0] if near.sum() >= 2 else np.nan
        alpha = float(slope)
    return AsymptoticFit(float(coef[0]), float(coef[1]), float(coef[2]), remainder, alpha, int(sel.sum()))


def shifted_gap(profile: ProfileCurve, reference: ProfileCurve, r_window=(1.0, 10.0), which="upper", n=200):
    """Sup distance between a branch and the best vertical shift of ``reference``.

    Both profiles are re-graphed over ``n`` radii in ``r_window``; the shift
    that minimises ``max |z - z_ref - shift|`` is the midrange of the
    difference.  Used for the small-neck limit of translating catenoids.

    Returns
    -------
    (shift, gap) : tuple of float
    """
    r = np.linspace(*map(float, r_window), n)
    d = profile.graph(r, which) - reference.graph(r)
    shift = 0.5 * (d.max() + d.min())
    return float(shift), float(0.5 * (d.max() - d.min()))


def write_profile_csv(profile: ProfileCurve, path) -> None:
    with open(path, "w") as fh:
        fh.write("s,r,z,theta\n")
        for row in zip(profile.s, profile.r, profile.z, profile.theta):
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def read_profile_csv(path, kind="paraboloid", neck=None) -> ProfileCurve:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    s = data[:, 0]
    return ProfileCurve(s, data[:, 1], data[:, 2], data[:, 3], kind, float(s[1] - s[0]), neck)


def write_heightfield_csv(hf: HeightField, path) -> None:
    X, Y = np.meshgrid(hf.x, hf.y, indexing="ij")
    with open(path, "w") as fh:
        fh.write("x,y,inside,boundary,w\n")
        for a, b, m, bd, w in zip(X.ravel(), Y.ravel(), hf.mask.ravel(), hf.boundary.ravel(), hf.values.ravel()):
            fh.write("%.17g,%.17g,%d,%d,%.17g\n" % (a, b, m, bd, w))
