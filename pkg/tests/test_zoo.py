import numpy as np
import pytest

from translab import chartlab, verify, zoo
from translab.errors import DomainError, InputError, NoConvergence, WindowError


# -- grim reaper ---------------------------------------------------------------

def test_grim_reaper_origin():
    x, y = zoo.grim_reaper(0.0, (-1.0, 1.0), 257).T
    k = np.argmin(np.abs(x))
    assert x[k] == 0.0 and y[k] == 0.0
    assert zoo.grim_curvature(0.0) == 1.0


def test_grim_reaper_pi_over_3():
    x, y = zoo.grim_reaper(0.0, (0.0, np.pi / 3), 9).T
    assert x[-1] == pytest.approx(np.pi / 3)
    assert y[-1] == pytest.approx(np.log(2.0), abs=1e-14)


def test_grim_reaper_shift():
    x, y = zoo.grim_reaper(2.5, (-0.5, 0.5), 33).T
    np.testing.assert_allclose(y, 2.5 - np.log(np.cos(x)), rtol=0, atol=1e-15)


@pytest.mark.parametrize("dom", [(-np.pi / 2, 0.0), (0.0, 1.6), (-2.0, -1.0)])
def test_grim_reaper_domain_error(dom):
    with pytest.raises(DomainError):
        zoo.grim_reaper(0.0, dom, 16)


def test_grim_curvature_matches_discrete():
    x, y = zoo.grim_reaper(0.0, (-1.2, 1.2), 2001).T
    dy, d2y = np.gradient(y, x), np.gradient(np.gradient(y, x), x)
    kappa = d2y / (1 + dy ** 2) ** 1.5
    np.testing.assert_allclose(kappa[5:-5], zoo.grim_curvature(x[5:-5]), atol=1e-4)


def test_grim_hyperplane_min_u_on_axis():
    p = zoo.grim_hyperplane(resolution=(65, 16))
    u = p.height
    assert u.min() == 0.0
    np.testing.assert_array_equal(np.nonzero(u == 0.0)[0], 32)


def test_grim_hyperplane_single_principal_curvature():
    f = chartlab.compute_fields(zoo.grim_hyperplane(resolution=(48, 48)))
    m = f.populated
    assert np.abs(f.K[m]).max() < 1e-12
    assert np.abs(f.H[m]).min() > 0.5


# -- rotational profiles ---------------------------------------------------------

def test_paraboloid_invariants(paraboloid):
    p = paraboloid
    assert p.r[0] == 0 and p.z[0] == 0 and p.theta[0] == 0
    assert np.all(np.diff(p.r) > 0) and np.all(np.diff(p.z) > 0)
    assert p.arclength_defect() < 1e-8
    np.testing.assert_allclose(p.s, p.step * np.arange(len(p)), rtol=0, atol=1e-12)


def test_paraboloid_near_axis(paraboloid):
    _, r, z, _ = paraboloid.branch()
    sel = (r > 0.05) & (r < 0.4)
    dev = np.abs(z[sel] - r[sel] ** 2 / 4)
    assert np.all(dev <= r[sel] ** 4 / 16)


def test_paraboloid_far_field(long_paraboloid):
    _, r, z, _ = long_paraboloid.branch()
    sel = (r >= 10) & (r <= 50)
    d = z[sel] - (r[sel] ** 2 / 2 - np.log(r[sel]))
    # d converges to a constant with an O(1/r) remainder
    assert np.abs((d - d[-1]) * r[sel]).max() < 0.5


def test_catenoid_branches(catenoid):
    c = catenoid
    assert c.neck == 1.0
    assert np.all(c.r >= 1.0 - 1e-12)
    i0 = int(np.argmin(np.abs(c.s)))
    assert c.r[i0] == pytest.approx(1.0)
    assert np.cos(c.theta[i0]) == pytest.approx(0.0, abs=1e-12)
    assert c.z.min() == 0.0
    for w in ("upper", "lower"):
        s, r, z, th = c.branch(w)
        assert np.all(np.diff(r[5:]) > 0)
    # the neck is the only vertical tangent
    assert np.sum(np.abs(np.cos(c.theta)) < 1e-6) <= 1


def test_catenoid_far_field_shifted():
    c = zoo.rotational_profile("catenoid", s_max=150.0, step=1e-3)
    fits = [zoo.asymptotic_fit(c, (10.0, 15.0), which=w) for w in ("upper", "lower")]
    for f in fits:
        assert f.a2 == pytest.approx(0.5, rel=1e-3)
        assert f.a_log == pytest.approx(-1.0, rel=0.05)
    assert abs(fits[0].const - fits[1].const) > 1.0


def test_catenoid_graph_and_height(catenoid):
    z5 = catenoid.graph(np.array([3.0]), "upper")
    s = catenoid.s_at_height(float(z5[0]), "upper")
    r, z, _ = catenoid.evaluate(s)
    assert r == pytest.approx(3.0, abs=1e-9)


def test_profile_errors():
    with pytest.raises(InputError):
        zoo.rotational_profile("torus")
    with pytest.raises(InputError):
        zoo.rotational_profile("paraboloid", s_max=-1)
    with pytest.raises(InputError):
        zoo.rotational_profile("catenoid", neck=0.0)


def test_evaluate_matches_samples(paraboloid):
    r, z, th = paraboloid.evaluate(paraboloid.s[100:110])
    np.testing.assert_allclose(r, paraboloid.r[100:110], atol=1e-14)
    np.testing.assert_allclose(z, paraboloid.z[100:110], atol=1e-14)
    with pytest.raises(InputError):
        paraboloid.evaluate(1e6)


def test_profile_csv_roundtrip(tmp_path, paraboloid):
    path = tmp_path / "p.csv"
    zoo.write_profile_csv(paraboloid, path)
    q = zoo.read_profile_csv(path)
    np.testing.assert_array_equal(q.r, paraboloid.r)
    np.testing.assert_array_equal(q.theta, paraboloid.theta)


# -- revolve ---------------------------------------------------------------------

def test_revolve_rejects_coarse(paraboloid):
    with pytest.raises(InputError):
        zoo.revolve(paraboloid, 4)


def test_revolve_paraboloid_mesh(truncated_paraboloid):
    from translab.mesh import euler_characteristic
    m = truncated_paraboloid
    assert euler_characteristic(m) == (1, 1, 0)
    m.check_orientation()     # raises if inconsistent
    lp = m.boundary_loops()[0]
    np.testing.assert_array_equal(m.vertices[lp, 2], 3.0)


def test_revolve_catenoid_mesh(catenoid):
    from translab.mesh import euler_characteristic
    _, m = zoo.revolve(catenoid, 32, 12, height=4.0)
    assert euler_characteristic(m) == (0, 2, 0)


def test_revolved_chart_translator_residual(paraboloid):
    res = []
    for n in (32, 64):
        f = chartlab.compute_fields(zoo.revolved_chart(paraboloid, (0.2, 4.0), n, n))
        res.append(np.nanmax(verify.translator_residual(f)))
    assert res[1] < 2e-3
    assert np.log2(res[0] / res[1]) > 1.5


def test_apex_critical_point(paraboloid):
    f = chartlab.compute_fields(zoo.apex_chart(paraboloid, 0.5, 33))
    c = 16
    assert f.grad_u_sq[c, c] < 1e-12
    assert abs(abs(f.H[c, c]) - 1) < 1e-4


def test_revolved_H_matches_cos_theta(paraboloid):
    ch = zoo.revolved_chart(paraboloid, (0.5, 3.0), 64, 64)
    f = chartlab.compute_fields(ch)
    _, _, th = paraboloid.evaluate(ch.u1)
    m = f.populated
    Hs = np.broadcast_to(np.cos(th)[:, None], f.shape)
    np.testing.assert_allclose(f.H[m], Hs[m], atol=2e-3)


# -- graphical translators -----------------------------------------------------

def _disc_problem(profile, n):
    x = np.linspace(-5.5, 5.5, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    R = np.hypot(X, Y)
    mask = zoo.disc_mask(x, x, 5.0)
    exact = np.zeros_like(R)
    exact[mask] = profile.graph(R[mask])
    return x, mask, exact


def test_disc_matches_revolved_profile():
    prof = zoo.rotational_profile("paraboloid", s_max=20.0, step=1e-3)
    x, mask, exact = _disc_problem(prof, 51)
    hf = zoo.graphical_translator_solve(x, x, exact, mask)
    h = x[1] - x[0]
    err = np.abs(hf.values - exact)[mask].max()
    assert err <= 10 * (h ** 2 + prof.step ** 2)
    assert hf.residual_norm <= hf.tol
    assert np.all(np.isfinite(hf.values[mask]))


def test_profile_in_discrete_pde():
    prof = zoo.rotational_profile("paraboloid", s_max=20.0, step=1e-3)
    x, mask, exact = _disc_problem(prof, 101)
    h = x[1] - x[0]
    res = zoo.graph_residual(exact, h, h, mask)
    assert np.nanmax(np.abs(res)) <= 10 * (h ** 2 + prof.step ** 2)


def test_strip_matches_grim():
    x = np.linspace(-1.0, 1.0, 41)
    y = np.linspace(0.0, 0.5, 11)
    hf = zoo.graphical_translator_solve(x, y, lambda X, Y: -np.log(np.cos(X)))
    X, _ = np.meshgrid(x, y, indexing="ij")
    assert np.abs(hf.values + np.log(np.cos(X))).max() < 10 * (x[1] - x[0]) ** 2


def test_unreachable_tolerance():
    x = np.linspace(-50, 50, 41)
    with pytest.raises(NoConvergence) as info:
        zoo.graphical_translator_solve(x, x, np.zeros((41, 41)), tol=0.0, max_iter=8)
    assert info.value.iterate is not None and info.value.residual is not None


def test_nonuniform_grid_rejected():
    x = np.array([0, 0.1, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
    with pytest.raises(InputError):
        zoo.graphical_translator_solve(x, x, np.zeros((8, 8)))


# -- asymptotic fit ------------------------------------------------------------------

def test_asymptotic_fit_paraboloid(long_paraboloid):
    f = zoo.asymptotic_fit(long_paraboloid, (10.0, 50.0))
    assert f.a2 == pytest.approx(0.5, rel=0.01)
    assert f.a_log == pytest.approx(-1.0, rel=0.02)
    assert 1.95 <= f.alpha <= 2.05
    assert f.n_samples >= 16


def test_asymptotic_fit_window_guards(paraboloid):
    with pytest.raises(WindowError):
        zoo.asymptotic_fit(paraboloid, (1.0, 3.0))
    with pytest.raises(WindowError):
        zoo.asymptotic_fit(paraboloid, (10.0, 50.0))    # profile too short


def test_asymptotic_fit_strip_rejected():
    x = np.linspace(-1.0, 1.0, 21)
    y = np.linspace(0.0, 0.5, 6)
    hf = zoo.graphical_translator_solve(x, y, lambda X, Y: -np.log(np.cos(X)))
    with pytest.raises(WindowError):
        zoo.asymptotic_fit(hf, (5.0, 10.0))


def test_catenoid_small_neck_limit():
    # both branches approach vertically shifted paraboloids as the neck closes
    par = zoo.rotational_profile("paraboloid", s_max=60.0, step=1e-3)
    gaps = {"upper": [], "lower": []}
    for R in (0.5, 0.1, 0.02):
        c = zoo.rotational_profile("catenoid", s_max=60.0, step=1e-3, neck=R)
        for w in gaps:
            gaps[w].append(zoo.shifted_gap(c, par, (1.0, 10.0), which=w)[1])
    for w, g in gaps.items():
        assert np.all(np.diff(g) < 0), w
        assert g[-1] < 0.02, w
