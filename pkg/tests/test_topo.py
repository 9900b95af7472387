import numpy as np
import pytest

from translab import curves, topo, zoo
from translab.errors import InputError, NoLevelSet, NonPlanarBoundary, OpenMesh
from translab.mesh import TriMesh, euler_characteristic, icosahedron, torus


def ellipse_pts(n=96):
    return curves.ellipse(2.0, 1.0, n).points


def circle_pts(n=96):
    return curves.circle(1.0, n).points


# -- clipping and level sets -------------------------------------------------

def test_clip_sphere_hemisphere():
    m = icosahedron(subdivisions=2)
    top = topo.clip_mesh(m, [0, 0, 1], 0.1)
    assert euler_characteristic(top) == (1, 1, 0)
    lp = top.boundary_loops()[0]
    np.testing.assert_allclose(top.vertices[lp, 2], 0.1, atol=1e-15)
    assert top.vertices[:, 2].min() >= 0.1 - 1e-15


def test_clip_keep_below():
    m = icosahedron(subdivisions=2)
    low = topo.clip_mesh(m, [0, 0, 1], 0.1, keep="below")
    assert low.vertices[:, 2].max() <= 0.1 + 1e-15


def test_level_curve_paraboloid_radius(paraboloid):
    _, m = zoo.revolve(paraboloid, 128, 96, height=3.0)
    comps = topo.extract_level_curve(m, 2.0)
    assert len(comps) == 1 and comps[0].closed
    r_star = paraboloid.evaluate(paraboloid.s_at_height(2.0))[0]
    rad = np.linalg.norm(comps[0].points3d[:, :2], axis=1)
    h = np.median(m.edge_lengths())
    assert np.max(np.abs(rad - r_star)) < h
    assert comps[0].planar is not None
    assert comps[0].planar.area > 0


def test_level_curve_catenoid_two_circles(catenoid):
    _, m = zoo.revolve(catenoid, 64, 48, height=5.0)
    z_neck = catenoid.z[np.argmin(np.abs(catenoid.s))]
    comps = topo.extract_level_curve(m, z_neck + 0.05)
    assert len(comps) == 2 and all(c.closed for c in comps)
    radii = sorted(float(np.median(np.linalg.norm(c.points3d[:, :2], axis=1))) for c in comps)
    assert radii[0] == pytest.approx(1.0, abs=0.2)
    assert radii[1] > 2.0
    # concentric
    for c in comps:
        np.testing.assert_allclose(c.planar.centroid, 0, atol=1e-2)


def test_level_curve_out_of_range(truncated_paraboloid):
    top = truncated_paraboloid.vertices[:, 2].max()
    with pytest.raises(NoLevelSet):
        topo.extract_level_curve(truncated_paraboloid, top + 1)


def test_level_curve_open_component():
    # a flat strip tilted in z: every level crosses it as an open segment chain
    x, y = np.meshgrid(np.linspace(0, 1, 6), np.linspace(0, 1, 6), indexing="ij")
    from translab.mesh import grid_mesh
    m = grid_mesh(np.stack([x, y, x], -1))
    comps = topo.extract_level_curve(m, 0.45)
    assert len(comps) == 1 and not comps[0].closed
    assert comps[0].planar is None


# -- caps ----------------------------------------------------------------------

@pytest.mark.parametrize("sigma", [0.05, 0.1])
@pytest.mark.parametrize("shape", ["circle", "ellipse"])
def test_build_cap_properties(shape, sigma):
    pts = circle_pts() if shape == "circle" else ellipse_pts()
    spec, cap = topo.build_cap(pts, sigma)
    assert all(spec.properties.values()), spec.properties
    assert set(spec.properties) == {"a_collar", "b_height", "c_diameter", "d_apex_K"}
    # ring 0 is the input, the apex sits at height sigma
    np.testing.assert_array_equal(cap.vertices[:len(pts), :2], pts)
    assert cap.vertices[-1, 2] == sigma
    assert euler_characteristic(cap) == (1, 1, 0)


def test_cap_diameter_unit_circle():
    spec, cap = topo.build_cap(circle_pts(128), 0.1)
    assert spec.diagnostics["d_C"] <= 2.2 + 2 * spec.diagnostics["h"]


def test_cap_height_profile_monotone():
    spec, _ = topo.build_cap(ellipse_pts(), 0.05)
    prof = spec.diagnostics["profile"]
    t = np.linspace(0, 1, 2001)[:-1]
    assert np.all(prof.derivative(t) > 0)
    assert np.all(np.diff(prof(t)) > 0)
    eps, delta = spec.eps, spec.delta
    near0 = t[t <= eps]
    np.testing.assert_allclose(prof(near0), near0)
    near1 = t[t >= 1 - delta]
    np.testing.assert_allclose(prof(near1), np.sqrt(spec.sigma ** 2 - (1 - near1) ** 2))


def test_cap_unique_critical_vertex():
    _, cap = topo.build_cap(ellipse_pts(), 0.05)
    u = cap.vertices[:, 2]
    nb = cap.vertex_neighbours()
    apex = len(u) - 1
    for i in range(len(u)):
        if i != apex:
            assert any(u[w] > u[i] for w in nb[i])


def test_check_cap_detects_violation():
    spec, cap = topo.build_cap(circle_pts(), 0.1)
    V = cap.vertices.copy()
    V[-1, 2] = 0.5 * spec.sigma   # apex no longer highest
    props = topo.check_cap(spec, TriMesh(V, cap.faces), circle_pts())
    assert not props["b_height"]


def test_cap_rejects_bad_input():
    with pytest.raises(InputError):
        topo.build_cap(circle_pts(), 0.0)
    t = 2 * np.pi * np.arange(64) / 64
    with pytest.raises(InputError):
        topo.build_cap(np.stack([np.sin(t), np.sin(t) * np.cos(t)], 1), 0.1)


# -- capping ends and degree ---------------------------------------------------

def test_capped_paraboloid(capped_paraboloid):
    cm = capped_paraboloid
    assert cm.mesh.is_closed
    assert euler_characteristic(cm.mesh) == (2, 0, 0)
    assert len(cm.poles) == 1 and cm.poles[0].normal_sign == 1
    d = topo.gauss_degree(cm.mesh, cm.poles)
    assert (d.chi, d.genus, d.integral, d.pole_degree) == (2, 0, 1, 1)
    assert not d.mismatch
    assert cm.mesh.volume() > 0


def test_capped_catenoid(capped_catenoid):
    cm = capped_catenoid
    assert euler_characteristic(cm.mesh) == (2, 0, 0)
    assert len(cm.poles) == 2
    assert sorted(p.normal_sign for p in cm.poles) == [-1, 1]
    d = topo.gauss_degree(cm.mesh, cm.poles)
    assert (d.integral, d.pole_degree, d.n_plus) == (1, 1, 1)
    # the outer (lower-branch) loop gets the taller cap
    assert max(cm.sigmas) == pytest.approx(3 * min(cm.sigmas))


def test_genus_pole_count(capped_paraboloid, capped_catenoid):
    for cm in (capped_paraboloid, capped_catenoid):
        _, _, g = euler_characteristic(cm.mesh)
        assert g == 1 - sum(p.normal_sign > 0 for p in cm.poles)


def test_seam_is_reported(capped_paraboloid):
    assert 0 < capped_paraboloid.seam_dihedral < np.pi / 2


def test_tilted_boundary_rejected(truncated_paraboloid):
    a = np.deg2rad(10)
    R = np.array([[1, 0, 0], [0, np.cos(a), -np.sin(a)], [0, np.sin(a), np.cos(a)]])
    tilted = TriMesh(truncated_paraboloid.vertices @ R.T, truncated_paraboloid.faces)
    with pytest.raises(NonPlanarBoundary):
        topo.cap_ends(tilted)


def test_cap_ends_needs_boundary():
    with pytest.raises(InputError):
        topo.cap_ends(icosahedron())


def test_degree_sphere_and_torus():
    d = topo.gauss_degree(icosahedron())
    assert d.integral == 1 and d.pole_degree is None and not d.mismatch
    assert d.defect_error <= 1e-9 * 12
    t = torus()
    d = topo.gauss_degree(t)
    assert d.integral == 0 and d.genus == 1
    assert d.defect_error <= 1e-9 * t.n_vertices


def test_degree_open_mesh(truncated_paraboloid):
    with pytest.raises(OpenMesh):
        topo.gauss_degree(truncated_paraboloid)


def test_plane_basis():
    for v in ([0, 0, 1], [1, 0, 0], [1, 2, 3]):
        e1, e2 = topo.plane_basis(v)
        vn = np.asarray(v, float) / np.linalg.norm(v)
        np.testing.assert_allclose(np.cross(e1, e2), vn, atol=1e-15)
        assert abs(e1 @ vn) < 1e-15
