import json

import numpy as np
import pytest

from translab import planes, topo, zoo
from translab.errors import EmptySweep, InputError
from translab.mesh import TriMesh, icosahedron

E1 = np.array([1.0, 0.0, 0.0])


def slab(x1, n=8):
    y, z = np.meshgrid(np.linspace(0, 1, n), np.linspace(0, 1, n), indexing="ij")
    return np.stack([np.full(y.size, x1), y.ravel(), z.ravel()], 1)


def cfg(bin_size=0.2, tol=0.0, t_grid=(0.0,)):
    return planes.SweepConfig(E1, np.asarray(t_grid, float), bin_size, tol)


@pytest.fixture(scope="module")
def sphere():
    return icosahedron(subdivisions=3)


@pytest.fixture(scope="module")
def capped(capped_paraboloid):
    return capped_paraboloid.mesh


# -- configuration -------------------------------------------------------------

def test_direction_orthogonal_to_v():
    for th in np.linspace(0, 2 * np.pi, 7):
        w = planes.direction(th)
        assert abs(w @ [0, 0, 1]) < 1e-15
        assert np.linalg.norm(w) == pytest.approx(1.0)
    np.testing.assert_allclose(planes.direction(0.0), E1)


def test_config_validation():
    with pytest.raises(InputError):
        planes.SweepConfig([0, 0.1, 1], np.array([0.0]), 0.1, 0.0)
    with pytest.raises(InputError):
        planes.SweepConfig(E1, np.array([0.0, 1.0]), 0.1, 0.0)
    with pytest.raises(InputError):
        planes.SweepConfig(E1, np.array([0.0]), 0.0, 0.0)
    with pytest.raises(InputError):
        planes.SweepConfig(E1, np.array([0.0]), 0.1, -1.0)


def test_default_config(capped):
    c = planes.default_config(capped, E1)
    med = np.median(capped.edge_lengths())
    assert c.bin_size == pytest.approx(2 * med)
    assert c.tolerance == c.bin_size
    assert 0.0 in c.t_grid
    assert np.all(np.diff(c.t_grid) < 0)
    ea, eb = c.plane_axes()
    np.testing.assert_allclose(np.cross(ea, eb), E1, atol=1e-15)


# -- the order relation --------------------------------------------------------

def test_slabs_ordered():
    r = planes.rhs_relation(slab(1.0), slab(0.0), cfg())
    assert r.holds and not r.vacuous
    assert r.margin == pytest.approx(1.0)
    assert not planes.rhs_relation(slab(0.0), slab(1.0), cfg()).holds


def test_sphere_not_reflexive(sphere):
    r = planes.rhs_relation(sphere.vertices, sphere.vertices, cfg())
    assert not r.holds
    assert r.witness is not None


def test_disjoint_shadows_vacuous():
    B = slab(0.0) + [0, 5, 0]
    r = planes.rhs_relation(slab(1.0), B, cfg())
    assert r.holds and r.vacuous and r.n_shared == 0


def test_tolerance_slack():
    r = planes.rhs_relation(slab(0.0), slab(0.05), cfg(tol=0.1))
    assert r.holds and r.margin == pytest.approx(-0.05)


# -- sweep sets ------------------------------------------------------------------

def test_sweep_sets_beyond_range(sphere):
    s = planes.sweep_sets(sphere, E1, 2.0)
    assert s.plus is None and s.plus_reflected is None
    assert s.minus is not None
    assert s.section == []


def test_sweep_sets_sphere_symmetric(sphere):
    s = planes.sweep_sets(sphere, E1, 0.0)
    h = np.median(sphere.edge_lengths())
    assert planes.reflection_distance(s.plus_reflected, s.minus, 0.25 * h) < h
    assert len(s.section) == 1 and s.section[0].closed


def test_reflect():
    P = np.array([[3.0, 1.0, 2.0]])
    np.testing.assert_allclose(planes.reflect(P, E1, 1.0), [[-1.0, 1.0, 2.0]])


def test_paraboloid_section_single_curve(capped):
    s = planes.sweep_sets(capped, E1, 1.0)
    assert len(s.section) == 1
    assert s.section[0].closed
    assert s.plus.vertices[:, 0].min() >= 1.0 - 1e-12
    assert s.minus.vertices[:, 0].max() <= 1.0 + 1e-12


# -- graph property ----------------------------------------------------------------

def test_hemisphere_is_graph(sphere):
    # the icosphere has edges parallel to e1 across x1 = 0, whose triangles
    # are vertical; clip one edge length away from the equator
    hemi = topo.clip_mesh(sphere, E1, 0.1)
    assert planes.is_graph_over(hemi, E1)[0]
    near = topo.clip_mesh(sphere, E1, 0.05)
    assert not planes.is_graph_over(near, E1)[0]


def test_full_sphere_not_graph(sphere):
    ok, wit = planes.is_graph_over(sphere, E1)
    assert not ok and wit is not None


def test_vertical_triangle_not_graph():
    # the normal is e1: projections along e2 or e3 degenerate to a segment
    m = TriMesh([[0, 0, 0], [0, 1, 0], [0, 0, 1]], [[0, 1, 2]])
    assert planes.is_graph_over(m, E1)[0]
    assert not planes.is_graph_over(m, [0, 1, 0])[0]
    assert not planes.is_graph_over(m, [0, 0, 1])[0]


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0, 1.5])
def test_paraboloid_upper_half_graph(capped, t):
    plus = planes.sweep_sets(capped, E1, t).plus
    assert planes.is_graph_over(plus, E1, v=[0, 0, 1])[0]


# -- the sweep ---------------------------------------------------------------------

@pytest.mark.parametrize("k", range(4))
def test_capped_paraboloid_symmetric(capped, k):
    r = planes.alexandrov_sweep(capped, theta=2 * np.pi * k / 4 + 0.1)
    med = np.median(capped.edge_lengths())
    assert r.symmetric_at_zero
    assert r.reflection_distance <= 2 * med
    assert r.offset == pytest.approx(0.0, abs=r.config.bin_size)
    assert r.in_A[0] and r.raw_is_suffix
    assert r.A_interval[1] == np.inf


@pytest.mark.parametrize("s", [0.6, -0.9])
def test_translation_equivariance(capped, s):
    base = planes.alexandrov_sweep(capped, theta=0.0)
    moved = planes.alexandrov_sweep(capped.translated(s * E1), theta=0.0)
    assert moved.offset - base.offset == pytest.approx(s, abs=base.config.bin_size)


def test_mirror_symmetric_mesh():
    m = icosahedron(subdivisions=2)
    # an ellipsoid is symmetric about x1 = 0 but not rotational
    m = TriMesh(m.vertices * [1.0, 2.0, 0.7], m.faces)
    r = planes.alexandrov_sweep(m, theta=0.0)
    assert r.symmetric_at_zero
    assert r.reflection_distance <= 2 * m.edge_lengths().max()


def test_noise_breaks_symmetry(capped):
    for seed in range(3):
        r = planes.alexandrov_sweep(planes.perturb_mesh(capped, 0.05, seed=seed), theta=0.0)
        assert r.symmetric_at_zero is False
        assert r.zero_witness is not None
        assert r.raw_is_suffix or r.notes


def test_suffix_invariant_reported(capped):
    r = planes.alexandrov_sweep(capped, theta=0.3)
    k = int(np.sum(r.in_A))
    assert np.all(r.in_A[:k]) and not np.any(r.in_A[k:])


def test_empty_sweep(capped):
    c = planes.SweepConfig(E1, np.array([100.0, 99.0]), 0.3, 0.3)
    with pytest.raises(EmptySweep):
        planes.alexandrov_sweep(capped, config=c)
    with pytest.raises(InputError):
        planes.alexandrov_sweep(capped)


def test_sweep_exports(tmp_path, capped):
    r = planes.alexandrov_sweep(capped, theta=0.7)
    r.write_json(tmp_path / "s.json")
    r.write_csv(tmp_path / "s.csv")
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["symmetric_at_zero"] is True
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0].split(",")[:4] == ["t", "is_graph", "dominance", "margin"]
    assert len(rows) == 1 + len(r.t)


def test_diagnostics_reported(capped):
    r = planes.alexandrov_sweep(capped, theta=0.0)
    assert r.normal_separation is not None and r.normal_separation >= 0
    assert r.near_contacts >= 0


def test_perturb_deterministic(capped):
    a = planes.perturb_mesh(capped, 0.05, seed=3)
    b = planes.perturb_mesh(capped, 0.05, seed=3)
    np.testing.assert_array_equal(a.vertices, b.vertices)
    rel = planes.perturb_mesh(capped, 0.01, seed=3, relative=True)
    assert np.std(rel.vertices - capped.vertices) > np.std(
        planes.perturb_mesh(capped, 0.01, seed=3).vertices - capped.vertices)


# -- far field ---------------------------------------------------------------------

def test_far_field_gap_positive(long_paraboloid):
    fit = zoo.asymptotic_fit(long_paraboloid, (10.0, 50.0))
    gap = planes.far_field_gap(fit, t2=10.0)
    assert gap.positive
    assert np.all(np.diff(gap.lower_bound) > 0)


def test_far_field_gap_range(long_paraboloid):
    fit = zoo.asymptotic_fit(long_paraboloid, (10.0, 50.0))
    with pytest.raises(InputError):
        planes.far_field_gap(fit, t2=10.0, t_values=[15.0])
