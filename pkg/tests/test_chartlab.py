import numpy as np
import pytest

from translab import chartlab, verify, zoo
from translab.errors import DegenerateChart, DomainError, InputError


def flat(n=16):
    return chartlab.build_chart_grid(lambda a, b: (a, b, np.zeros_like(a)), ((0, 1), (0, 1)), (n, n))


def sphere(n, order=2):
    def ev(t, p):
        return np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)
    return chartlab.compute_fields(chartlab.build_chart_grid(ev, ((0.5, 2.5), (0.0, 3.0)), (n, n)), order)


def grim_third():
    # the middle of 65 nodes sits at pi / 3
    return zoo.grim_hyperplane(((np.pi / 3 - 0.4, np.pi / 3 + 0.4), (0.0, 1.0)), (65, 33))


def test_flat_plane_patch_normals():
    f = chartlab.compute_fields(flat())
    xi = f.xi[f.populated]
    np.testing.assert_allclose(np.abs(xi[:, 2]), 1.0, atol=1e-14)
    np.testing.assert_allclose(xi[:, :2], 0.0, atol=1e-14)


def test_flat_plane_is_totally_geodesic():
    f = chartlab.compute_fields(flat())
    m = f.populated
    assert np.all(f.H[m] == 0) and np.all(f.K[m] == 0) and np.all(f.A[m] == 0)


def test_boundary_mask_is_outer_ring():
    p = flat(10)
    assert p.boundary_mask.sum() == 4 * 10 - 4
    assert not p.boundary_mask[1:-1, 1:-1].any()


def test_grim_patch_valid():
    p = zoo.grim_hyperplane()
    assert p.shape == (64, 64)
    assert np.all(np.isfinite(p.positions))


def test_collapsed_direction_raises():
    with pytest.raises(DegenerateChart):
        chartlab.build_chart_grid(lambda a, b: (0 * a * np.cos(b), 0 * a * np.sin(b), a),
                                  ((0, 1), (0, 1)), (12, 12))


def test_resolution_and_domain_preconditions():
    with pytest.raises(InputError):
        chartlab.build_chart_grid(lambda a, b: (a, b, a), ((0, 1), (0, 1)), (4, 12))
    with pytest.raises(InputError):
        chartlab.build_chart_grid(lambda a, b: (a, b, a), ((1, 1), (0, 1)), (12, 12))


def test_unit_v_required():
    p = flat()
    with pytest.raises(InputError):
        chartlab.ChartPatch(p.u1, p.u2, p.positions, np.array([0, 0, 2.0]), p.boundary_mask)


def test_evaluator_array_output_matches_tuple():
    a = chartlab.build_chart_grid(lambda x, y: (x, y, x * y), ((0, 1), (0, 2)), (9, 11))
    b = chartlab.build_chart_grid(lambda x, y: np.stack([x, y, x * y], -1), ((0, 1), (0, 2)), (9, 11))
    np.testing.assert_array_equal(a.positions, b.positions)


def test_grim_fields_at_pi_over_3():
    f = chartlab.compute_fields(grim_third())
    i = 32
    assert abs(f.patch.u1[i] - np.pi / 3) < 1e-14
    j = slice(2, -2)
    np.testing.assert_allclose(np.abs(f.H[i, j]), 0.5, atol=1e-3)
    np.testing.assert_allclose(f.grad_u_sq[i, j], 0.75, atol=1e-3)
    np.testing.assert_allclose(f.K[i, j], 0.0, atol=1e-12)


def test_grim_populated_depth():
    f = chartlab.compute_fields(zoo.grim_hyperplane(resolution=(20, 20)))
    assert f.radius == 1
    np.testing.assert_array_equal(f.populated, chartlab.interior_mask((20, 20), 2))
    assert np.isnan(f.H[0, 5]) and np.isfinite(f.u[0, 5])


def test_fd4_populated_depth():
    f = chartlab.compute_fields(zoo.grim_hyperplane(resolution=(20, 20)), fd_order=4)
    assert f.radius == 2
    assert f.populated.sum() == (20 - 8) ** 2


@pytest.mark.parametrize("order", [2, 4])
def test_sphere_curvatures_converge(order):
    errs = []
    for n in (24, 48):
        f = sphere(n, order)
        m = f.populated
        errs.append(max(np.abs(np.abs(f.H[m]) - 2).max(), np.abs(f.K[m] - 1).max()))
    assert errs[1] < 1e-2
    assert np.log2(errs[0] / errs[1]) >= order - 0.5


def test_sphere_normal_outward():
    f = sphere(24)
    m = f.populated
    pos = f.patch.positions[m]
    assert np.all(np.einsum("ij,ij->i", f.xi[m], pos) > 0.99)


def test_normal_unit_and_orthogonal():
    f = sphere(32)
    m = f.populated
    np.testing.assert_allclose(np.linalg.norm(f.xi[m], axis=-1), 1.0, atol=1e-12)
    for k in range(2):
        assert np.abs(np.einsum("ij,ij->i", f.xi[m], f.tangents[m][:, k])).max() < 1e-12


def test_tensors_symmetric():
    f = chartlab.compute_fields(zoo.grim_hyperplane(resolution=(24, 24)))
    m = f.populated
    for T in (f.g, f.A, f.hess_u):
        assert np.abs(T[m] - np.swapaxes(T[m], -1, -2)).max() <= 1e-12
    assert np.all(np.linalg.eigvalsh(f.g[m]) > 0)


def test_gauss_equation_roundoff():
    f = sphere(24)
    assert np.nanmax(verify.gauss_equation_residual(f)) < 1e-12
    assert np.nanmax(verify.scalar_curvature_residual(f)) < 1e-12


def test_orientation_flip_invariance():
    p = zoo.grim_hyperplane(resolution=(24, 24))
    a = chartlab.compute_fields(p)
    b = chartlab.compute_fields(p, flip=True)
    m = a.populated
    np.testing.assert_allclose(b.H[m], -a.H[m], rtol=0, atol=1e-14)
    np.testing.assert_allclose(b.v_dot_xi[m], -a.v_dot_xi[m], rtol=0, atol=1e-14)
    np.testing.assert_allclose(verify.translator_residual(b)[m], verify.translator_residual(a)[m],
                               rtol=0, atol=1e-14)
    c = chartlab.compute_fields(p.flipped())
    np.testing.assert_allclose(c.H[m], -a.H[:, ::-1][m], rtol=0, atol=1e-12)


def test_laplacian_of_constant_vanishes():
    f = chartlab.compute_fields(zoo.grim_hyperplane(resolution=(24, 24)))
    lap = chartlab.laplace_beltrami(f, np.full(f.shape, 3.0))
    assert np.nanmax(np.abs(lap)) < 1e-12


def test_laplacian_u_and_H_on_grim():
    f = chartlab.compute_fields(zoo.grim_hyperplane(resolution=(96, 32)))
    x = f.patch.positions[..., 0]
    tol = 10 * f.patch.h1 ** 2
    m = np.isfinite(f.lap_u)
    np.testing.assert_allclose(f.lap_u[m], np.cos(x[m]) ** 2, rtol=0, atol=tol)
    np.testing.assert_allclose(f.lap_u[m], 1 - f.grad_u_sq[m], rtol=0, atol=tol)
    lapH = f.laplacian(f.H)
    k = np.isfinite(lapH)
    np.testing.assert_allclose(lapH[k], -np.cos(x[k]) * np.cos(2 * x[k]), rtol=0, atol=tol)


def test_laplacian_shape_check():
    f = chartlab.compute_fields(flat())
    with pytest.raises(InputError):
        chartlab.laplace_beltrami(f, np.zeros((3, 3)))


def test_diff_orders():
    x = np.linspace(0, 1, 41)
    h = x[1] - x[0]
    for order, tol in ((2, 1e-3), (4, 1e-6)):
        d = chartlab.diff(np.sin(x), 0, h, order)
        k = np.isfinite(d)
        assert np.abs(d[k] - np.cos(x[k])).max() < tol
        assert np.isnan(d[0]) and np.isnan(d[-1])
    d2 = chartlab.diff(np.sin(x), 0, h, 4, deriv=2)
    k = np.isfinite(d2)
    assert np.abs(d2[k] + np.sin(x[k])).max() < 1e-6


def test_chart_csv_roundtrip(tmp_path):
    p = zoo.grim_hyperplane(resolution=(12, 9))
    path = tmp_path / "chart.csv"
    chartlab.write_chart_csv(p, path)
    q = chartlab.read_chart_csv(path)
    np.testing.assert_array_equal(q.positions, p.positions)
    np.testing.assert_array_equal(q.u1, p.u1)
    np.testing.assert_array_equal(q.v, p.v)


def test_chart_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(InputError):
        chartlab.read_chart_csv(path)


def test_fields_csv_columns(tmp_path):
    f = chartlab.compute_fields(zoo.grim_hyperplane(resolution=(10, 10)))
    path = tmp_path / "fields.csv"
    chartlab.write_fields_csv(f, path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:4] == ["u1", "u2", "populated", "H"]
    assert len(lines) == 101


def test_grim_domain_error():
    with pytest.raises(DomainError):
        zoo.grim_hyperplane(((-1.6, 1.0), (0, 1)))
