import numpy as np
import pytest

from translab import chartlab, topo, verify, zoo


@pytest.fixture(scope="session")
def paraboloid():
    return zoo.rotational_profile("paraboloid", s_max=10.0, step=1e-3)


@pytest.fixture(scope="session")
def long_paraboloid():
    # long enough to reach r = 50 for the far-field fit
    return zoo.rotational_profile("paraboloid", s_max=1300.0, step=1e-3)


@pytest.fixture(scope="session")
def catenoid():
    return zoo.rotational_profile("catenoid", s_max=10.0, step=1e-3, neck=1.0)


@pytest.fixture(scope="session")
def truncated_paraboloid(paraboloid):
    return zoo.revolve(paraboloid, 64, 32, height=3.0)[1]


@pytest.fixture(scope="session")
def capped_paraboloid(truncated_paraboloid):
    return topo.cap_ends(truncated_paraboloid, sigma=0.1)


@pytest.fixture(scope="session")
def capped_catenoid(catenoid):
    _, m = zoo.revolve(catenoid, 64, 24, height=5.0)
    return topo.cap_ends(m, sigma=0.1)


@pytest.fixture(scope="session")
def grim_ladder():
    out = []
    for n in (32, 64, 128):
        f = chartlab.compute_fields(zoo.grim_hyperplane(resolution=(n, n)))
        out.append(f)
    return out


@pytest.fixture(scope="session")
def grim_reports(grim_ladder):
    reps = [verify.all_residuals(f, region_w=f.patch.positions[..., 0] > 0.3) for f in grim_ladder]
    return verify.convergence_order(reps)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# -- acceptance summary ----------------------------------------------------------

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number, title, checks, elapsed=None, limit=None):
        checks = dict(checks)
        if limit is not None:
            checks[f"runtime {elapsed:.1f}s <= {limit:g}s"] = elapsed <= limit
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        t = "" if elapsed is None else f" ({elapsed:.1f}s)"
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}{t}"
        if failed:
            line += " -- failed: " + "; ".join(failed)
        _ACCEPTANCE.append(line)
        print(line)
        return ok, failed
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
