import json

import numpy as np
import pytest

from csvortex.energy import DiscreteFunctional
from csvortex.grid import Params, RadialProfile, make_grid
from csvortex.limit import compute_omega0
from csvortex.solve import (STATUSES, GeometryError, SolveError, SolveOptions, default_starts,
                            escape_radius, estimate_omega_tilde, gaussian_start,
                            min_omega_for_positivity, minimize, mountain_pass,
                            probe_nonexistence, soliton_start)


@pytest.fixture(scope="module")
def two_solutions():
    grid = make_grid(40.0, 4000)
    params = Params(2.0, 0.12, 1)
    lo = minimize(params, soliton_start(params, grid, 20.0))
    mp = mountain_pass(params, lo.profile)
    return grid, params, lo, mp


def test_zero_start_is_zero():
    grid = make_grid(20.0, 500)
    rep = minimize(Params(2.0, 0.5, 1), RadialProfile.zeros(grid))
    assert rep.status == "converged_zero" and rep.iterations == 0
    assert rep.total == 0.0


def test_small_start_collapses_to_zero():
    grid = make_grid(20.0, 1000)
    rep = minimize(Params(2.0, 1.0, 1), gaussian_start(grid, 0.05, 4.0, 1.5))
    assert rep.status == "converged_zero"
    assert rep.profile.sup_norm() < 1e-6


@pytest.mark.parametrize("method", ["lbfgs", "gd"])
def test_energy_log_is_monotone(method):
    grid = make_grid(40.0, 2000)
    opts = SolveOptions(method=method, log_every=1, max_iter=300, newton=False)
    rep = minimize(Params(2.0, 0.12, 1), gaussian_start(grid, 1.5, 15.0, 3.0), opts)
    energies = [e for _, _, e in rep.escape_log]
    assert np.all(np.diff(energies) <= 1e-12 * max(1.0, abs(energies[0])))
    assert rep.status in STATUSES


def test_minimizer_is_negative_nonnegative_critical(two_solutions):
    grid, params, lo, _ = two_solutions
    assert lo.status == "converged_nontrivial"
    assert lo.total < 0
    assert np.all(lo.profile.values >= 0) and lo.profile.sup_norm() > 0.1
    assert lo.residuals.el_norm <= 1e-8 * np.sqrt(grid.n)
    rp, rn = lo.residuals.relative()
    assert rp <= 1e-3 and rn <= 1e-3


def test_mountain_pass_is_positive_and_distinct(two_solutions):
    grid, params, lo, mp = two_solutions
    assert mp.status == "converged_nontrivial" and mp.kind == "mountain_pass"
    assert mp.total > 0
    assert mp.residuals.el_norm <= 1e-8 * np.sqrt(grid.n)
    rp, rn = mp.residuals.relative()
    assert rp <= 1e-3 and rn <= 1e-3
    assert np.max(np.abs(mp.profile.values - lo.profile.values)) > 0.1


def test_second_variation_signs(two_solutions):
    _, params, lo, mp = two_solutions
    f = DiscreteFunctional(lo.profile.grid, params)
    v = mp.profile.values
    # the saddle itself is a descent direction of the second variation
    assert float(v @ f.hessp(v, v)) < 0
    rng = np.random.default_rng(0)
    w = lo.profile.values
    for _ in range(5):
        d = rng.standard_normal(w.size) * w
        assert float(d @ f.hessp(w, d)) > 0


def test_mountain_pass_requires_negative_endpoint():
    grid = make_grid(20.0, 500)
    params = Params(2.0, 0.12, 1)
    with pytest.raises(GeometryError):
        mountain_pass(params, RadialProfile.zeros(grid))
    with pytest.raises(GeometryError):
        mountain_pass(params, gaussian_start(grid, 0.1, 5.0, 1.0))


def test_unbounded_regime_escapes():
    grid = make_grid(40.0, 4000)
    params = Params(2.0, 0.05, 1)
    rep = minimize(params, soliton_start(params, grid, 16.0))
    assert rep.status == "diverging_unbounded"
    radii = [r for _, r, _ in rep.escape_log]
    energies = [e for _, _, e in rep.escape_log]
    assert radii[-1] > radii[0] + 5
    assert energies[-1] < energies[0]


def test_floor_triggers_divergence():
    grid = make_grid(40.0, 2000)
    params = Params(2.0, 0.05, 1)
    start = soliton_start(params, grid, 16.0)
    rep = minimize(params, start, SolveOptions(floor=0.0))
    assert rep.status == "diverging_unbounded" and "floor" in rep.message


def test_escape_radius_of_translate():
    grid = make_grid(40.0, 4000)
    u = soliton_start(Params(2.0, 0.05, 0), grid, 20.0)
    assert escape_radius(grid, u.values) == pytest.approx(20.0, abs=0.5)


def test_collapse_regime_probe():
    grid = make_grid(20.0, 1000)
    params = Params(2.0, 5.0, 1)
    rep = probe_nonexistence(params, default_starts(params, grid, seed=3, count=4))
    assert rep.collapsed
    assert rep.mountain_pass == ["no_negative_level"] * 4
    assert json.loads(json.dumps(rep.to_dict()))["params"]["N"] == 1


def test_default_starts_reproducible():
    grid = make_grid(40.0, 500)
    params = Params(2.0, 0.12, 1)
    a = default_starts(params, grid, seed=5)
    b = default_starts(params, grid, seed=5)
    assert len(a) == 10
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.values, y.values)
        assert x.values[0] == 0.0


@pytest.mark.parametrize("p,l,expected", [(2.0, 3.0, 1.0), (2.0, 6.0, 2.25)])
def test_min_omega_exact(p, l, expected):
    assert min_omega_for_positivity(p, l) == expected


@pytest.mark.parametrize("p,l", [(1.5, 2.0), (2.0, 3.0), (2.5, 4.0), (2.9, 1.0)])
def test_min_omega_scan(p, l):
    w = min_omega_for_positivity(p, l)
    A = (p - 1) * l / (p + 1) + 1
    s_star = (A * (p - 1) / 2) ** (1 / (3 - p))
    s = np.linspace(0, 3 * s_star, 400001)
    g = lambda om: om * s ** 2 + s ** 4 - A * s ** (p + 1)
    assert g(w).min() >= -1e-9
    assert g(w - 1e-3).min() < 0


@pytest.mark.parametrize("p,l", [(1.0, 3.0), (2.0, 0.0)])
def test_min_omega_rejects(p, l):
    with pytest.raises(SolveError):
        min_omega_for_positivity(p, l)


def test_omega_tilde_rejects_low_bracket():
    grid = make_grid(20.0, 200)
    with pytest.raises(SolveError, match="unbounded"):
        estimate_omega_tilde(2.0, 1, grid, omega_lo=compute_omega0(2.0))


@pytest.mark.parametrize("kwargs", [dict(method="newton"), dict(max_iter=0), dict(knots=2),
                                    dict(armijo=0.7), dict(tol=-1.0),
                                    dict(escape_fraction=0.0)])
def test_options_validation(kwargs):
    with pytest.raises(SolveError):
        SolveOptions(**kwargs)


def test_default_tolerance_scales_with_grid():
    assert SolveOptions().resolved_tol(make_grid(40.0, 4000)) == pytest.approx(1e-8 * 4000 ** 0.5)
    assert SolveOptions(tol=1e-5).resolved_tol(make_grid(40.0, 4000)) == 1e-5


def test_report_json(two_solutions):
    _, _, lo, _ = two_solutions
    doc = json.loads(lo.to_json(seed=0))
    assert doc["status"] == "converged_nontrivial" and doc["seed"] == 0
    assert {"version", "params", "grid", "breakdown", "residuals", "escape_log"} <= set(doc)
    assert doc["breakdown"]["total"] == lo.total
