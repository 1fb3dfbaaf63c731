import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from csvortex.checks import random_direction, random_profile
from csvortex.energy import (DiscreteFunctional, cutoff, energy, grad_energy, rescale,
                             residuals, scaled_functional, translate_profile)
from csvortex.grid import GridError, Params, RadialProfile, make_grid
from csvortex.limit import eval_wk, soliton_energy, solve_k_branches


def vortex_gaussian(grid, a=1.0):
    return RadialProfile.from_function(grid, lambda r: a * r * np.exp(-r * r / 2))


def h_vortex(r):
    return 0.25 * (1 - (1 + r * r) * np.exp(-r * r))


def test_zero_profile():
    g = make_grid(5.0, 100)
    z = RadialProfile.zeros(g)
    P = Params(2.0, 0.3, 2)
    e = energy(z, P)
    assert (e.kinetic, e.mass, e.chern, e.power, e.total) == (0, 0, 0, 0, 0)
    assert np.all(grad_energy(z, P) == 0)
    r = residuals(z, P)
    assert (r.el_norm, r.pohozaev, r.nehari) == (0, 0, 0)


@pytest.mark.parametrize("N", [0, 1, 2])
def test_energy_against_closed_form(N):
    # u = r e^{-r^2/2}: kinetic pi/2, mass pi omega/2, power (p=2) -(2pi/3) * 3 sqrt(pi)/(8 * 1.5^2.5)
    g = make_grid(10.0, 4000)
    omega = 0.7
    e = energy(vortex_gaussian(g), Params(2.0, omega, N))
    chern = np.pi * quad(lambda r: (h_vortex(r) - N) ** 2 * r * np.exp(-r * r), 0, 10,
                         epsabs=1e-14)[0]
    power = -(2 * np.pi / 3) * 3 * np.sqrt(np.pi) / (8 * 1.5 ** 2.5)
    assert e.kinetic == pytest.approx(np.pi / 2, rel=1e-5)
    assert e.mass == pytest.approx(np.pi * omega / 2, rel=1e-5)
    assert e.power == pytest.approx(power, rel=1e-5)
    assert e.chern == pytest.approx(chern, rel=1e-5)
    assert e.total == pytest.approx(np.pi / 2 * (1 + omega) + power + chern, rel=1e-5)


def test_gaussian_energy_grid_refinement():
    P = Params(2.0, 1.0, 0)
    gauss = lambda r: np.exp(-r * r / 2)
    coarse = energy(RadialProfile.from_function(make_grid(8.0, 4000), gauss), P).total
    fine = energy(RadialProfile.from_function(make_grid(8.0, 32000), gauss), P).total
    assert coarse == pytest.approx(fine, rel=1e-5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.floats(0.05, 3.0),
       st.floats(1.1, 2.9))
def test_breakdown_signs_and_additivity(seed, N, omega, p):
    g = make_grid(20.0, 400)
    u = random_profile(g, np.random.default_rng(seed))
    e = energy(u, Params(p, omega, N))
    assert e.kinetic >= 0 and e.mass >= 0 and e.chern >= 0 and e.power <= 0
    assert e.total == pytest.approx(e.kinetic + e.mass + e.chern + e.power, rel=1e-14, abs=1e-14)


def test_gradient_zero_at_origin_node():
    g = make_grid(10.0, 200)
    grad = grad_energy(vortex_gaussian(g), Params(2.0, 0.2, 1))
    assert grad[0] == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.sampled_from([1.5, 2.0, 2.5]))
def test_gradient_matches_central_differences(seed, N, p):
    rng = np.random.default_rng(seed)
    g = make_grid(20.0, 600, "geometric", 1.003)
    f = DiscreteFunctional(g, Params(p, 0.2, N))
    u = random_profile(g, rng).values
    v = random_direction(g, rng)
    eps = 1e-6
    fd = (f.value(u + eps * v) - f.value(u - eps * v)) / (2 * eps)
    an = float(f.gradient(u) @ v)
    assert abs(fd - an) <= 1e-6 * max(abs(an), abs(fd))


def test_hessian_vector_matches_gradient_differences():
    rng = np.random.default_rng(11)
    g = make_grid(20.0, 800)
    for N in (0, 1, 3):
        f = DiscreteFunctional(g, Params(2.0, 0.2, N))
        u = random_profile(g, rng).values
        v = random_direction(g, rng)
        eps = 1e-5
        fd = (f.gradient(u + eps * v) - f.gradient(u - eps * v)) / (2 * eps)
        np.testing.assert_allclose(f.hessp(u, v), fd, atol=1e-7 * np.abs(fd).max())


def test_h_adjoint_is_transpose():
    rng = np.random.default_rng(2)
    g = make_grid(3.0, 30, "geometric", 1.05)
    f = DiscreteFunctional(g, Params(2.0, 1.0, 0))
    n = g.nodes.size
    A = np.column_stack([f.h_of(e) for e in np.eye(n)])
    y = rng.standard_normal(n)
    np.testing.assert_allclose(f.h_adjoint(y), A.T @ y, atol=1e-14)


def test_nehari_equals_gradient_pairing():
    rng = np.random.default_rng(5)
    g = make_grid(20.0, 800)
    for N in (0, 1, 2):
        P = Params(2.0, 0.3, N)
        u = random_profile(g, rng)
        res = residuals(u, P)
        assert res.nehari == pytest.approx(float(grad_energy(u, P) @ u.values), rel=1e-11)


def test_pohozaev_nonzero_off_solution():
    g = make_grid(10.0, 1000)
    res = residuals(vortex_gaussian(g), Params(2.0, 1.0, 0))
    assert abs(res.pohozaev) > 1e-2


def test_json_keys():
    g = make_grid(10.0, 200)
    u = vortex_gaussian(g)
    P = Params(2.0, 1.0, 1)
    assert set(json.loads(energy(u, P).to_json())) == {"kinetic", "mass", "chern", "power",
                                                       "total"}
    assert {"el_norm", "pohozaev", "nehari"} <= set(json.loads(residuals(u, P).to_json()))


def test_cutoff_shape():
    r = np.array([-3.0, -1.5, 0.0, 0.5, 1.0, 1.25, 2.0, 5.0])
    np.testing.assert_allclose(cutoff(r), [1, 0.5, 0, 0, 0, 0.25, 1, 1])
    x = np.linspace(-4, 4, 8001)
    assert np.max(np.abs(np.diff(cutoff(x)) / np.diff(x))) <= 1 + 1e-12


def test_translate_zero_and_errors():
    g = make_grid(40.0, 400)
    prof = translate_profile(lambda x: 0 * x, 10.0, g)
    assert np.all(prof.values == 0)
    with pytest.raises(GridError):
        translate_profile(lambda x: np.exp(-np.abs(x)), 2.0, g)
    with pytest.raises(GridError, match="enlarge"):
        translate_profile(lambda x: np.exp(-np.abs(x)), 38.0, g)


def test_translate_samples_match_callable():
    g = make_grid(40.0, 4000)
    x = np.linspace(-20, 20, 40001)
    U = lambda t: np.exp(-t * t)
    a = translate_profile(U, 15.0, g)
    b = translate_profile((x, U(x)), 15.0, g)
    np.testing.assert_allclose(a.values, b.values, atol=1e-6)
    assert a.values[0] == 0.0


def test_translate_slope_tends_to_limit_energy():
    p, omega = 2.0, 0.05
    k2 = solve_k_branches(p, omega).k2
    J = soliton_energy(p, k2, omega)
    g = make_grid(60.0, 6000)
    P = Params(p, omega, 0)
    U = lambda x: eval_wk(p, k2, x)
    vals = {rho: energy(translate_profile(U, rho, g, 1e-6), P).total for rho in (15, 20, 25, 30)}
    ratios = [vals[r] / (2 * np.pi * r * J) for r in (15, 20, 25, 30)]
    # I/(2 pi rho J) = 1 - C/(2 pi rho J) + ...: approaches 1 monotonically
    diffs = [abs(x - 1) for x in ratios]
    assert all(a > b for a, b in zip(diffs, diffs[1:]))
    offsets = [vals[r] - 2 * np.pi * r * J for r in (15, 20, 25, 30)]
    steps = np.abs(np.diff(offsets))
    assert np.all(steps[1:] < steps[:-1])
    assert offsets[-1] < 0


def test_translate_at_threshold_energy_per_radius_vanishes():
    from csvortex.limit import compute_omega0
    p = 2.0
    w0 = compute_omega0(p)
    k2 = solve_k_branches(p, w0).k2
    g = make_grid(80.0, 8000)
    P = Params(p, w0, 1)
    U = lambda x: eval_wk(p, k2, x)
    per = [abs(energy(translate_profile(U, rho, g, 1e-8), P).total) / (2 * np.pi * rho)
           for rho in (10.0, 20.0, 40.0)]
    assert per[0] > per[1] > per[2]


def test_rescale_identity_at_unit_frequency():
    g = make_grid(10.0, 500)
    u = vortex_gaussian(g)
    P = Params(2.0, 1.0, 1)
    v, lam = rescale(u, P)
    assert lam == 1.0 and v is u
    assert energy(v, P).total == pytest.approx(scaled_functional(u, P, lam), rel=1e-14)


@pytest.mark.parametrize("N", [0, 1])
def test_rescale_identity(N):
    g = make_grid(20.0, 32000)
    u = RadialProfile.from_function(g, lambda r: r * np.exp(-r * r / 2))
    P = Params(2.0, 0.25, N)
    v, lam = rescale(u, P)
    assert lam == pytest.approx(0.25 ** -0.5)
    lhs = energy(v, P).total
    rhs = P.omega * scaled_functional(u, P, lam)
    assert lhs == pytest.approx(rhs, rel=1e-5)


def test_rescale_zero_and_out_of_grid():
    g = make_grid(10.0, 500)
    P = Params(2.0, 0.25, 1)
    z, lam = rescale(RadialProfile.zeros(g), P)
    assert energy(z, P).total == 0.0 and scaled_functional(RadialProfile.zeros(g), P, lam) == 0.0
    wide = RadialProfile.from_function(g, lambda r: r * np.exp(-r / 4))
    with pytest.raises(GridError):
        rescale(wide, Params(2.0, 4.0, 1))
