"""Seeded property suites behind the ``check`` command."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import DiscreteFunctional, energy, residuals, translate_profile
from .gauge import check_fundamental_inequality
from .grid import Params, RadialGrid, RadialProfile, make_grid
from .limit import (compute_omega0, eval_wk, limit_constants, limit_ode_residual,
                    soliton_energy, solve_k_branches)
from .solve import minimize, mountain_pass, soliton_start


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def random_profile(grid: RadialGrid, rng: np.random.Generator, bumps: int = 3) -> RadialProfile:
    """Sum of random Gaussian bumps times a factor vanishing linearly at 0."""
    r = grid.r
    delta = rng.uniform(0.2, 2.0)
    vals = np.zeros_like(r)
    for _ in range(bumps):
        a = rng.uniform(0.1, 3.0) * rng.choice([-1.0, 1.0])
        c = rng.uniform(0.0, 0.4 * grid.r_max)
        s = rng.uniform(0.5, 4.0)
        vals += a * np.exp(-(r - c) ** 2 / (2 * s * s))
    vals *= r / np.sqrt(r * r + delta * delta)
    vals[0] = 0.0
    return RadialProfile(grid, vals)


def random_direction(grid: RadialGrid, rng: np.random.Generator) -> np.ndarray:
    v = random_profile(grid, rng, bumps=2).values.copy()
    return v / np.max(np.abs(v))


def slope_fit(rhos, values) -> tuple[float, float, float]:
    """Fit ``s rho + c + a / rho`` through three or more points; returns ``(s, c, a)``."""
    rhos = np.asarray(rhos, dtype=float)
    A = np.stack([rhos, np.ones_like(rhos), 1.0 / rhos], axis=1)
    sol, *_ = np.linalg.lstsq(A, np.asarray(values, dtype=float), rcond=None)
    return float(sol[0]), float(sol[1]), float(sol[2])


def check_inequality(seed: int, count: int = 1000) -> CheckResult:
    rng = np.random.default_rng(seed)
    grid = make_grid(40.0, 2000)
    worst = 0.0
    fails = 0
    for _ in range(count):
        u = random_profile(grid, rng)
        N = int(rng.integers(0, 4))
        res = check_fundamental_inequality(u, Params(2.0, 1.0, N))
        if res.rhs > 0:
            worst = max(worst, res.lhs / res.rhs)
        fails += not res.holds
    return CheckResult("fundamental_inequality", fails == 0,
                       f"{count} profiles, {fails} violations, max lhs/rhs={worst:.4f}")


def check_gradient(seed: int, count: int = 50, eps: float = 1e-6, tol: float = 1e-6
                   ) -> CheckResult:
    rng = np.random.default_rng(seed + 1)
    grid = make_grid(20.0, 1000)
    worst = 0.0
    for i in range(count):
        params = Params(2.0, 0.2, i % 3)
        f = DiscreteFunctional(grid, params)
        u = random_profile(grid, rng).values
        v = random_direction(grid, rng)
        fd = (f.value(u + eps * v) - f.value(u - eps * v)) / (2 * eps)
        an = float(f.gradient(u) @ v)
        worst = max(worst, abs(fd - an) / max(abs(an), abs(fd), 1e-300))
    return CheckResult("gradient_vs_finite_differences", worst <= tol,
                       f"{count} profiles, max relative error {worst:.3e} (tol {tol:g})")


def check_branches(p: float = 2.0) -> CheckResult:
    consts = limit_constants(p)
    worst_eq, worst_ode = 0.0, 0.0
    for omega in np.linspace(0.05, 0.999, 12) * consts.omega1:
        br = solve_k_branches(p, omega, consts.m)
        q = (5.0 - p) / (p - 1.0)
        for k in (br.k1, br.k2):
            worst_eq = max(worst_eq, abs(k - omega - 0.25 * consts.m ** 2 * k ** q))
            worst_ode = max(worst_ode, float(np.max(np.abs(limit_ode_residual(p, k, omega)))))
    ok = worst_eq <= 1e-12 and worst_ode <= 1e-6
    return CheckResult("branch_residuals", ok,
                       f"k-equation residual {worst_eq:.2e}, limit ODE residual {worst_ode:.2e}")


def check_translate_slope(p: float = 2.0, N: int = 1, omega: float = 0.05) -> CheckResult:
    grid = make_grid(80.0, 8000)
    k2 = solve_k_branches(p, omega).k2
    J = soliton_energy(p, k2, omega)
    params = Params(p, omega, N)
    rhos = (20.0, 25.0, 30.0)
    vals = [energy(translate_profile(lambda x: eval_wk(p, k2, x), rho, grid, 1e-8),
                   params).total for rho in rhos]
    s, _, _ = slope_fit(rhos, vals)
    err = abs(s - 2 * np.pi * J) / abs(2 * np.pi * J)
    return CheckResult("translate_slope", err <= 0.05,
                       f"slope {s:.6g} vs 2 pi J {2 * np.pi * J:.6g} (rel err {err:.2e})")


def check_identities(p: float = 2.0, N: int = 1, omega: float = 0.12) -> CheckResult:
    grid = make_grid(40.0, 4000)
    params = Params(p, omega, N)
    lo = minimize(params, soliton_start(params, grid, 20.0))
    mp = mountain_pass(params, lo.profile)
    tol = 1e-8 * np.sqrt(grid.n)
    bad = []
    for rep in (lo, mp):
        rp, rn = rep.residuals.relative()
        if rep.status != "converged_nontrivial" or rep.residuals.el_norm > tol \
                or rp > 1e-3 or rn > 1e-3:
            bad.append(rep.kind)
    ok = not bad and lo.total < 0 < mp.total
    return CheckResult("critical_point_identities", ok,
                       f"minimizer E={lo.total:.6g}, saddle E={mp.total:.6g}, "
                       f"pohozaev rel {lo.residuals.relative()[0]:.2e}/"
                       f"{mp.residuals.relative()[0]:.2e}" + (f", failed: {bad}" if bad else ""))


def check_threshold(p: float = 2.0) -> CheckResult:
    from .limit import bisect_energy_sign_change
    w0 = compute_omega0(p)
    est = bisect_energy_sign_change(p)
    return CheckResult("omega0_sign_change", abs(est - w0) <= 1e-8,
                       f"bisection {est:.12f} vs closed form {w0:.12f}")


def run_all(seed: int) -> list[CheckResult]:
    return [
        check_inequality(seed),
        check_gradient(seed),
        check_branches(),
        check_threshold(),
        check_translate_slope(),
        check_identities(),
    ]
