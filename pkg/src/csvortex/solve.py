"""Critical points of the discrete energy.

Descent is preconditioned by the Sobolev-type metric returned by
:meth:`DiscreteFunctional.local_banded` (kinetic + mass + ``N^2 u^2/r``), which
makes the step size essentially grid independent.  Once the gradient is
small, a Newton-MINRES polish with the exact Hessian drives the
Euler-Lagrange norm to round-off.

The mountain pass is a string method between ``0`` and a negative-energy
profile: interior knots descend, the highest knot climbs along the path
tangent, the path is re-parameterized by arclength after every sweep, and the
highest knot is finally Newton-polished onto the saddle.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.sparse.linalg import LinearOperator, minres

from . import __version__
from .energy import DiscreteFunctional, EnergyBreakdown, Residuals, energy, residuals, \
    translate_profile
from .grid import GridError, Params, RadialGrid, RadialProfile
from .limit import compute_m, compute_omega0, compute_omega1, eval_wk, solve_k_branches

log = logging.getLogger(__name__)

STATUSES = ("converged_nontrivial", "converged_zero", "diverging_unbounded", "max_iter")


class SolveError(RuntimeError):
    pass


class GeometryError(SolveError):
    """No energy barrier between 0 and the low endpoint."""


@dataclass
class SolveOptions:
    tol: Optional[float] = None           # default 1e-8 * sqrt(n)
    max_iter: int = 20000
    floor: float = -1e6
    method: str = "lbfgs"                 # "gd" or "lbfgs"
    memory: int = 10
    armijo: float = 1e-4
    newton: bool = True
    newton_switch: float = 1e-3           # relative gradient level that starts Newton
    newton_max: int = 40
    zero_tol: float = 1e-6
    escape_fraction: float = 0.85
    log_every: int = 25
    knots: int = 21
    mp_sweeps: int = 4000
    mp_step: float = 0.5
    mp_switch: float = 1e-4

    def __post_init__(self):
        if self.method not in ("gd", "lbfgs"):
            raise SolveError(f"unknown method {self.method!r}")
        if self.max_iter < 1 or self.memory < 1 or self.knots < 3:
            raise SolveError("max_iter, memory must be >= 1 and knots >= 3")
        if not (0.0 < self.armijo < 0.5):
            raise SolveError(f"armijo constant must lie in (0, 1/2), got {self.armijo}")
        if self.tol is not None and not self.tol > 0:
            raise SolveError(f"tol must be positive, got {self.tol}")
        if not (0.0 < self.escape_fraction <= 1.0):
            raise SolveError("escape_fraction must lie in (0, 1]")

    def resolved_tol(self, grid: RadialGrid) -> float:
        return self.tol if self.tol is not None else 1e-8 * math.sqrt(grid.n)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SolveReport:
    params: Params
    profile: RadialProfile
    breakdown: EnergyBreakdown
    residuals: Residuals
    iterations: int
    status: str
    kind: str = "minimize"
    message: str = ""
    escape_log: list = field(default_factory=list)

    @property
    def total(self) -> float:
        return self.breakdown.total

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "kind": self.kind,
            "params": self.params.to_dict(),
            "grid": self.profile.grid.describe(),
            "status": self.status,
            "iterations": self.iterations,
            "message": self.message,
            "breakdown": self.breakdown.to_dict(),
            "residuals": self.residuals.to_dict(),
            "sup_norm": self.profile.sup_norm(),
            "escape_log": [list(x) for x in self.escape_log],
        }

    def to_json(self, **extra) -> str:
        d = self.to_dict()
        d.update(extra)
        return json.dumps(d, indent=2, sort_keys=True)


def _report(params, grid, u, iters, status, kind, message="", escape_log=None):
    prof = RadialProfile(grid, u)
    return SolveReport(params, prof, energy(prof, params), residuals(prof, params), iters,
                       status, kind, message, list(escape_log or []))


class _Metric:
    """Banded Sobolev metric on the free nodes ``1..n``."""

    def __init__(self, f: DiscreteFunctional):
        self.ab = f.local_banded()
        self.n = self.ab.shape[1]

    def solve(self, g: np.ndarray) -> np.ndarray:
        out = np.zeros_like(g)
        out[1:] = solve_banded((1, 1), self.ab, g[1:])
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        x = v[1:]
        y = self.ab[1] * x
        y[:-1] += self.ab[0, 1:] * x[1:]
        y[1:] += self.ab[2, :-1] * x[:-1]
        out = np.zeros_like(v)
        out[1:] = y
        return out

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(a @ self.apply(b))


def escape_radius(grid: RadialGrid, u: np.ndarray) -> float:
    """Mass-weighted mean radius ``int r |u|^2 dx / int |u|^2 dx``."""
    w = grid.weights * grid.r * u * u
    tot = float(w.sum())
    return float((w @ grid.r) / tot) if tot > 0 else 0.0


def newton_polish(f: DiscreteFunctional, u: np.ndarray, tol: float, max_iter: int = 40,
                  metric: Optional[_Metric] = None, keep_sign: bool = True):
    """Damped Newton on ``grad = 0`` with MINRES solves; merit is ``|grad|``.

    Works for minima and saddles alike.  Returns ``(u, iterations, |grad|)``.
    """
    metric = metric or _Metric(f)
    n = u.size - 1
    M = LinearOperator((n, n), matvec=lambda x: solve_banded((1, 1), metric.ab, x),
                       dtype=float)
    g = f.gradient(u)
    gn = float(np.linalg.norm(g))
    it = 0
    for it in range(1, max_iter + 1):
        if gn <= tol:
            return u, it - 1, gn
        uu = u

        def mv(x):
            full = np.zeros(n + 1)
            full[1:] = x
            return f.hessp(uu, full)[1:]

        H = LinearOperator((n, n), matvec=mv, dtype=float)
        step, _ = minres(H, -g[1:], M=M, rtol=1e-12, maxiter=2000)
        d = np.zeros_like(u)
        d[1:] = step
        t = 1.0
        while t > 1e-6:
            trial = u + t * d
            if keep_sign:
                trial = np.abs(trial)
            gt = f.gradient(trial)
            gtn = float(np.linalg.norm(gt))
            if gtn < gn:
                break
            t *= 0.5
        else:
            return u, it, gn
        u, g, gn = trial, gt, gtn
    return u, it, gn


def _lbfgs_direction(g, S, Y, metric: _Metric):
    q = g.copy()
    alphas = []
    for s, y in reversed(list(zip(S, Y))):
        rho = 1.0 / float(y @ s)
        a = rho * float(s @ q)
        alphas.append((a, rho, s, y))
        q -= a * y
    if S:
        s, y = S[-1], Y[-1]
        gamma = float(s @ y) / float(y @ metric.solve(y))
    else:
        gamma = 1.0
    r = gamma * metric.solve(q)
    for a, rho, s, y in reversed(alphas):
        b = rho * float(y @ r)
        r += (a - b) * s
    return -r


def minimize(params: Params, start: RadialProfile, opts: Optional[SolveOptions] = None
             ) -> SolveReport:
    """Monotone descent on the discrete energy from ``start``.

    Every accepted step is followed by ``u -> |u|``, which leaves the energy
    unchanged.  Stops on a small gradient, on an energy below ``opts.floor``,
    or when the mass has moved outward into the boundary layer at ``R_max``
    (the grid cannot follow a translation to infinity any further).  The mass
    centre radius is logged every ``opts.log_every`` iterations.
    """
    opts = opts or SolveOptions()
    grid = start.grid
    f = DiscreteFunctional(grid, params)
    metric = _Metric(f)
    tol = opts.resolved_tol(grid)
    u = np.abs(start.values)
    E, g = f.value_and_gradient(u)
    g0 = max(float(np.linalg.norm(g)), 1e-300)
    S: list = []
    Y: list = []
    escapes: list = []
    r_esc = opts.escape_fraction * grid.r_max

    def done(status, it, msg=""):
        return _report(params, grid, u, it, status, "minimize", msg, escapes)

    rc0 = escape_radius(grid, u)

    def trapped():
        # mass pushed into the outer boundary layer: the grid, not the energy, stopped it
        i = int(np.argmax(u))
        return u[i] > opts.zero_tol and grid.r[i] > r_esc and escape_radius(grid, u) > rc0

    for it in range(opts.max_iter + 1):
        gn = float(np.linalg.norm(g))
        if it % opts.log_every == 0 or gn <= tol:
            rc = escape_radius(grid, u)
            escapes.append((it, rc, E))
            log.debug("iter %d energy %.10g |grad| %.3e radius %.4g", it, E, gn, rc)
        if E < opts.floor:
            return done("diverging_unbounded", it, f"energy {E:.6g} below floor {opts.floor}")
        if trapped():
            return done("diverging_unbounded", it,
                        f"mass centre moved from {rc0:.4g} to {escape_radius(grid, u):.4g} "
                        f"against R_max={grid.r_max:g} with energy decreasing to {E:.6g}")
        if gn <= tol:
            zero = float(np.max(np.abs(u))) < opts.zero_tol
            return done("converged_zero" if zero else "converged_nontrivial", it)
        if it == opts.max_iter:
            break
        if opts.newton and gn <= opts.newton_switch * g0 and float(np.max(u)) > opts.zero_tol:
            un, k, gnn = newton_polish(f, u, tol, opts.newton_max, metric)
            En = f.value(un)
            if gnn <= tol and En <= E + 1e-12 * max(1.0, abs(E)):
                u, E, g = un, En, f.gradient(un)
                continue
        if opts.method == "lbfgs" and S:
            d = _lbfgs_direction(g, S, Y, metric)
            if float(g @ d) >= 0:
                S.clear(), Y.clear()
                d = -metric.solve(g)
        else:
            d = -metric.solve(g)
        slope = float(g @ d)
        t = 1.0
        while True:
            trial = u + t * d
            Et = f.value(trial)
            if Et <= E + opts.armijo * t * slope:
                break
            t *= 0.5
            if t < 1e-14:
                return done("max_iter", it, "line search failed")
        trial = np.abs(trial)
        gt = f.gradient(trial)
        s, y = trial - u, gt - g
        if float(s @ y) > 1e-14 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            S.append(s), Y.append(y)
            if len(S) > opts.memory:
                S.pop(0), Y.pop(0)
        u, E, g = trial, Et, gt
    return done("max_iter", opts.max_iter, "iteration cap reached")


def _reparametrize(path: np.ndarray, metric: _Metric) -> np.ndarray:
    diffs = np.diff(path, axis=0)
    seg = np.array([math.sqrt(max(metric.inner(d, d), 0.0)) for d in diffs])
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return path
    s /= s[-1]
    target = np.linspace(0.0, 1.0, path.shape[0])
    out = np.empty_like(path)
    j = 0
    for i, t in enumerate(target):
        while j < len(s) - 2 and s[j + 1] < t:
            j += 1
        span = s[j + 1] - s[j]
        a = 0.0 if span == 0 else (t - s[j]) / span
        out[i] = (1 - a) * path[j] + a * path[j + 1]
    out[0], out[-1] = path[0], path[-1]
    return out


@dataclass
class PathState:
    endpoints: tuple
    knots: np.ndarray
    energies: np.ndarray
    max_index: int


def mountain_pass(params: Params, u_low: RadialProfile, opts: Optional[SolveOptions] = None
                  ) -> SolveReport:
    """Saddle point between 0 and ``u_low`` by path deformation."""
    opts = opts or SolveOptions()
    grid = u_low.grid
    f = DiscreteFunctional(grid, params)
    metric = _Metric(f)
    tol = opts.resolved_tol(grid)
    low = np.abs(u_low.values)
    E_low = f.value(low)
    if not E_low < 0:
        raise GeometryError(
            f"endpoint energy {E_low:.6g} is not negative at omega={params.omega}: "
            "no mountain-pass geometry")
    K = opts.knots
    ts = np.linspace(0.0, 1.0, K)
    path = ts[:, None] * low[None, :]
    energies = np.array([f.value(x) for x in path])
    if energies[1:-1].max() <= 0.0:
        raise GeometryError(f"no energy barrier along the path at omega={params.omega}")
    state = PathState((path[0], path[-1]), path, energies, int(np.argmax(energies)))
    sweep = 0
    for sweep in range(1, opts.mp_sweeps + 1):
        imax = int(np.argmax(state.energies[1:-1])) + 1
        state.max_index = imax
        for j in range(1, K - 1):
            x = state.knots[j]
            g = f.gradient(x)
            d = -metric.solve(g)
            if j == imax:
                tau = state.knots[j + 1] - state.knots[j - 1]
                tn = math.sqrt(metric.inner(tau, tau))
                if tn > 0:
                    tau = tau / tn
                    # climb along the tangent, descend orthogonally (in the metric)
                    d = d - 2.0 * float(metric.apply(tau) @ d) * tau
                x_new = np.abs(x + opts.mp_step * d)
            else:
                E0 = state.energies[j]
                t = opts.mp_step
                while t > 1e-8:
                    x_new = np.abs(x + t * d)
                    if f.value(x_new) <= E0 + opts.armijo * t * float(g @ d):
                        break
                    t *= 0.5
            state.knots[j] = x_new
        climber = state.knots[imax].copy()
        state.knots = _reparametrize(state.knots, metric)
        state.knots[imax] = climber
        state.energies = np.array([f.value(x) for x in state.knots])
        imax = int(np.argmax(state.energies[1:-1])) + 1
        state.max_index = imax
        top = state.knots[imax]
        g = f.gradient(top)
        gn = float(np.linalg.norm(g))
        rel = math.sqrt(max(float(g @ metric.solve(g)), 0.0))
        if sweep % opts.log_every == 0:
            log.debug("sweep %d max energy %.10g |grad| %.3e", sweep, state.energies[imax], gn)
        if gn <= tol or rel <= opts.mp_switch:
            break
    top = state.knots[state.max_index]
    u, k, gn = newton_polish(f, top, tol, opts.newton_max, metric) if opts.newton \
        else (top, 0, float(np.linalg.norm(f.gradient(top))))
    if gn <= tol:
        zero = float(np.max(np.abs(u))) < opts.zero_tol
        status = "converged_zero" if zero else "converged_nontrivial"
    else:
        status = "max_iter"
    return _report(params, grid, u, sweep + k, status, "mountain_pass",
                   f"path maximum at knot {state.max_index} of {K}")


# ---------------------------------------------------------------------------
# regime probes


def gaussian_start(grid: RadialGrid, amplitude: float, center: float, width: float,
                   vortex: int = 0) -> RadialProfile:
    """A bump ``a * g(r) * exp(-(r-c)^2 / (2 s^2))`` with ``g(r) = r / sqrt(r^2 + 1)``."""
    r = grid.r
    vals = amplitude * (r / np.sqrt(r * r + 1.0)) * np.exp(-(r - center) ** 2 / (2 * width ** 2))
    vals[0] = 0.0
    return RadialProfile(grid, vals)


def soliton_start(params: Params, grid: RadialGrid, rho: float, omega_branch=None
                  ) -> RadialProfile:
    """Translate of the upper-branch soliton ``w_k2`` centred at ``rho``.

    ``omega_branch`` picks the branch frequency; defaults to ``params.omega``
    when that lies below the tangency value, else to ``omega0``.
    """
    p = params.p
    m = compute_m(p)
    w = params.omega if omega_branch is None else omega_branch
    if w >= compute_omega1(p, m):
        w = compute_omega0(p, m)
    k2 = solve_k_branches(p, w, m).k2
    return translate_profile(lambda x: eval_wk(p, k2, x), rho, grid)


def default_starts(params: Params, grid: RadialGrid, seed: int = 0, count: int = 10
                   ) -> list[RadialProfile]:
    """A reproducible basket: soliton translates plus random Gaussian bumps."""
    rng = np.random.default_rng(seed)
    starts = []
    for rho in (0.25 * grid.r_max, 0.4 * grid.r_max):
        try:
            starts.append(soliton_start(params, grid, rho))
        except GridError:
            pass
    while len(starts) < count:
        starts.append(gaussian_start(grid, rng.uniform(0.3, 3.0),
                                     rng.uniform(0.0, 0.5 * grid.r_max),
                                     rng.uniform(0.5, 4.0)))
    return starts


def _min_over(params, starts, opts):
    reports = [minimize(params, s, opts) for s in starts]
    return min(reports, key=lambda r: r.total), reports


def minimal_energy(params: Params, starts: Sequence[RadialProfile],
                   opts: Optional[SolveOptions] = None) -> SolveReport:
    return _min_over(params, starts, opts)[0]


def _sweep_point(args):
    params, grid, seed, count, opts = args
    best = minimal_energy(params, default_starts(params, grid, seed, count), opts)
    return params.omega, best


def sweep(p: float, N: int, omegas, grid: RadialGrid, opts: Optional[SolveOptions] = None,
          seed: int = 0, count: int = 4, workers: int = 1) -> list[tuple[float, SolveReport]]:
    """Minimal energy over a start basket at each frequency."""
    jobs = [(Params(p, float(w), N), grid, seed, count, opts) for w in omegas]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(_sweep_point, jobs))
    return [_sweep_point(j) for j in jobs]


def estimate_omega_tilde(p: float, N: int, grid: RadialGrid,
                         opts: Optional[SolveOptions] = None, omega_lo: Optional[float] = None,
                         omega_hi: Optional[float] = None, resolution: float = 1e-3,
                         seed: int = 0, count: int = 4) -> float:
    """Upper end of the window above ``omega0`` where the minimal energy is negative.

    Bisects on the sign of the basket minimum.  Rejects brackets starting at
    or below ``omega0``, where the energy is unbounded below.
    """
    w0 = compute_omega0(p)
    lo = w0 * (1 + 1e-3) if omega_lo is None else omega_lo
    if lo <= w0:
        raise SolveError(f"omega_lo={lo} is not above omega0={w0}: energy unbounded below")
    hi = 2.0 * compute_omega1(p) if omega_hi is None else omega_hi

    def neg(w):
        params = Params(p, w, N)
        return minimal_energy(params, default_starts(params, grid, seed, count), opts).total < 0

    if not neg(lo):
        raise SolveError(f"minimal energy is not negative at omega_lo={lo}")
    if neg(hi):
        raise SolveError(f"minimal energy still negative at omega_hi={hi}")
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if neg(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class ProbeReport:
    params: Params
    statuses: list
    mountain_pass: list
    collapsed: bool

    def to_dict(self) -> dict:
        return {"version": __version__, "params": self.params.to_dict(),
                "statuses": self.statuses, "mountain_pass": self.mountain_pass,
                "collapsed": self.collapsed}


def probe_nonexistence(params: Params, starts: Sequence[RadialProfile],
                       opts: Optional[SolveOptions] = None) -> ProbeReport:
    """Run descent (and a mountain pass where a negative level exists) from every start."""
    statuses, mp = [], []
    for s in starts:
        rep = minimize(params, s, opts)
        statuses.append(rep.status)
        if rep.total < 0:
            try:
                mp.append(mountain_pass(params, rep.profile, opts).status)
            except GeometryError as exc:
                mp.append(f"no_geometry: {exc}")
        else:
            mp.append("no_negative_level")
    collapsed = all(s == "converged_zero" for s in statuses)
    return ProbeReport(params, statuses, mp, collapsed)


def min_omega_for_positivity(p: float, l: float) -> float:
    """Smallest ``omega >= 0`` with ``omega s^2 + s^4 - A s^(p+1) >= 0`` for all ``s``.

    ``A = (p-1) l / (p+1) + 1 >= 1``; equivalently ``omega >= A s^(p-1) - s^2``,
    maximized at ``s* = (A (p-1) / 2)^(1/(3-p))``.
    """
    if not (1.0 < p < 3.0):
        raise SolveError(f"p must lie in (1, 3), got {p}")
    if not l > 0:
        raise SolveError(f"l must be positive, got {l}")
    A = (p - 1.0) * l / (p + 1.0) + 1.0
    s = (A * (p - 1.0) / 2.0) ** (1.0 / (3.0 - p))
    return max(A * s ** (p - 1.0) - s * s, 0.0)
