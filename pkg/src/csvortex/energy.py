"""The discrete energy functional, its exact gradient and diagnostics.

On a radial grid with nodal values ``u_i`` the energy is

    kinetic = pi * sum_cells r_mid (u_{i+1} - u_i)^2 / dr      (exact for P1)
    mass    = pi * omega * sum_i w_i r_i u_i^2
    chern   = pi * sum_i w_i (h_i - N)^2 u_i^2 / r_i
    power   = -2 pi / (p+1) * sum_i w_i r_i |u_i|^(p+1)

with ``w`` the trapezoid weights and ``h`` the cumulative trapezoid integral of
``r u^2 / 2``.  The gradient below differentiates exactly this sum, so it
matches finite differences of :func:`energy` to round-off, and
``<grad, u>`` reproduces the discrete Nehari functional identically.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .gauge import TWO_PI, inverse_radius
from .grid import GridError, Params, RadialGrid, RadialProfile


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    mass: float
    chern: float
    power: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class Residuals:
    el_norm: float
    pohozaev: float
    nehari: float
    scale: float

    def relative(self) -> tuple[float, float]:
        """Pohozaev and Nehari residuals divided by ``int |u|^(p+1)``."""
        if self.scale == 0.0:
            return abs(self.pohozaev), abs(self.nehari)
        return abs(self.pohozaev) / self.scale, abs(self.nehari) / self.scale

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class DiscreteFunctional:
    """Energy, gradient and Hessian-vector products on raw nodal arrays.

    Node 0 is pinned: every returned gradient or Hessian product has a zero
    first entry.  Used directly by the solvers; the module-level functions
    wrap it for :class:`RadialProfile` inputs.
    """

    def __init__(self, grid: RadialGrid, params: Params):
        self.grid = grid
        self.params = params
        r = grid.r
        w = grid.weights
        dr = grid.spacing
        self.r = r
        self.dr = dr
        self.kappa = np.pi * 0.5 * (r[:-1] + r[1:]) / dr
        self.wr = w * r
        self.q = np.pi * w * inverse_radius(r)
        # h = A @ (u^2): A_{ik} = (r_k/4) (dr_{k-1}[1<=k<=i] + dr_k[k<=i-1])
        self._left = np.zeros_like(r)
        self._left[1:] = 0.25 * r[1:] * dr
        self._right = np.zeros_like(r)
        self._right[:-1] = 0.25 * r[:-1] * dr

    # ---- the nonlocal map s -> h and its adjoint ----
    def h_of(self, s: np.ndarray) -> np.ndarray:
        out = np.zeros_like(s)
        out[1:] = np.cumsum(0.5 * self.dr * (0.5 * self.r[:-1] * s[:-1]
                                             + 0.5 * self.r[1:] * s[1:]))
        return out

    def h_adjoint(self, y: np.ndarray) -> np.ndarray:
        tail = np.cumsum(y[::-1])[::-1]           # tail_k = sum_{i>=k} y_i
        out = self._left * tail
        out[:-1] += self._right[:-1] * tail[1:]
        return out

    # ---- energy pieces ----
    def parts(self, u: np.ndarray) -> tuple[float, float, float, float]:
        p, omega, N = self.params.p, self.params.omega, self.params.N
        du = np.diff(u)
        kinetic = float(np.sum(self.kappa * du * du))
        s = u * u
        mass = float(np.pi * omega * np.dot(self.wr, s))
        h = self.h_of(s)
        chern = float(np.dot(self.q, (h - N) ** 2 * s))
        power = float(-TWO_PI / (p + 1.0) * np.dot(self.wr, np.abs(u) ** (p + 1.0))) + 0.0
        return kinetic, mass, chern, power

    def value(self, u: np.ndarray) -> float:
        return float(sum(self.parts(u)))

    def gradient(self, u: np.ndarray) -> np.ndarray:
        p, omega, N = self.params.p, self.params.omega, self.params.N
        g = np.zeros_like(u)
        flux = 2.0 * self.kappa * np.diff(u)
        g[1:] += flux
        g[:-1] -= flux
        g += TWO_PI * omega * self.wr * u
        g -= TWO_PI * self.wr * np.abs(u) ** (p - 1.0) * u
        s = u * u
        hm = self.h_of(s) - N
        gs = self.q * hm * hm + self.h_adjoint(2.0 * self.q * hm * s)
        g += 2.0 * u * gs
        g[0] = 0.0
        return g

    def value_and_gradient(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        return self.value(u), self.gradient(u)

    def hessp(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Exact Hessian of the discrete energy applied to ``v``."""
        p, omega, N = self.params.p, self.params.omega, self.params.N
        v = np.array(v, dtype=float)
        v[0] = 0.0
        out = np.zeros_like(u)
        flux = 2.0 * self.kappa * np.diff(v)
        out[1:] += flux
        out[:-1] -= flux
        out += TWO_PI * omega * self.wr * v
        out -= TWO_PI * p * self.wr * np.abs(u) ** (p - 1.0) * v
        s = u * u
        hm = self.h_of(s) - N
        ds = 2.0 * u * v
        dh = self.h_of(ds)
        gs = self.q * hm * hm + self.h_adjoint(2.0 * self.q * hm * s)
        dgs = 2.0 * self.q * hm * dh + self.h_adjoint(2.0 * self.q * (dh * s + hm * ds))
        out += 2.0 * v * gs + 2.0 * u * dgs
        out[0] = 0.0
        return out

    def local_banded(self, shift: float = 0.0) -> np.ndarray:
        """Tridiagonal part of the Hessian at ``u = 0`` on nodes ``1..n``.

        Returned in ``scipy.linalg.solve_banded`` layout ``(1, 1)``.  This is
        kinetic plus mass plus the ``N^2 u^2 / r`` piece: a symmetric positive
        definite Sobolev-type metric used to precondition descent.
        """
        omega, N = self.params.omega, self.params.N
        k = self.kappa
        n = self.r.size - 1
        diag = np.zeros(n)
        diag += 2.0 * k
        diag[:-1] += 2.0 * k[1:]
        diag += TWO_PI * (omega + shift) * self.wr[1:]
        diag += 2.0 * self.q[1:] * N * N
        off = -2.0 * k[1:]
        ab = np.zeros((3, n))
        ab[0, 1:] = off
        ab[1] = diag
        ab[2, :-1] = off
        return ab


def energy(u: RadialProfile, params: Params) -> EnergyBreakdown:
    kin, mass, chern, power = DiscreteFunctional(u.grid, params).parts(u.values)
    return EnergyBreakdown(kin, mass, chern, power, kin + mass + chern + power)


def grad_energy(u: RadialProfile, params: Params) -> np.ndarray:
    """Derivative of the discrete energy with respect to each nodal value."""
    return DiscreteFunctional(u.grid, params).gradient(u.values)


def residuals(u: RadialProfile, params: Params) -> Residuals:
    """Euler-Lagrange norm plus the Pohozaev and Nehari-type identities.

    ``pohozaev = G + C - (p-1)/(p+1) P`` and
    ``nehari = G + omega M + 3 C + 2 N D - P`` where, over the plane,
    ``G = int |grad u|^2``, ``M = int u^2``, ``C = int u^2/|x|^2 (h-N)^2``,
    ``D = int u^2/|x|^2 (h-N)`` and ``P = int |u|^(p+1)``.
    """
    f = DiscreteFunctional(u.grid, params)
    p, omega, N = params.p, params.omega, params.N
    uu = u.values
    kin, mass, chern, power = f.parts(uu)
    G = 2.0 * kin
    C = 2.0 * chern
    M = 2.0 * mass / omega
    P = -(p + 1.0) * power
    s = uu * uu
    D = 2.0 * float(np.dot(f.q, (f.h_of(s) - N) * s))
    poho = G + C - (p - 1.0) / (p + 1.0) * P
    nehari = G + omega * M + 3.0 * C + 2.0 * N * D - P
    el = float(np.linalg.norm(f.gradient(uu)))
    return Residuals(el, float(poho), float(nehari), float(P))


def cutoff(r) -> np.ndarray:
    """Lipschitz cutoff: 0 on ``|r| <= 1``, 1 on ``|r| >= 2``, linear between."""
    return np.clip(np.abs(np.asarray(r, dtype=float)) - 1.0, 0.0, 1.0)


def _as_callable(U):
    if callable(U):
        return U
    x, vals = U
    x = np.asarray(x, dtype=float)
    vals = np.asarray(vals, dtype=float)
    return lambda t: np.interp(t, x, vals, left=0.0, right=0.0)


def translate_profile(U, rho: float, grid: RadialGrid, tail_tol: float = 1e-3) -> RadialProfile:
    """Samples of ``cutoff(r) * U(r - rho)`` on ``grid``.

    ``U`` is an even, decaying one-dimensional profile given as a callable or
    as a pair ``(x, values)`` of dense samples.  The tail left at ``R_max``
    must be below ``tail_tol`` relative to the peak.
    """
    if not rho >= 3.0:
        raise GridError(f"rho must be >= 3, got {rho}")
    f = _as_callable(U)
    r = grid.r
    vals = cutoff(r) * np.asarray(f(r - rho), dtype=float)
    peak = float(np.max(np.abs(f(np.linspace(-1.0, 1.0, 201)))))
    tail = abs(float(f(grid.r_max - rho)))
    if peak > 0 and tail > tail_tol * peak:
        raise GridError(
            f"rho={rho} leaves a tail {tail:.3g} (relative {tail / peak:.3g}) at "
            f"R_max={grid.r_max}; enlarge the grid")
    vals[0] = 0.0
    return RadialProfile(grid, vals)


def rescale(u: RadialProfile, params: Params, tail_tol: float = 1e-8
            ) -> tuple[RadialProfile, float]:
    """``u_omega(r) = sqrt(omega) u(sqrt(omega) r)`` and ``lambda = omega^((p-3)/2)``.

    Values are linearly interpolated.  For ``omega > 1`` the argument leaves
    the grid; that is only allowed when ``u`` has already decayed there.
    """
    grid = u.grid
    a = np.sqrt(params.omega)
    lam = params.omega ** ((params.p - 3.0) / 2.0)
    if params.omega == 1.0:
        return u, lam
    peak = u.sup_norm()
    if a > 1.0 and peak > 0.0:
        beyond = np.abs(u.values[grid.r >= grid.r_max / a])
        if beyond.size and beyond.max() > tail_tol * peak:
            raise GridError(
                f"rescaling by sqrt(omega)={a:.4g} needs u beyond R_max={grid.r_max}")
    vals = a * np.interp(a * grid.r, grid.r, u.values, right=0.0)
    vals[0] = 0.0
    return RadialProfile(grid, vals), lam


def scaled_functional(u: RadialProfile, params: Params, lam: float) -> float:
    """``I_lambda(u) = 1/2 ||u||_{H^1}^2 + chern part - lambda/(p+1) int |u|^(p+1)``."""
    unit = Params(params.p, 1.0, params.N)
    kin, mass, chern, power = DiscreteFunctional(u.grid, unit).parts(u.values)
    return kin + mass + chern + lam * power
