"""Closed-form theory of the one-dimensional limit problem.

Far-translated radial profiles see the energy of the line functional

    J(U) = 1/2 int (U'^2 + omega U^2) + (int U^2)^3 / 24 - int |U|^(p+1) / (p+1)

whose positive critical points are rescaled sech-type solitons ``w_k`` with
``k`` solving ``k = omega + m^2 k^q / 4``, ``q = (5-p)/(p-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate as spi

SOLITON_NODES = 8192


class LimitError(ValueError):
    pass


def _check_p(p: float) -> None:
    if not (1.0 < p < 3.0):
        raise LimitError(f"p must lie in (1, 3), got {p}")


def _log_cosh(x):
    x = np.abs(np.asarray(x, dtype=float))
    return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)


def _m_integrand(r, p):
    # (2/(p+1) cosh^2((p-1) r/2))^(2/(1-p)), evaluated in log form
    a = 0.5 * (p - 1.0)
    return np.exp(2.0 / (1.0 - p) * (math.log(2.0 / (p + 1.0)) + 2.0 * _log_cosh(a * r)))


def compute_m(p: float) -> float:
    """``m = int_R w_1(r)^2 dr`` by adaptive quadrature on a growing half-line."""
    _check_p(p)
    R = 8.0
    while _m_integrand(R, p) > 1e-16:
        R *= 2.0
    prev = None
    while True:
        val, _ = spi.quad(_m_integrand, 0.0, R, args=(p,), epsabs=1e-13, epsrel=1e-13,
                          limit=500)
        val *= 2.0
        if prev is not None and abs(val - prev) <= 1e-12:
            return float(val)
        prev = val
        R *= 2.0


def compute_omega0(p: float, m: Optional[float] = None) -> float:
    _check_p(p)
    if m is None:
        m = compute_m(p)
    e = (p - 1.0) / (2.0 * (3.0 - p))
    return float((3.0 - p) / (3.0 + p) * 3.0 ** e * 2.0 ** (2.0 / (3.0 - p))
                 * (m * m * (3.0 + p) / (p - 1.0)) ** (-e))


def _branch_exponent(p: float) -> float:
    return (5.0 - p) / (p - 1.0)


def tangency_point(p: float, m: float) -> float:
    """The unique critical point ``k*`` of ``k - m^2 k^q / 4``."""
    q = _branch_exponent(p)
    return float((4.0 / (q * m * m)) ** (1.0 / (q - 1.0)))


def compute_omega1(p: float, m: Optional[float] = None) -> float:
    _check_p(p)
    if m is None:
        m = compute_m(p)
    q = _branch_exponent(p)
    ks = tangency_point(p, m)
    return float(ks - 0.25 * m * m * ks ** q)


@dataclass(frozen=True)
class LimitConstants:
    p: float
    m: float
    omega0: float
    omega1: float

    def to_dict(self) -> dict:
        return {"p": self.p, "m": self.m, "omega0": self.omega0, "omega1": self.omega1}


def limit_constants(p: float) -> LimitConstants:
    m = compute_m(p)
    return LimitConstants(p, m, compute_omega0(p, m), compute_omega1(p, m))


@dataclass(frozen=True)
class KBranches:
    omega: float
    k1: Optional[float]
    k2: Optional[float]

    @property
    def exists(self) -> bool:
        return self.k2 is not None


def _bisect_newton(g, dg, lo, hi, tol=1e-15, maxit=200):
    glo = g(lo)
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
        if hi - lo <= 1e-6 * max(hi, 1e-300):
            break
    k = 0.5 * (lo + hi)
    for _ in range(50):
        d = dg(k)
        if d == 0:
            break
        step = g(k) / d
        k_new = k - step
        if not (lo <= k_new <= hi):
            break
        k = k_new
        if abs(step) <= tol * max(abs(k), 1.0):
            break
    return float(k)


def solve_k_branches(p: float, omega: float, m: Optional[float] = None) -> KBranches:
    """Roots ``k1 < k2`` of ``k = omega + m^2 k^q / 4``; empty above ``omega1``."""
    _check_p(p)
    if not omega > 0:
        raise LimitError(f"omega must be positive, got {omega}")
    if m is None:
        m = compute_m(p)
    q = _branch_exponent(p)
    c = 0.25 * m * m
    ks = tangency_point(p, m)
    gmax = ks - c * ks ** q - omega

    def g(k):
        return k - c * k ** q - omega

    def dg(k):
        return 1.0 - q * c * k ** (q - 1.0)

    if gmax < -1e-15 * max(omega, 1.0):
        return KBranches(omega, None, None)
    if gmax <= 1e-15 * max(omega, 1.0):
        return KBranches(omega, ks, ks)
    k1 = _bisect_newton(g, dg, 0.0, ks)
    hi = 2.0 * ks
    while g(hi) > 0:
        hi *= 2.0
    k2 = _bisect_newton(g, dg, ks, hi)
    return KBranches(omega, k1, k2)


def eval_w1(p: float, r) -> np.ndarray:
    """``w_1(r) = (2/(p+1) cosh^2((p-1) r/2))^(1/(1-p))``."""
    _check_p(p)
    r = np.asarray(r, dtype=float)
    a = 0.5 * (p - 1.0)
    return np.exp(1.0 / (1.0 - p) * (math.log(2.0 / (p + 1.0)) + 2.0 * _log_cosh(a * r)))


def eval_wk(p: float, k: float, r) -> np.ndarray:
    if not k > 0:
        raise LimitError(f"k must be positive, got {k}")
    return k ** (1.0 / (p - 1.0)) * eval_w1(p, np.sqrt(k) * np.asarray(r, dtype=float))


def soliton_grid(p: float, k: float, nodes: int = SOLITON_NODES) -> np.ndarray:
    """Cell-centred symmetric grid on ``[-L, L]``, ``L = 30 / ((p-1) sqrt(k))``."""
    L = 30.0 / ((p - 1.0) * math.sqrt(k))
    dx = 2.0 * L / nodes
    return -L + (np.arange(nodes) + 0.5) * dx


def spectral_derivative(values, dx: float, order: int = 1) -> np.ndarray:
    """Fourier derivative of samples of a function decayed at both ends."""
    values = np.asarray(values, dtype=float)
    freq = 2.0 * np.pi * np.fft.rfftfreq(values.size, d=dx)
    coef = np.fft.rfft(values) * (1j * freq) ** order
    if values.size % 2 == 0 and order % 2 == 1:
        coef[-1] = 0.0
    return np.fft.irfft(coef, n=values.size)


def _line_integral(values, dx: float) -> float:
    # trapezoid on a cell-centred grid whose end values are negligible
    return float(np.sum(values) * dx)


def J_energy(U, x, p: float, omega: float) -> float:
    """The line functional for samples ``U`` on a uniform grid ``x``."""
    U = np.asarray(U, dtype=float)
    x = np.asarray(x, dtype=float)
    if U.shape != x.shape:
        raise LimitError("U and x must have the same length")
    dx = float(x[1] - x[0])
    dU = spectral_derivative(U, dx)
    mass = _line_integral(U * U, dx)
    return (0.5 * _line_integral(dU * dU + omega * U * U, dx) + mass ** 3 / 24.0
            - _line_integral(np.abs(U) ** (p + 1.0), dx) / (p + 1.0))


def soliton_energy(p: float, k: float, omega: float) -> float:
    x = soliton_grid(p, k)
    return J_energy(eval_wk(p, k, x), x, p, omega)


def limit_ode_residual(p: float, k: float, omega: float, x=None) -> np.ndarray:
    """Pointwise ``-w'' + omega w + (int w^2)^2 w / 4 - w^p`` for ``w = w_k``."""
    if x is None:
        x = soliton_grid(p, k)
    x = np.asarray(x, dtype=float)
    dx = float(x[1] - x[0])
    w = eval_wk(p, k, x)
    d2 = spectral_derivative(w, dx, order=2)
    mass = _line_integral(w * w, dx)
    return -d2 + omega * w + 0.25 * mass ** 2 * w - np.abs(w) ** p


@dataclass(frozen=True)
class BranchReport:
    p: float
    omega: float
    omega0: float
    omega1: float
    k1: Optional[float]
    k2: Optional[float]
    J_k1: Optional[float]
    J_k2: Optional[float]
    regime: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def classify_branches(p: float, omega: float, consts: Optional[LimitConstants] = None,
                      threshold_tol: float = 1e-12) -> BranchReport:
    """Soliton energies on both branches and the resulting regime of ``min J``.

    regime is ``"negative_minimum"`` below omega0 (w_k2 is the minimizer),
    ``"threshold"`` at omega0, ``"zero_minimum"`` above it and
    ``"no_branches"`` beyond omega1.
    """
    if consts is None:
        consts = limit_constants(p)
    br = solve_k_branches(p, omega, consts.m)
    if not br.exists:
        return BranchReport(p, omega, consts.omega0, consts.omega1, None, None, None, None,
                            "no_branches")
    J1 = soliton_energy(p, br.k1, omega)
    J2 = soliton_energy(p, br.k2, omega)
    if abs(omega - consts.omega0) <= threshold_tol * consts.omega0:
        regime = "threshold"
    elif omega < consts.omega0:
        regime = "negative_minimum"
    else:
        regime = "zero_minimum"
    return BranchReport(p, omega, consts.omega0, consts.omega1, br.k1, br.k2, J1, J2, regime)


def upper_branch_energy(p: float, omega: float, m: float) -> float:
    br = solve_k_branches(p, omega, m)
    if not br.exists:
        raise LimitError(f"no soliton branch at omega={omega}")
    return soliton_energy(p, br.k2, omega)


def bisect_energy_sign_change(p: float, tol: float = 1e-12, maxit: int = 200) -> float:
    """Locate the zero of ``omega -> J_omega(w_k2(omega))`` by bisection.

    The bracket is ``[omega1 / 8, omega1]``: the upper-branch energy is
    negative at the left end and positive just below tangency.
    """
    _check_p(p)
    m = compute_m(p)
    w1 = compute_omega1(p, m)
    lo, hi = w1 / 8.0, w1 * (1.0 - 1e-9)
    flo = upper_branch_energy(p, lo, m)
    fhi = upper_branch_energy(p, hi, m)
    if not (flo < 0.0 < fhi):
        raise LimitError(f"no sign change bracketed: J={flo} at {lo}, J={fhi} at {hi}")
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        fm = upper_branch_energy(p, mid, m)
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def branch_sweep(p: float, omegas) -> list[BranchReport]:
    consts = limit_constants(p)
    return [classify_branches(p, float(w), consts) for w in omegas]
