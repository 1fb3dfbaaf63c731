"""Induced gauge fields and the fundamental inequality.

The gauge constant is fixed to zero throughout; no API exposes it.  Singular
integrands carrying ``u**2 / r`` are set to 0 at the origin node, where the
profile vanishes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .grid import (
    Params,
    RadialProfile,
    cumulative_integral,
    dirichlet_integral,
    integrate,
    reverse_cumulative_integral,
)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class GaugeFields:
    """Per-node values of ``h_u`` and ``A_0`` on the profile's grid."""

    r: np.ndarray
    h: np.ndarray
    a0: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "h", "a0"])
            for row in zip(self.r, self.h, self.a0):
                writer.writerow([repr(float(x)) for x in row])


def inverse_radius(r: np.ndarray) -> np.ndarray:
    """``1/r`` with the origin entry replaced by 0."""
    out = np.zeros_like(r)
    out[1:] = 1.0 / r[1:]
    return out


def h_field(u: RadialProfile) -> np.ndarray:
    """``h_u(r) = 1/2 int_0^r s u(s)^2 ds`` by the cumulative trapezoid rule."""
    grid = u.grid
    return cumulative_integral(grid, 0.5 * grid.r * u.values ** 2)


def gauge_fields(u: RadialProfile, params: Params) -> GaugeFields:
    grid = u.grid
    h = h_field(u)
    integrand = (h - params.N) * u.values ** 2 * inverse_radius(grid.r)
    a0 = reverse_cumulative_integral(grid, integrand)
    return GaugeFields(grid.r, h, a0)


def chern_integral(u: RadialProfile, params: Params, h=None) -> float:
    """``int_{R^2} u^2/|x|^2 (h_u - N)^2 dx`` (no factor one half)."""
    grid = u.grid
    if h is None:
        h = h_field(u)
    f = (h - params.N) ** 2 * u.values ** 2 * inverse_radius(grid.r)
    return TWO_PI * integrate(grid, f)


def K_value(u: RadialProfile, params: Params) -> float:
    """``K(u) = 1/2 int (h_u^2 - 2 N h_u) u^2/|x|^2 dx``."""
    grid = u.grid
    h = h_field(u)
    f = (h * h - 2.0 * params.N * h) * u.values ** 2 * inverse_radius(grid.r)
    return TWO_PI * 0.5 * integrate(grid, f)


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float
    holds: bool

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}


def check_fundamental_inequality(u: RadialProfile, params: Params,
                                 tol: float = 1e-8) -> InequalityCheck:
    """Evaluate both sides of

        int |u|^4  <=  4 (int |grad u|^2)^(1/2) (int u^2/|x|^2 (h_u - N)^2)^(1/2)

    with all integrals over the plane.
    """
    grid = u.grid
    lhs = TWO_PI * integrate(grid, grid.r * u.values ** 4)
    grad_sq = TWO_PI * dirichlet_integral(grid, u.values)
    chern = chern_integral(u, params)
    rhs = 4.0 * np.sqrt(grad_sq) * np.sqrt(chern)
    return InequalityCheck(float(lhs), float(rhs), bool(lhs <= rhs * (1.0 + tol)))
