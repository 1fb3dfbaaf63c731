"""Radial grids, profiles and trapezoid quadrature.

Every integral in the package goes through the trapezoid rule on a
:class:`RadialGrid`.  Two-dimensional integrals over radial functions carry
their ``2*pi*r`` factor explicitly at the call site, so the same
:func:`integrate` serves the one-dimensional limit problem as well.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GridError(ValueError):
    """Raised for invalid grids, profiles or parameter sets."""


@dataclass(frozen=True)
class Params:
    """Problem parameters: nonlinearity exponent, frequency and vortex order."""

    p: float
    omega: float
    vortex: int = 0

    def __post_init__(self):
        if not (1.0 < self.p < 3.0):
            raise GridError(f"p must lie in (1, 3), got {self.p}")
        if not (self.omega > 0.0) or not np.isfinite(self.omega):
            raise GridError(f"omega must be positive, got {self.omega}")
        if int(self.vortex) != self.vortex or self.vortex < 0:
            raise GridError(f"vortex must be a nonnegative integer, got {self.vortex}")
        object.__setattr__(self, "vortex", int(self.vortex))

    @property
    def N(self) -> int:
        return self.vortex

    def to_dict(self) -> dict:
        return {"p": self.p, "omega": self.omega, "N": self.vortex}


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes ``0 = r_0 < ... < r_n = R_max`` with trapezoid weights."""

    nodes: np.ndarray
    grading: str = "uniform"
    ratio: float = 1.0
    weights: np.ndarray = field(init=False, repr=False)
    spacing: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.nodes, dtype=float)
        if r.ndim != 1 or r.size < 2:
            raise GridError("grid needs at least two nodes")
        if r[0] != 0.0:
            raise GridError("first node must be exactly 0")
        dr = np.diff(r)
        if np.any(dr <= 0) or not np.all(np.isfinite(r)):
            raise GridError("nodes must be finite and strictly increasing")
        w = np.zeros_like(r)
        w[:-1] += 0.5 * dr
        w[1:] += 0.5 * dr
        r.setflags(write=False)
        dr.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", r)
        object.__setattr__(self, "spacing", dr)
        object.__setattr__(self, "weights", w)

    @property
    def r(self) -> np.ndarray:
        return self.nodes

    @property
    def n(self) -> int:
        """Number of cells (nodes minus one)."""
        return self.nodes.size - 1

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    def describe(self) -> dict:
        return {
            "r_max": self.r_max,
            "n": self.n,
            "grading": self.grading,
            "ratio": self.ratio,
        }

    def write_csv(self, path) -> None:
        """Serialize the nodes as a single ``r`` column."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r"])
            for x in self.nodes:
                writer.writerow([repr(float(x))])


def make_grid(r_max: float = 40.0, n: int = 4000, grading: str = "uniform",
              ratio: float = 1.002) -> RadialGrid:
    """Build a radial grid with ``n`` cells on ``[0, r_max]``.

    ``grading="geometric"`` makes consecutive spacings grow by ``ratio``,
    clustering nodes near the origin.
    """
    if not (r_max > 0) or not np.isfinite(r_max):
        raise GridError(f"r_max must be positive, got {r_max}")
    if int(n) != n or n < 16:
        raise GridError(f"n must be an integer >= 16, got {n}")
    n = int(n)
    if grading == "uniform":
        nodes = np.linspace(0.0, r_max, n + 1)
        return RadialGrid(nodes, "uniform", 1.0)
    if grading == "geometric":
        if not (1.0 < ratio <= 1.1):
            raise GridError(f"geometric ratio must lie in (1, 1.1], got {ratio}")
        steps = ratio ** np.arange(n)
        nodes = np.concatenate([[0.0], np.cumsum(steps)])
        nodes *= r_max / nodes[-1]
        nodes[-1] = r_max
        return RadialGrid(nodes, "geometric", float(ratio))
    raise GridError(f"unknown grading {grading!r}")


def _check_len(grid: RadialGrid, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape[0] != grid.nodes.size:
        raise GridError(f"expected {grid.nodes.size} values, got {f.shape[0]}")
    return f


def integrate(grid: RadialGrid, f) -> float:
    """Trapezoid approximation of the integral of ``f`` over ``[0, R_max]``."""
    f = _check_len(grid, f)
    return float(grid.weights @ f)


def cumulative_integral(grid: RadialGrid, f) -> np.ndarray:
    """``F_i = int_0^{r_i} f dr`` cell by cell, with ``F_0 = 0``."""
    f = _check_len(grid, f)
    out = np.zeros_like(f)
    out[1:] = np.cumsum(0.5 * grid.spacing * (f[:-1] + f[1:]))
    return out


def reverse_cumulative_integral(grid: RadialGrid, f) -> np.ndarray:
    """``G_i = int_{r_i}^{R_max} f dr``, with ``G_n = 0``."""
    f = _check_len(grid, f)
    cells = 0.5 * grid.spacing * (f[:-1] + f[1:])
    out = np.zeros_like(f)
    out[:-1] = np.cumsum(cells[::-1])[::-1]
    return out


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples ``u(r_i)`` of a radial function with ``u(0) = 0``."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        u = np.array(self.values, dtype=float)
        if u.shape != self.grid.nodes.shape:
            raise GridError(
                f"profile has {u.size} values but grid has {self.grid.nodes.size} nodes")
        if not np.all(np.isfinite(u)):
            raise GridError("profile values must be finite")
        if u[0] != 0.0:
            raise GridError(f"profile must vanish at the origin, got u(0)={u[0]}")
        u.setflags(write=False)
        object.__setattr__(self, "values", u)

    @property
    def u(self) -> np.ndarray:
        return self.values

    @classmethod
    def from_function(cls, grid: RadialGrid, func) -> "RadialProfile":
        """Sample ``func`` on the grid; the origin value is forced to 0."""
        vals = np.array(func(grid.nodes), dtype=float)
        vals = np.broadcast_to(vals, grid.nodes.shape).copy()
        vals[0] = 0.0
        return cls(grid, vals)

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "RadialProfile":
        return cls(grid, np.zeros_like(grid.nodes))

    def with_values(self, values) -> "RadialProfile":
        return RadialProfile(self.grid, values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "u"])
            for r, u in zip(self.grid.nodes, self.values):
                writer.writerow([repr(float(r)), repr(float(u))])


def read_profile_csv(path) -> RadialProfile:
    """Read an ``r,u`` CSV written by :meth:`RadialProfile.write_csv`."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["r", "u"]:
            raise GridError(f"{path}: expected header 'r,u', got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise GridError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError as exc:
                raise GridError(f"{path}:{lineno}: {exc}") from None
    if len(rows) < 2:
        raise GridError(f"{path}: need at least two rows")
    data = np.array(rows)
    dr = np.diff(data[:, 0])
    grading = "uniform" if np.allclose(dr, dr[0], rtol=1e-9) else "custom"
    try:
        grid = RadialGrid(data[:, 0], grading)
        return RadialProfile(grid, data[:, 1])
    except GridError as exc:
        raise GridError(f"{path}: {exc}") from None


def dirichlet_integral(grid: RadialGrid, u) -> float:
    """``int_0^{R_max} u'(r)^2 r dr`` for the piecewise-linear interpolant of ``u``.

    Exact per cell: the slope is constant and ``int r dr`` is the cell length
    times its midpoint.
    """
    u = _check_len(grid, u)
    dr = grid.spacing
    mid = 0.5 * (grid.nodes[:-1] + grid.nodes[1:])
    du = np.diff(u)
    return float(np.sum(du * du * mid / dr))
