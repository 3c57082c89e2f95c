"""Generalized Voronoi cells and the Lagrange duals of their constraints.

For an obstacle atom E and ego position x^c, the cell constraint is
||z - x^c|| <= inf_{y in E} ||z - y||.  Squaring and expanding gives
||x^c||^2 - 2 z^T x^c <= inf_{y in E} (||y||^2 - 2 z^T y), whose right side
is lower-bounded by the Lagrange dual function g(z, lam).  This module
holds the analytic duals for ellipsoid and polyhedron atoms plus the
cell membership predicate used for independent safety verification.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError
from .geometry import (
    Ellipsoid,
    ObstacleRegion,
    Polyhedron,
    atom_distance,
    nonneg_qp_multipliers,
)

CELL_TOL = 1e-9


@dataclass(frozen=True)
class DualConstraint:
    """One dual constraint (one multiplier block) for a single atom.

    Ellipsoid atoms cache the spectral data reused across solver
    iterations: basis U, eigenvalues D, u_tilde = Sigma^{-1} mu, the
    eigenbasis coordinates t = U^T u_tilde and the scalar
    mu^T Sigma^{-1} mu.  Polyhedron atoms carry (A, b) directly.
    """

    atom: object
    basis: np.ndarray | None = field(default=None, repr=False)
    eigvals: np.ndarray | None = field(default=None, repr=False)
    u_tilde: np.ndarray | None = field(default=None, repr=False)
    t_coeff: np.ndarray | None = field(default=None, repr=False)
    center_form: float | None = field(default=None, repr=False)

    def __post_init__(self):
        if isinstance(self.atom, Ellipsoid):
            e = self.atom
            u_tilde = e.shape_inv @ e.center
            object.__setattr__(self, "basis", e.basis)
            object.__setattr__(self, "eigvals", e.radii_sq)
            object.__setattr__(self, "u_tilde", u_tilde)
            object.__setattr__(self, "t_coeff", e.basis.T @ u_tilde)
            object.__setattr__(self, "center_form", float(e.center @ u_tilde))
        elif not isinstance(self.atom, Polyhedron):
            raise TypeError(f"unsupported atom type {type(self.atom)!r}")

    @property
    def is_ellipsoid(self):
        return isinstance(self.atom, Ellipsoid)

    @property
    def dim(self):
        return self.atom.dim

    @property
    def multiplier_dim(self):
        return 1 if self.is_ellipsoid else self.atom.normals.shape[0]

    def shifted(self, origin):
        """The same constraint with coordinates translated so origin -> 0."""
        origin = np.asarray(origin, dtype=float)
        if self.is_ellipsoid:
            e = self.atom
            return DualConstraint(Ellipsoid(e.center - origin, e.shape))
        p = self.atom
        return DualConstraint(
            Polyhedron(p.normals, p.offsets - p.normals @ origin)
        )

    def value(self, x, lam):
        if self.is_ellipsoid:
            return dual_value_ellipsoid(self, x, float(lam))
        return dual_value_polyhedron(self, x, np.asarray(lam, dtype=float))


def dual_value_ellipsoid(c: DualConstraint, x, lam: float) -> float:
    """g(x, lam) for an ellipsoid atom.

    g = -sum_i D_ii (u_i^T x + lam t_i)^2 / (D_ii + lam)
        + lam (mu^T Sigma^{-1} mu - 1).
    """
    if lam < 0:
        raise ValueError("multiplier must be nonnegative")
    x = np.asarray(x, dtype=float)
    q = c.basis.T @ x + lam * c.t_coeff
    d = c.eigvals
    return float(-np.sum(d * q * q / (d + lam)) + lam * (c.center_form - 1.0))


def dual_value_polyhedron(c: DualConstraint, x, lam) -> float:
    """g(x, lam) = -||x - A^T lam / 2||^2 - b^T lam for a polyhedron atom."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("multipliers must be nonnegative")
    x = np.asarray(x, dtype=float)
    p = c.atom
    r = x - 0.5 * p.normals.T @ lam
    return float(-(r @ r) - p.offsets @ lam)


def maximize_dual(c: DualConstraint, x):
    """(lam*, g(x, lam*)) maximizing the concave dual over lam >= 0.

    The maximum equals inf_{y in atom}(||y||^2 - 2 x^T y) under Slater's
    condition; it is positive exactly when x lies strictly inside the cell
    half generated by the atom.
    """
    x = np.asarray(x, dtype=float)
    if not c.is_ellipsoid:
        p = c.atom
        if p.membership(x):
            return np.zeros(p.normals.shape[0]), dual_value_polyhedron(
                c, x, np.zeros(p.normals.shape[0])
            )
        lam = nonneg_qp_multipliers(p.normals, p.offsets, x)
        return lam, dual_value_polyhedron(c, x, lam)

    d = c.eigvals
    w = c.basis.T @ x
    t = c.t_coeff

    def slope(lam):
        q = w + lam * t
        s = d + lam
        return float(
            -np.sum(2.0 * d * q * t / s - d * q * q / s**2) + c.center_form - 1.0
        )

    if slope(0.0) <= 0.0:
        return 0.0, dual_value_ellipsoid(c, x, 0.0)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if slope(hi) < 0.0:
            break
        hi *= 4.0
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * (1.0 + hi):
            break
    lam = 0.5 * (lo + hi)
    return lam, dual_value_ellipsoid(c, x, lam)


def weak_duality_gap(atom, x, lam):
    """inf_{y in atom}(||y||^2 - 2 x^T y) - g(x, lam).

    The primal infimum is computed through the independent distance
    oracles: inf ||y - x||^2 - ||x||^2 = dist(atom, x)^2 - ||x||^2.
    Nonnegative (up to solver tolerance) by weak duality.
    """
    x = np.asarray(x, dtype=float)
    primal = atom_distance(atom, x) ** 2 - float(x @ x)
    return primal - DualConstraint(atom).value(x, lam)


@dataclass(frozen=True)
class CellSpec:
    """Generator point plus the obstacle regions inducing the cell."""

    generator: np.ndarray
    obstacles: tuple

    def __post_init__(self):
        gen = np.asarray(self.generator, dtype=float)
        obstacles = tuple(self.obstacles)
        for region in obstacles:
            if not isinstance(region, ObstacleRegion):
                raise TypeError("obstacles must be ObstacleRegion instances")
            if region.dim != gen.size:
                raise DimensionMismatchError("obstacle dimension mismatch")
        object.__setattr__(self, "generator", gen)
        object.__setattr__(self, "obstacles", obstacles)
        self.generator.setflags(write=False)

    @property
    def dim(self):
        return self.generator.size

    def atoms(self):
        for region in self.obstacles:
            yield from region.atoms


def cell_membership(cell: CellSpec, z, tol=CELL_TOL) -> bool:
    """True iff ||z - x^c|| <= dist(atom, z) + tol for every atom."""
    z = np.asarray(z, dtype=float)
    if z.size != cell.dim:
        raise DimensionMismatchError("point dimension mismatch")
    r = float(np.linalg.norm(z - cell.generator))
    return all(r <= atom_distance(a, z) + tol for a in cell.atoms())
