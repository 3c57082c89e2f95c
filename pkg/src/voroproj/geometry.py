"""Set atoms (ellipsoids, polyhedra) with distance and support oracles.

All atoms are immutable after construction and every operation here is a
pure function, so everything in this module is safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionMismatchError, EmptySetError, NumericFailureError

MEMBERSHIP_TOL = 1e-12
DISTANCE_TOL = 1e-9
_MAX_ROOT_ITERS = 200


def _vector(v, name="vector"):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def eig_floor(trace):
    """Eigenvalue floor used when constructing ellipsoid shapes.

    Keeps every denominator of the form 1/D_ii + lam (dual function) and
    d_i + nu (distance root-finder) strictly positive.
    """
    return max(1e-9, 1e-12 * trace)


@dataclass(frozen=True)
class Ellipsoid:
    """The set {y | (y - center)^T shape^{-1} (y - center) <= 1}.

    ``shape`` is symmetric positive definite; its eigendecomposition
    (orthogonal ``basis`` U, eigenvalues ``radii_sq`` = diag of D) is
    computed once at construction, with eigenvalues clamped from below by
    ``eig_floor``.
    """

    center: np.ndarray
    shape: np.ndarray
    basis: np.ndarray = field(init=False, repr=False)
    radii_sq: np.ndarray = field(init=False, repr=False)
    shape_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        center = _vector(self.center, "center")
        shape = np.asarray(self.shape, dtype=float)
        n = center.size
        if shape.shape != (n, n):
            raise DimensionMismatchError(
                f"shape matrix must be {n}x{n}, got {shape.shape}"
            )
        scale = max(np.abs(shape).max(), 1.0)
        if np.abs(shape - shape.T).max() > 1e-12 * scale:
            raise ValueError("shape matrix is not symmetric within 1e-12")
        sym = 0.5 * (shape + shape.T)
        w, u = np.linalg.eigh(sym)
        w = np.maximum(w, eig_floor(float(np.trace(sym))))
        rebuilt = (u * w) @ u.T
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "shape", rebuilt)
        object.__setattr__(self, "basis", u)
        object.__setattr__(self, "radii_sq", w)
        object.__setattr__(self, "shape_inv", (u / w) @ u.T)
        self.center.setflags(write=False)
        self.shape.setflags(write=False)

    @classmethod
    def ball(cls, center, radius):
        center = _vector(center, "center")
        return cls(center, max(radius, 0.0) ** 2 * np.eye(center.size))

    @property
    def dim(self):
        return self.center.size

    def quadratic_form(self, z):
        """(z - mu)^T Sigma^{-1} (z - mu)."""
        d = _vector(z, "point") - self.center
        return float(d @ self.shape_inv @ d)

    def membership(self, z):
        return self.quadratic_form(z) <= 1.0 + MEMBERSHIP_TOL

    def support(self, d):
        """Support function sup_{y in E} d^T y for a unit direction d."""
        d = _vector(d, "direction")
        if d.size != self.dim:
            raise DimensionMismatchError("direction dimension mismatch")
        return float(self.center @ d + np.sqrt(d @ self.shape @ d))

    def distance(self, z):
        """Euclidean distance from z to the ellipsoid (0 if inside).

        In the eigenbasis the nearest point is y_i = d_i w_i / (d_i + nu)
        with multiplier nu >= 0 solving the monotone residual
        sum_i d_i w_i^2 / (d_i + nu)^2 = 1; solved by safeguarded
        bisection plus a Newton polish.
        """
        z = _vector(z, "point")
        if z.size != self.dim:
            raise DimensionMismatchError("point dimension mismatch")
        w = self.basis.T @ (z - self.center)
        d = self.radii_sq
        if float(np.sum(w * w / d)) <= 1.0 + MEMBERSHIP_TOL:
            return 0.0
        nu = _solve_distance_multiplier(d, w)
        return float(np.linalg.norm(nu * w / (d + nu)))

    def distance_many(self, pts):
        """Vectorized :meth:`distance` for an (m, n) array of points."""
        pts = np.asarray(pts, dtype=float)
        w = (pts - self.center) @ self.basis
        d = self.radii_sq
        form = np.sum(w * w / d, axis=1)
        outside = form > 1.0 + MEMBERSHIP_TOL
        out = np.zeros(len(pts))
        if not np.any(outside):
            return out
        wo = w[outside]
        # Newton from a certified lower bound; the residual is convex and
        # decreasing, so the iterates increase monotonically to the root.
        dw2 = d * wo * wo
        nu = np.maximum(0.0, np.sqrt(np.sum(dw2, axis=1)) - float(np.max(d)))
        for _ in range(60):
            s = d + nu[:, None]
            r = np.sum(dw2 / s**2, axis=1) - 1.0
            dr = -2.0 * np.sum(dw2 / s**3, axis=1)
            step = r / dr
            nu = np.maximum(nu - step, 0.0)
            if np.max(np.abs(step)) <= 1e-14 * (1.0 + np.max(nu)):
                break
        out[outside] = np.linalg.norm(nu[:, None] * wo / (d + nu[:, None]), axis=1)
        return out

    def sample(self, rng, size=None):
        """Uniform sample(s) from the ellipsoid volume."""
        n = self.dim
        m = 1 if size is None else size
        g = rng.standard_normal((m, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = rng.random(m) ** (1.0 / n)
        pts = self.center + (g * r[:, None]) @ (self.basis * np.sqrt(self.radii_sq)).T
        return pts[0] if size is None else pts


def _solve_distance_multiplier(d, w, tol=1e-14):
    """Root of f(nu) = sum d_i w_i^2/(d_i+nu)^2 - 1 for a point outside.

    f is convex and strictly decreasing on [0, inf) with f(0) > 0, so
    Newton started from any lower bound of the root increases
    monotonically to it.  From f(nu) <= sum d_i w_i^2 / (nu + max d)^2,
    the root is at least sqrt(sum d_i w_i^2) - max d.
    """
    dw2 = d * w * w
    nu = max(0.0, float(np.sqrt(np.sum(dw2))) - float(np.max(d)))
    for it in range(_MAX_ROOT_ITERS):
        s = d + nu
        r = float(np.sum(dw2 / s**2)) - 1.0
        dr = float(-2.0 * np.sum(dw2 / s**3))
        step = r / dr
        nu = max(nu - step, 0.0)
        if abs(step) <= tol * (1.0 + nu):
            return nu
    raise NumericFailureError(
        "distance multiplier Newton did not converge",
        {"nu": nu, "residual": float(np.sum(dw2 / (d + nu) ** 2)) - 1.0},
    )


@dataclass(frozen=True)
class Polyhedron:
    """The set {y | normals @ y <= offsets}.

    Emptiness is not checked at construction; it surfaces as
    :class:`EmptySetError` from the operations that would need a point.
    """

    normals: np.ndarray
    offsets: np.ndarray
    interior_point: np.ndarray | None = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.normals, dtype=float))
        b = _vector(self.offsets, "offsets")
        if a.shape[0] != b.size or a.shape[0] < 1:
            raise DimensionMismatchError(
                f"normals {a.shape} inconsistent with offsets {b.shape}"
            )
        row_norms = np.linalg.norm(a, axis=1)
        if np.any(row_norms == 0.0):
            raise ValueError("polyhedron has a zero normal row")
        object.__setattr__(self, "normals", a)
        object.__setattr__(self, "offsets", b)
        if self.interior_point is not None:
            y0 = _vector(self.interior_point, "interior_point")
            if not np.all(a @ y0 < b):
                raise ValueError("interior witness does not satisfy A y < b strictly")
            object.__setattr__(self, "interior_point", y0)
        self.normals.setflags(write=False)
        self.offsets.setflags(write=False)

    @classmethod
    def box(cls, lo, hi):
        lo = _vector(lo, "lo")
        hi = _vector(hi, "hi")
        n = lo.size
        eye = np.eye(n)
        return cls(
            np.vstack([eye, -eye]),
            np.concatenate([hi, -lo]),
            interior_point=0.5 * (lo + hi) if np.all(lo < hi) else None,
        )

    @property
    def dim(self):
        return self.normals.shape[1]

    def membership(self, z):
        z = _vector(z, "point")
        scale = 1.0 + np.abs(self.offsets)
        return bool(np.all(self.normals @ z - self.offsets <= MEMBERSHIP_TOL * scale))

    def residuals(self, z):
        """A z - b (positive entries violate)."""
        return self.normals @ _vector(z, "point") - self.offsets

    def support(self, d):
        """sup_{A y <= b} d^T y via LP; +inf when unbounded in direction d."""
        d = _vector(d, "direction")
        res = linprog(
            -d, A_ub=self.normals, b_ub=self.offsets, bounds=(None, None), method="highs"
        )
        if res.status == 3:
            return float("inf")
        if res.status == 2:
            raise EmptySetError("polyhedron is empty")
        if not res.success:
            raise NumericFailureError(
                "support LP failed", {"status": res.status, "message": res.message}
            )
        return float(-res.fun)

    def project(self, z):
        """Nearest point in the polyhedron to z and the distance to it."""
        z = _vector(z, "point")
        if z.size != self.dim:
            raise DimensionMismatchError("point dimension mismatch")
        if self.membership(z):
            return z.copy(), 0.0
        lam = nonneg_qp_multipliers(self.normals, self.offsets, z)
        y = z - 0.5 * self.normals.T @ lam
        return y, float(np.linalg.norm(z - y))

    def distance(self, z):
        return self.project(z)[1]


def nonneg_qp_multipliers(a, b, z, tol=1e-11, max_iters=400):
    """Multipliers of the projection QP min ||y - z||^2 s.t. A y <= b.

    Solves the dual min_{lam >= 0} lam^T (A A^T) lam / 4 + lam^T (b - A z)
    with a Lawson-Hanson style active-set loop; the primal projection is
    y = z - A^T lam / 2.  Raises :class:`EmptySetError` when the dual is
    detected to be unbounded (empty primal set).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = a.shape[0]
    q = 0.5 * (a @ a.T)  # gradient = q @ lam + c
    c = b - a @ z
    scale = max(1.0, float(np.abs(c).max()))
    lam = np.zeros(m)
    active = np.zeros(m, dtype=bool)
    big = 1e14 * scale
    for _ in range(max_iters):
        grad = q @ lam + c
        candidates = np.where(~active & (grad < -tol * scale))[0]
        if candidates.size == 0:
            return lam
        active[candidates[np.argmin(grad[candidates])]] = True
        for _ in range(max_iters):
            idx = np.where(active)[0]
            sol, *_ = np.linalg.lstsq(q[np.ix_(idx, idx)], -c[idx], rcond=None)
            # A singular subsystem with an inconsistent right-hand side means
            # the dual is unbounded along a null direction: empty primal set.
            residual = np.linalg.norm(q[np.ix_(idx, idx)] @ sol + c[idx])
            if residual > 1e-7 * scale:
                if _polyhedron_empty(a, b):
                    raise EmptySetError("polyhedron is empty")
                raise NumericFailureError(
                    "projection QP subsystem inconsistent", {"residual": float(residual)}
                )
            if np.abs(sol).max() > big:
                if _polyhedron_empty(a, b):
                    raise EmptySetError("polyhedron is empty")
                raise NumericFailureError(
                    "projection QP diverged", {"max_multiplier": float(np.abs(sol).max())}
                )
            if np.all(sol > 0.0):
                lam[:] = 0.0
                lam[idx] = sol
                break
            # Step toward the subproblem solution until a multiplier hits 0.
            cur = lam[idx]
            neg = sol <= 0.0
            alpha = np.min(cur[neg] / (cur[neg] - sol[neg]))
            lam[idx] = cur + alpha * (sol - cur)
            drop = idx[lam[idx] <= tol]
            lam[drop] = 0.0
            active[drop] = False
            if not np.any(active):
                break
    if _polyhedron_empty(a, b):
        raise EmptySetError("polyhedron is empty")
    raise NumericFailureError("projection QP active-set loop did not converge", {})


def _polyhedron_empty(a, b):
    res = linprog(np.zeros(a.shape[1]), A_ub=a, b_ub=b, bounds=(None, None), method="highs")
    return res.status == 2


# A set atom is either an ellipsoid or a polyhedron.
SetAtom = Ellipsoid | Polyhedron


def atom_dim(atom):
    return atom.dim


def atom_distance(atom, z):
    return atom.distance(z)


def atom_membership(atom, z):
    return atom.membership(z)


def support_function(atom, d):
    """Support function of an atom for a unit direction d."""
    d = _vector(d, "direction")
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    return atom.support(d)


@dataclass(frozen=True)
class ObstacleRegion:
    """A union of set atoms; one projection constraint per member atom."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise ValueError("obstacle region needs at least one atom")
        dims = {atom_dim(a) for a in atoms}
        if len(dims) != 1:
            raise DimensionMismatchError(f"mixed atom dimensions {sorted(dims)}")
        object.__setattr__(self, "atoms", atoms)

    @property
    def dim(self):
        return atom_dim(self.atoms[0])

    def distance(self, z):
        return min(atom_distance(a, z) for a in self.atoms)

    def membership(self, z):
        return any(atom_membership(a, z) for a in self.atoms)


def minkowski_bound(e1: Ellipsoid, e2: Ellipsoid) -> Ellipsoid:
    """Trace-family outer bound of the Minkowski sum of two ellipsoids.

    Shape (1 + 1/beta) S1 + (1 + beta) S2 with beta = sqrt(tr S1 / tr S2);
    exact for balls, a guaranteed superset in general (covered by the
    support-dominance tests rather than assumed).
    """
    if e1.dim != e2.dim:
        raise DimensionMismatchError("ellipsoid dimensions differ")
    t1 = float(np.trace(e1.shape))
    t2 = float(np.trace(e2.shape))
    beta = np.sqrt(t1 / t2)
    shape = (1.0 + 1.0 / beta) * e1.shape + (1.0 + beta) * e2.shape
    return Ellipsoid(e1.center + e2.center, shape)
