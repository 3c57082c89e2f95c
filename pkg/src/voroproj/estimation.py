"""Set-membership filtering with ellipsoidal estimates.

Each agent keeps, per neighbor, an ellipsoid guaranteed to contain the
neighbor's true position under the bounded-noise sensing model: predict
inflates by the neighbor's one-step motion bound, fuse intersects with the
measurement set, and apply_margin adds the physical-extent ellipsoid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InconsistentMeasurementError
from .geometry import Ellipsoid, minkowski_bound

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Measurement:
    """One noisy position fix: true position lies in position (+) noise_bound."""

    subject: int
    position: np.ndarray
    noise_bound: Ellipsoid

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float)
        if pos.size != self.noise_bound.dim:
            raise DimensionMismatchError("measurement dimension mismatch")
        if np.linalg.norm(self.noise_bound.center) > 1e-9:
            raise ValueError("noise bound must be centered at the origin")
        object.__setattr__(self, "position", pos)

    def as_ellipsoid(self) -> Ellipsoid:
        return Ellipsoid(self.position, self.noise_bound.shape)


@dataclass
class EstimateBank:
    """Per-agent map of neighbor id -> containing ellipsoid."""

    owner: int
    margin: Ellipsoid
    estimates: dict = field(default_factory=dict)

    def update(self, meas: Measurement, motion_bound: float) -> Ellipsoid:
        """Predict-then-fuse for one neighbor; first contact seeds from the
        measurement set alone."""
        if meas.subject == self.owner:
            raise ValueError("bank must not hold a self-estimate")
        prior = self.estimates.get(meas.subject)
        if prior is None:
            est = meas.as_ellipsoid()
        else:
            est = fuse(predict(prior, motion_bound), meas)
        self.estimates[meas.subject] = est
        return est

    def coast(self, subject: int, motion_bound: float):
        """Measurement dropout: inflate only."""
        prior = self.estimates.get(subject)
        if prior is not None:
            self.estimates[subject] = predict(prior, motion_bound)


def predict(e: Ellipsoid, motion_bound: float) -> Ellipsoid:
    """Outer bound of e (+) ball(0, motion_bound)."""
    if motion_bound < 0:
        raise ValueError("motion_bound must be nonnegative")
    if motion_bound == 0.0:
        return e
    return minkowski_bound(e, Ellipsoid.ball(np.zeros(e.dim), motion_bound))


def fuse(prior: Ellipsoid, meas: Measurement) -> Ellipsoid:
    """Smallest-trace member of the convex-combination intersection family.

    For rho in [0, 1] the set {z | rho q1(z) + (1-rho) q2(z) <= 1} (with
    q1, q2 the defining quadratics of prior and measurement set) contains
    the intersection of the two.  It is the ellipsoid with
    X(rho)^{-1} = rho P1 + (1-rho) P2, center m(rho), and shape
    k(rho) X(rho).  k(rho) <= 0 certifies an empty intersection.
    """
    if prior.dim != meas.noise_bound.dim:
        raise DimensionMismatchError("prior/measurement dimension mismatch")

    p1, mu1 = prior.shape_inv, prior.center
    # The noise bound is origin-centered, so the measurement set is just a
    # translate: same shape inverse, center at the measured position.
    p2, mu2 = meas.noise_bound.shape_inv, meas.position
    c1 = float(mu1 @ p1 @ mu1)
    c2 = float(mu2 @ p2 @ mu2)
    v1 = p1 @ mu1
    v2 = p2 @ mu2

    def member(rho):
        xinv = rho * p1 + (1.0 - rho) * p2
        x = np.linalg.inv(xinv)
        rhs = rho * v1 + (1.0 - rho) * v2
        m = x @ rhs
        # m^T X^{-1} m = rhs^T X rhs = m . rhs
        k = 1.0 - rho * c1 - (1.0 - rho) * c2 + float(m @ rhs)
        return m, k, k * x

    def trace_of(rho):
        _, k, shape = member(rho)
        return float(np.trace(shape)) if k > 0.0 else float("inf")

    grid = np.linspace(0.0, 1.0, 64)
    # Vectorized scan of the whole grid in one shot.
    xinv_g = grid[:, None, None] * p1 + (1.0 - grid)[:, None, None] * p2
    x_g = np.linalg.inv(xinv_g)
    rhs_g = grid[:, None] * v1 + (1.0 - grid)[:, None] * v2
    m_g = np.einsum("rij,rj->ri", x_g, rhs_g)
    k_g = 1.0 - grid * c1 - (1.0 - grid) * c2 + np.einsum("ri,ri->r", m_g, rhs_g)
    tr_g = k_g * np.trace(x_g, axis1=1, axis2=2)
    values = np.where(k_g > 0.0, tr_g, np.inf)
    # If the sets intersect then k(rho) >= 0 for every rho (any common point
    # satisfies the combined quadratic), so a strictly negative interior k
    # certifies an empty intersection.  The endpoints always have k = 1.
    interior = (grid > 0.0) & (grid < 1.0)
    if np.any(k_g[interior] < -1e-9) or not np.isfinite(values.min()):
        raise InconsistentMeasurementError(
            "prior and measurement set have empty intersection"
        )
    best = int(np.argmin(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    # Golden-section refinement on the bracketing interval.
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = trace_of(c), trace_of(d)
    for _ in range(16):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = trace_of(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = trace_of(d)
    mid = 0.5 * (a + b)
    # The grid already contains the endpoints rho = 0 and rho = 1, so only
    # the refined midpoint needs a fresh evaluation.
    candidates = [(values[best], grid[best]), (trace_of(mid), mid)]
    rho = min(candidates)[1]
    center, k, shape = member(rho)
    if k <= 0.0:
        raise InconsistentMeasurementError(
            "prior and measurement set have empty intersection"
        )
    return Ellipsoid(center, shape)


def apply_margin(e: Ellipsoid, margin: Ellipsoid) -> Ellipsoid:
    """Outer bound of e (+) margin; margin is centered at the origin so the
    result keeps e's center."""
    if np.linalg.norm(margin.center) > 1e-9:
        raise ValueError("margin must be centered at the origin")
    return minkowski_bound(e, margin)
