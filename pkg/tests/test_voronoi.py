"""Dual constraint values, dual maximization, and cell membership."""
import numpy as np
import pytest

from voroproj.geometry import Ellipsoid, ObstacleRegion, Polyhedron
from voroproj.voronoi import (
    CellSpec,
    DualConstraint,
    cell_membership,
    dual_value_ellipsoid,
    dual_value_polyhedron,
    maximize_dual,
    weak_duality_gap,
)


def random_ellipsoid(rng, dim):
    rot, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    semi = rng.uniform(0.3, 2.0, size=dim)
    return Ellipsoid(rng.uniform(-3.0, 3.0, size=dim), rot @ np.diag(semi**2) @ rot.T)


def oracle_ellipsoid_dual(e, x, lam):
    """inf_y ||y||^2 - 2 x^T y + lam (q(y) - 1) by solving the stationarity
    system (I + lam Sigma^{-1}) y = x + lam Sigma^{-1} mu directly."""
    n = e.dim
    p = e.shape_inv
    y = np.linalg.solve(np.eye(n) + lam * p, x + lam * p @ e.center)
    q = (y - e.center) @ p @ (y - e.center)
    return float(y @ y - 2.0 * x @ y + lam * (q - 1.0))


class TestDualValues:
    def test_zero_multiplier_is_negative_norm_squared(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.uniform(-4.0, 4.0, size=2)
            e = random_ellipsoid(rng, 2)
            c = DualConstraint(e)
            want = -float(x @ x)
            assert dual_value_ellipsoid(c, x, 0.0) == pytest.approx(
                want, abs=1e-12 * (1.0 + abs(want))
            )
            p = DualConstraint(Polyhedron.box(rng.uniform(-3, -1, 2), rng.uniform(1, 3, 2)))
            assert dual_value_polyhedron(p, x, np.zeros(4)) == pytest.approx(
                want, abs=1e-12 * (1.0 + abs(want))
            )

    def test_ellipsoid_dual_matches_stationarity_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            dim = int(rng.integers(2, 4))
            e = random_ellipsoid(rng, dim)
            c = DualConstraint(e)
            x = rng.uniform(-4.0, 4.0, size=dim)
            lam = float(rng.uniform(0.0, 5.0))
            got = dual_value_ellipsoid(c, x, lam)
            want = oracle_ellipsoid_dual(e, x, lam)
            assert got == pytest.approx(want, rel=1e-8, abs=1e-8)

    def test_polyhedron_dual_direct_formula(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            a = rng.standard_normal((4, 2))
            b = rng.uniform(0.5, 3.0, size=4)
            c = DualConstraint(Polyhedron(a, b))
            x = rng.uniform(-3.0, 3.0, size=2)
            lam = rng.uniform(0.0, 2.0, size=4)
            r = x - 0.5 * a.T @ lam
            want = -float(r @ r) - float(b @ lam)
            assert dual_value_polyhedron(c, x, lam) == pytest.approx(
                want, abs=1e-10 * (1.0 + abs(want))
            )

    def test_negative_multiplier_rejected(self):
        c = DualConstraint(Ellipsoid.ball([3.0, 0.0], 1.0))
        with pytest.raises(ValueError):
            dual_value_ellipsoid(c, np.zeros(2), -0.1)
        p = DualConstraint(Polyhedron.box([2.0, 2.0], [3.0, 3.0]))
        with pytest.raises(ValueError):
            dual_value_polyhedron(p, np.zeros(2), np.array([-1.0, 0, 0, 0]))


class TestMaximizeDual:
    def test_sign_tracks_cell_half(self):
        c = DualConstraint(Ellipsoid.ball([4.0, 0.0], 1.0))
        # Bisector of the origin and the ball is the line x1 = 1.5.
        _, inside = maximize_dual(c, np.array([1.0, 0.0]))
        _, outside = maximize_dual(c, np.array([2.0, 0.0]))
        assert inside > 0.0
        assert outside < 0.0

    def test_value_equals_primal_infimum(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            dim = int(rng.integers(2, 4))
            atom = (
                random_ellipsoid(rng, dim)
                if rng.random() < 0.7
                else Polyhedron.box(
                    rng.uniform(1.0, 2.0, size=dim), rng.uniform(2.5, 4.0, size=dim)
                )
            )
            c = DualConstraint(atom)
            x = rng.uniform(-3.0, 3.0, size=dim)
            lam, value = maximize_dual(c, x)
            primal = atom.distance(x) ** 2 - float(x @ x)
            assert value == pytest.approx(primal, abs=1e-8 * (1.0 + abs(primal)))
            assert np.all(np.asarray(lam) >= 0.0)

    def test_shifted_constraint_consistency(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            atom = random_ellipsoid(rng, 2)
            origin = rng.uniform(-2.0, 2.0, size=2)
            x = rng.uniform(-3.0, 3.0, size=2)
            c = DualConstraint(atom).shifted(origin)
            _, value = maximize_dual(c, x - origin)
            primal = atom.distance(x) ** 2 - float((x - origin) @ (x - origin))
            assert value == pytest.approx(primal, abs=1e-8 * (1.0 + abs(primal)))


class TestWeakDuality:
    def test_gap_nonnegative_random(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            dim = int(rng.integers(2, 4))
            if rng.random() < 0.6:
                atom = random_ellipsoid(rng, dim)
                lam = float(rng.uniform(0.0, 5.0))
            else:
                lo = rng.uniform(0.5, 1.5, size=dim)
                atom = Polyhedron.box(lo, lo + rng.uniform(0.5, 2.0, size=dim))
                lam = rng.uniform(0.0, 2.0, size=2 * dim)
            x = rng.uniform(-4.0, 4.0, size=dim)
            assert weak_duality_gap(atom, x, lam) >= -1e-7


class TestCellMembership:
    def test_basic(self):
        cell = CellSpec(
            np.zeros(2), (ObstacleRegion((Ellipsoid.ball([4.0, 0.0], 1.0),)),)
        )
        assert cell_membership(cell, [1.0, 0.0])
        assert cell_membership(cell, [1.5, 0.0])  # bisector
        assert not cell_membership(cell, [2.0, 0.0])

    def test_multiple_obstacles(self):
        cell = CellSpec(
            np.zeros(2),
            (
                ObstacleRegion((Ellipsoid.ball([4.0, 0.0], 1.0),)),
                ObstacleRegion((Polyhedron.box([-5.0, -5.0], [-3.0, 5.0]),)),
            ),
        )
        assert cell_membership(cell, [0.0, 1.0])
        assert not cell_membership(cell, [-2.5, 0.0])

    def test_dimension_mismatch(self):
        cell = CellSpec(np.zeros(2), ())
        with pytest.raises(Exception):
            cell_membership(cell, [1.0, 2.0, 3.0])
