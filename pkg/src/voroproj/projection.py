"""Projection of a goal point onto the safe-reachable set.

The solved program (coordinates translated so the current position is the
origin) is

    minimize    ||x - x^g||^2
    subject to  0 <= g_k(x, lam_k)          one dual constraint per atom
                lam_k >= 0
                ||x|| <= u_max
                H x <= h                    optional extra halfspaces

where g_k is the analytic Lagrange dual of atom k (see :mod:`.voronoi`).
The solver is a log-barrier Newton method on this dual form followed by a
KKT polish of the active set; every returned point is re-verified against
the original cell constraint through the geometry distance oracles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import DimensionMismatchError, EmptySetError
from .geometry import Ellipsoid, ObstacleRegion, minkowski_bound, nonneg_qp_multipliers
from .voronoi import CellSpec, DualConstraint, cell_membership, maximize_dual

UNSAFE = "current-position-unsafe"
INFEASIBLE = "infeasible"
NUMERIC = "numeric-failure"

UNSAFE_DISTANCE_TOL = 1e-9
VERIFY_TOL = 1e-6
BARRIER_GAP = 1e-9
BARRIER_MU = 20.0


@dataclass(frozen=True)
class ProjectionProblem:
    current: np.ndarray
    goal: np.ndarray
    constraints: tuple
    u_max: float
    epsilon: float = 0.0
    halfspace_normals: np.ndarray | None = None
    halfspace_offsets: np.ndarray | None = None

    def __post_init__(self):
        cur = np.asarray(self.current, dtype=float)
        goal = np.asarray(self.goal, dtype=float)
        if cur.shape != goal.shape or cur.ndim != 1:
            raise DimensionMismatchError("current/goal must be vectors of equal size")
        if self.u_max <= 0:
            raise ValueError("u_max must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        constraints = tuple(self.constraints)
        for c in constraints:
            if c.dim != cur.size:
                raise DimensionMismatchError("constraint dimension mismatch")
        hn, ho = self.halfspace_normals, self.halfspace_offsets
        if hn is not None:
            hn = np.atleast_2d(np.asarray(hn, dtype=float))
            ho = np.asarray(ho, dtype=float).reshape(-1)
            if hn.shape != (ho.size, cur.size):
                raise DimensionMismatchError("halfspace shapes inconsistent")
        object.__setattr__(self, "current", cur)
        object.__setattr__(self, "goal", goal)
        object.__setattr__(self, "constraints", constraints)
        object.__setattr__(self, "halfspace_normals", hn)
        object.__setattr__(self, "halfspace_offsets", ho)

    @property
    def dim(self):
        return self.current.size

    def cell(self) -> CellSpec:
        return CellSpec(
            self.current, tuple(ObstacleRegion((c.atom,)) for c in self.constraints)
        )


@dataclass(frozen=True)
class SolverStats:
    newton_iterations: int = 0
    barrier_stages: int = 0
    polished: bool = False
    objective: float = 0.0
    shortcut: bool = False
    active_constraints: int = 0


@dataclass(frozen=True)
class ProjectionResult:
    """Either a safe point with its multipliers, or a typed failure."""

    point: np.ndarray | None
    multipliers: tuple | None
    stats: SolverStats | None
    reason: str | None = None

    @property
    def ok(self):
        return self.point is not None

    @classmethod
    def failure(cls, reason):
        return cls(None, None, None, reason)


def build_problem(cell: CellSpec, goal, u_max, epsilon=0.0, extra=None) -> ProjectionProblem:
    """One dual constraint per atom; union regions contribute their atoms
    independently."""
    hn = ho = None
    if extra is not None:
        hn, ho = extra
    return ProjectionProblem(
        current=cell.generator,
        goal=np.asarray(goal, dtype=float),
        constraints=tuple(DualConstraint(a) for a in cell.atoms()),
        u_max=float(u_max),
        epsilon=float(epsilon),
        halfspace_normals=hn,
        halfspace_offsets=ho,
    )


def inflate_for_dynamics(atom: Ellipsoid, reach_radius: float) -> Ellipsoid:
    """Outer bound of atom (+) ball(0, reach_radius); center unchanged."""
    if reach_radius < 0:
        raise ValueError("reach_radius must be nonnegative")
    if reach_radius == 0.0:
        return atom
    return minkowski_bound(atom, Ellipsoid.ball(np.zeros(atom.dim), reach_radius))


def solve_projection(
    problem: ProjectionProblem, warm_multipliers=None, gap=BARRIER_GAP, polish=True
) -> ProjectionResult:
    """Solve the projection; never raises, failures land in the result.

    gap is the barrier duality-gap target; loosening it trades optimality
    precision for speed (feasibility is verified independently either way).
    """
    origin = problem.current
    cell = problem.cell()

    # Degenerate cell: the conic problem is ill-posed when the current
    # position already touches an obstacle atom.
    distances = [c.atom.distance(origin) for c in problem.constraints]
    if any(d <= UNSAFE_DISTANCE_TOL for d in distances):
        return ProjectionResult.failure(UNSAFE)

    goal_t = problem.goal - origin
    hn = problem.halfspace_normals
    ho = None
    if hn is not None:
        ho = problem.halfspace_offsets - hn @ origin

    # An atom further than 2 u_max from the current position cannot cut the
    # reachable ball: dist(atom, x) >= dist(atom, x^c) - u_max >= u_max >= step.
    keep = [i for i, d in enumerate(distances) if d < 2.0 * problem.u_max]
    active = [problem.constraints[i].shifted(origin) for i in keep]
    warm = None
    if warm_multipliers is not None and len(warm_multipliers) == len(problem.constraints):
        warm = [warm_multipliers[i] for i in keep]

    shortcut_pt = _clip_shortcut(goal_t, problem.u_max, active, hn, ho)
    if shortcut_pt is not None:
        x_hat = shortcut_pt
        lams_active = [
            0.0 if c.is_ellipsoid else np.zeros(c.multiplier_dim) for c in active
        ]
        stats = SolverStats(shortcut=True, active_constraints=len(active))
    else:
        solver = _BarrierSolver(active, goal_t, problem.u_max, hn, ho, gap=gap)
        start = solver.find_start(warm)
        if start is None:
            return ProjectionResult.failure(INFEASIBLE)
        outcome = solver.solve(start, polish=polish)
        if outcome is None:
            return ProjectionResult.failure(NUMERIC)
        x_hat, lams_active, stats = outcome

    # Scatter multipliers back over the pruned constraints (0 for pruned).
    multipliers = [
        0.0 if c.is_ellipsoid else np.zeros(c.multiplier_dim)
        for c in problem.constraints
    ]
    for i, lam in zip(keep, lams_active):
        multipliers[i] = lam

    x_star = origin + x_hat
    if problem.epsilon > 0.0:
        x_star = _epsilon_shrink(problem, x_star)

    if not _verify(problem, cell, x_star):
        return ProjectionResult.failure(NUMERIC)
    stats = SolverStats(
        newton_iterations=stats.newton_iterations,
        barrier_stages=stats.barrier_stages,
        polished=stats.polished,
        objective=float(np.sum((x_star - problem.goal) ** 2)),
        shortcut=stats.shortcut,
        active_constraints=stats.active_constraints,
    )
    return ProjectionResult(x_star, tuple(multipliers), stats)


def _clip_shortcut(goal_t, u_max, constraints, hn, ho):
    """Projection of the goal onto the reachable ball alone; optimal for the
    full problem whenever it happens to satisfy every other constraint."""
    r = float(np.linalg.norm(goal_t))
    x = goal_t if r <= u_max else goal_t * (u_max / r)
    step = min(r, u_max)
    if hn is not None and np.any(hn @ x - ho > 0.0):
        return None
    if all(c.atom.distance(x) >= step - 1e-12 for c in constraints):
        return x
    return None


def _epsilon_shrink(problem, x_hat):
    """Largest theta on a 16-point backtracking grid keeping an epsilon gap
    between the distance to every atom and the distance travelled."""
    origin = problem.current
    atoms = [c.atom for c in problem.constraints]
    if not atoms:
        return x_hat
    thetas = np.arange(16, 0, -1) / 16.0
    pts = origin + thetas[:, None] * (x_hat - origin)
    steps = thetas * float(np.linalg.norm(x_hat - origin))
    margins = np.full(len(thetas), np.inf)
    for a in atoms:
        if isinstance(a, Ellipsoid):
            dists = a.distance_many(pts)
        else:
            dists = np.array([a.distance(p) for p in pts])
        margins = np.minimum(margins, dists - steps)
    ok = margins >= problem.epsilon
    if np.any(ok):
        return pts[int(np.argmax(ok))]
    return origin.copy()


def _verify(problem, cell, x_star):
    step = float(np.linalg.norm(x_star - problem.current))
    if step > problem.u_max + VERIFY_TOL:
        return False
    if problem.halfspace_normals is not None:
        resid = problem.halfspace_normals @ x_star - problem.halfspace_offsets
        if np.any(resid > VERIFY_TOL):
            return False
    return cell_membership(cell, x_star, tol=VERIFY_TOL)


class _BarrierSolver:
    """Log-barrier Newton on the dual form, with a KKT polish.

    Hessian assembly walks the constraints one by one; the barrier value
    and strict feasibility checks used inside the line search are
    vectorized over the ellipsoid block.
    """

    def __init__(self, constraints, goal, u_max, hn, ho, gap=BARRIER_GAP):
        self.goal = goal
        self.n = goal.size
        self.u_max = float(u_max)
        self.hn = hn
        self.ho = ho
        self.gap = gap
        self.constraints = list(constraints)
        self.ell_pos = [i for i, c in enumerate(self.constraints) if c.is_ellipsoid]
        k = len(self.ell_pos)
        n = self.n
        self.U = np.empty((k, n, n))  # U[k] columns are the eigenvectors
        self.d = np.empty((k, n))
        self.t = np.empty((k, n))
        self.cf = np.empty(k)
        for row, i in enumerate(self.ell_pos):
            c = self.constraints[i]
            self.U[row] = c.basis
            self.d[row] = c.eigvals
            self.t[row] = c.t_coeff
            self.cf[row] = c.center_form - 1.0
        self.n_hs = 0 if hn is None else hn.shape[0]
        self.poly_blocks = []  # filled after offsets are known
        self.sizes = [1 if c.is_ellipsoid else c.multiplier_dim for c in self.constraints]
        self.total_lam = sum(self.sizes)
        self.offsets = []
        off = n
        for size in self.sizes:
            self.offsets.append(off)
            off += size
        self.poly_blocks = [
            (i, c, o, s)
            for i, (c, o, s) in enumerate(
                zip(self.constraints, self.offsets, self.sizes)
            )
            if not c.is_ellipsoid
        ]
        self.ell_offs = np.array(
            [self.offsets[i] for i in self.ell_pos], dtype=int
        )
        self.m_total = len(self.constraints) + self.total_lam + 1 + self.n_hs

    # ---- packing ---------------------------------------------------------
    def pack(self, x, lams):
        return np.concatenate(
            [x] + [np.atleast_1d(np.asarray(l, float)) for l in lams]
        )

    def unpack(self, z):
        x = z[: self.n]
        lams = []
        for c, off, size in zip(self.constraints, self.offsets, self.sizes):
            block = z[off : off + size]
            lams.append(float(block[0]) if c.is_ellipsoid else block)
        return x, lams

    def _ell_lam(self, z):
        return z[self.ell_offs]

    # ---- initial point ---------------------------------------------------
    def find_start(self, warm=None):
        x0 = np.zeros(self.n)
        if self.hn is not None and np.any(self.ho <= 0.0):
            x0 = self._phase_one()
            if x0 is None:
                return None
        lams = [None] * len(self.constraints)
        if warm is not None:
            for i, (c, cand) in enumerate(zip(self.constraints, warm)):
                try:
                    if c.is_ellipsoid:
                        cand = max(float(cand), 1e-10)
                    else:
                        cand = np.maximum(np.asarray(cand, float), 1e-10)
                        if cand.size != c.multiplier_dim:
                            continue
                    if c.value(x0, cand) > 0.0:
                        lams[i] = cand
                except (TypeError, ValueError):
                    pass
        missing_ell = [i for i in self.ell_pos if lams[i] is None]
        if missing_ell:
            rows = [self.ell_pos.index(i) for i in missing_ell]
            found = self._ellipsoid_start_multipliers(x0, rows)
            if found is None:
                return None
            for i, lam in zip(missing_ell, found):
                lams[i] = lam
        for i, c in enumerate(self.constraints):
            if lams[i] is not None:
                continue
            lam_star, g_star = maximize_dual(c, x0)
            if g_star <= 0.0:
                return None
            lam = np.asarray(lam_star, float)
            bump = 1e-10 * (1.0 + np.abs(lam).max())
            while np.any(lam <= 0.0):
                cand = np.maximum(lam, bump)
                if c.value(x0, cand) > 0.0:
                    lam = cand
                    break
                bump *= 0.1
                if bump < 1e-300:
                    return None
            lams[i] = lam
        return self.pack(x0, lams)

    def _ellipsoid_start_multipliers(self, x0, rows):
        """Vectorized concave 1-D maximization of each ellipsoid dual in
        lambda at the start point; returns None if any maximum is <= 0
        (start not strictly inside the cell)."""
        u = self.U[rows]
        d = self.d[rows]
        t = self.t[rows]
        cf = self.cf[rows]
        w = np.einsum("kij,i->kj", u, x0)  # U^T x0 rows

        def slope(lam):
            q = w + lam[:, None] * t
            s = d + lam[:, None]
            return -np.sum(2.0 * d * q * t / s - d * q * q / s**2, axis=1) + cf

        if np.any(slope(np.zeros(len(rows))) <= 0.0):
            return None
        hi = np.ones(len(rows))
        for _ in range(200):
            mask = slope(hi) >= 0.0
            if not mask.any():
                break
            hi[mask] *= 4.0
        lo = np.zeros(len(rows))
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            pos = slope(mid) > 0.0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
        lam = 0.5 * (lo + hi)
        q = w + lam[:, None] * t
        s = d + lam[:, None]
        g = -np.sum(d * q * q / s, axis=1) + lam * cf
        if np.any(g <= 0.0):
            return None
        return [float(v) for v in np.maximum(lam, 1e-12)]

    def _phase_one(self):
        """Strictly feasible x for the halfspace block inside cell and ball.

        Alternating projections between the (slightly shrunk) halfspace set
        and the cell-and-ball set, which contains the origin.
        """
        delta = 1e-9 * (1.0 + float(np.abs(self.ho).max()))
        x = np.zeros(self.n)
        if not self._strictly_in_cell(x):
            return None
        for _ in range(100):
            try:
                lam = nonneg_qp_multipliers(self.hn, self.ho - delta, x)
            except EmptySetError:
                return None
            x = x - 0.5 * self.hn.T @ lam
            if np.linalg.norm(x) > self.u_max:
                return None
            if self._strictly_in_cell(x):
                return x
            # Pull toward the origin (strictly inside the cell) until the
            # cell constraint holds again.
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if self._strictly_in_cell(mid * x):
                    lo = mid
                else:
                    hi = mid
            x = lo * x
            if np.all(self.hn @ x - self.ho < 0.0):
                return x
        return None

    def _strictly_in_cell(self, x):
        r = float(np.linalg.norm(x))
        if r > self.u_max * (1.0 - 1e-9):
            return False
        return all(c.atom.distance(x) > r + 1e-12 for c in self.constraints)

    # ---- strict feasibility (vectorized over the ellipsoid block) --------
    def strictly_feasible(self, z):
        x = z[: self.n]
        if float(x @ x) >= self.u_max**2:
            return False
        if self.hn is not None and np.any(self.ho - self.hn @ x <= 0.0):
            return False
        if self.ell_pos:
            lam = self._ell_lam(z)
            if np.any(lam <= 0.0):
                return False
            w = np.einsum("kij,i->kj", self.U, x)
            q = w + lam[:, None] * self.t
            s = self.d + lam[:, None]
            phi = -np.sum(self.d * q * q / s, axis=1) + lam * self.cf
            if np.any(phi <= 0.0):
                return False
        for i, c, off, size in self.poly_blocks:
            l = z[off : off + size]
            if np.any(l <= 0.0) or c.value(x, l) <= 0.0:
                return False
        return True

    # ---- derivatives -----------------------------------------------------
    def grad_hess(self, z, tbar):
        n = self.n
        big = n + self.total_lam
        grad = np.zeros(big)
        hess = np.zeros((big, big))
        x, lams = self.unpack(z)

        grad[:n] = 2.0 * tbar * (x - self.goal)
        hess[np.arange(n), np.arange(n)] += 2.0 * tbar

        if self.ell_pos:
            lam = self._ell_lam(z)
            d, t, u = self.d, self.t, self.U
            w = np.einsum("kij,i->kj", u, x)
            q = w + lam[:, None] * t
            s = d + lam[:, None]
            kcoef = d / s
            phi = -np.sum(kcoef * q * q, axis=1) + lam * self.cf
            tmq = t - q / s
            gx = np.einsum("kij,kj->ki", u, -2.0 * kcoef * q)
            glam = -np.sum(2.0 * kcoef * q * t - kcoef / s * q * q, axis=1) + self.cf
            hxlam = np.einsum("kij,kj->ki", u, -2.0 * kcoef * tmq)
            hll = -2.0 * np.sum(d * tmq * tmq / s, axis=1)
            inv = 1.0 / phi
            inv2 = inv * inv
            grad[:n] -= inv @ gx
            grad[self.ell_offs] = -inv * glam - 1.0 / lam
            hess[:n, :n] += np.einsum("k,ki,kj->ij", inv2, gx, gx) + 2.0 * np.einsum(
                "k,kil,kl,kjl->ij", inv, u, kcoef, u
            )
            hess[self.ell_offs, self.ell_offs] += (
                inv2 * glam * glam - inv * hll + 1.0 / lam**2
            )
            cross = inv2[:, None] * gx * glam[:, None] - inv[:, None] * hxlam
            hess[: n, self.ell_offs] += cross.T
            hess[self.ell_offs, : n] += cross

        for i, c, off, size in self.poly_blocks:
            a = c.atom.normals
            b = c.atom.offsets
            l = np.asarray(lams[i], float)
            r = x - 0.5 * a.T @ l
            phi = float(-(r @ r) - b @ l)
            gx = -2.0 * r
            glam = a @ r - b
            inv = 1.0 / phi
            inv2 = inv * inv
            sl = slice(off, off + size)
            grad[:n] -= inv * gx
            grad[sl] += -inv * glam - 1.0 / l
            hess[:n, :n] += inv2 * np.outer(gx, gx) + 2.0 * inv * np.eye(n)
            hess[sl, sl] += (
                inv2 * np.outer(glam, glam)
                + 0.5 * inv * (a @ a.T)
                + np.diag(1.0 / l**2)
            )
            cross = inv2 * np.outer(gx, glam) - inv * a.T
            hess[:n, sl] += cross
            hess[sl, :n] += cross.T

        psi = self.u_max**2 - float(x @ x)
        grad[:n] += 2.0 * x / psi
        hess[:n, :n] += 4.0 * np.outer(x, x) / psi**2
        hess[np.arange(n), np.arange(n)] += 2.0 / psi

        if self.hn is not None:
            rho = self.ho - self.hn @ x
            grad[:n] += self.hn.T @ (1.0 / rho)
            hess[:n, :n] += (self.hn.T / rho**2) @ self.hn
        return grad, hess

    # ---- main loop -------------------------------------------------------
    def solve(self, z0, polish=True):
        z = z0
        tbar = 1.0
        stages = 0
        newton_total = 0
        while True:
            z, iters = self._center(z, tbar)
            if z is None:
                return None
            newton_total += iters
            stages += 1
            if self.m_total / tbar < self.gap:
                break
            tbar *= BARRIER_MU
            if stages > 60:
                return None
        x, lams = self.unpack(z)
        polished = False
        if polish:
            pol = self._polish(z, tbar)
            if pol is not None:
                x, lams = pol
                polished = True
        obj = float(np.sum((x - self.goal) ** 2))
        stats = SolverStats(
            newton_total, stages, polished, obj, False, len(self.constraints)
        )
        return x, lams, stats

    def _center(self, z, tbar):
        """Damped Newton: full steps inside the quadratic-convergence
        region, 1/(1 + decrement) damping outside it, and backtracking only
        to stay strictly feasible.  No merit-function comparisons, which
        would drown in rounding noise once t is large."""
        for it in range(60):
            grad, hess = self.grad_hess(z, tbar)
            dz = self._newton_step(hess, grad)
            if dz is None:
                return None, it
            decrement_sq = float(-grad @ dz)
            # The centering objective scales with tbar, and so does the
            # smallest decrement distinguishable from rounding noise.
            if decrement_sq <= 1e-13 * max(1.0, tbar):
                return z, it
            dec = np.sqrt(max(decrement_sq, 0.0))
            alpha = 1.0 if dec <= 0.25 else 1.0 / (1.0 + dec)
            for _ in range(60):
                if self.strictly_feasible(z + alpha * dz):
                    break
                alpha *= 0.5
            else:
                return z, it  # boundary pinch; let the next stage refine
            z = z + alpha * dz
        return z, 60

    @staticmethod
    def _newton_step(hess, grad):
        jitter = 0.0
        scale = max(float(np.trace(hess)) / hess.shape[0], 1.0)
        for _ in range(8):
            try:
                h = hess if jitter == 0.0 else hess + jitter * np.eye(hess.shape[0])
                cho = scipy.linalg.cho_factor(h, check_finite=False)
                return -scipy.linalg.cho_solve(cho, grad, check_finite=False)
            except np.linalg.LinAlgError:
                jitter = max(jitter * 10.0, 1e-12 * scale)
        return None

    # ---- KKT polish ------------------------------------------------------
    def _polish(self, z, tbar):
        x, lams = self.unpack(z)
        grad_obj = 2.0 * (x - self.goal)
        act_tol = 1e-7 * max(1.0, float(np.linalg.norm(grad_obj)))

        act = []  # (constraint index, nu estimate, free lambda mask)
        for i, (c, l) in enumerate(zip(self.constraints, lams)):
            phi = c.value(x, l)
            nu = 1.0 / (tbar * phi)
            if nu > act_tol:
                if c.is_ellipsoid:
                    free = np.array([True])
                else:
                    free = np.asarray(l) > 1e-7
                act.append((i, nu, free))
        psi = self.u_max**2 - float(x @ x)
        nu_ball = 1.0 / (tbar * psi)
        ball_active = nu_ball > act_tol
        hs_active = []
        if self.hn is not None:
            rho = self.ho - self.hn @ x
            hs_active = [j for j in range(self.n_hs) if 1.0 / (tbar * rho[j]) > act_tol]

        if not act and not ball_active and not hs_active:
            return None  # interior optimum; the shortcut normally catches it

        n = self.n
        lam0 = []
        for i, nu, free in act:
            lam0.extend(np.atleast_1d(np.asarray(lams[i], float))[free])
        v0 = np.concatenate(
            [
                x,
                np.asarray(lam0, float),
                np.asarray([nu for _, nu, _ in act], float),
                [nu_ball] if ball_active else [],
                [1.0 / (tbar * (self.ho[j] - self.hn[j] @ x)) for j in hs_active],
            ]
        )

        def split(v):
            xx = v[:n]
            off = n
            lam_full = [np.atleast_1d(np.asarray(l, float)).copy() for l in lams]
            for i, _, free in act:
                cnt = int(free.sum())
                lam_full[i][free] = v[off : off + cnt]
                off += cnt
            nus = v[off : off + len(act)]
            off += len(act)
            nb = v[off] if ball_active else 0.0
            off += 1 if ball_active else 0
            nhs = v[off : off + len(hs_active)]
            return xx, lam_full, nus, nb, nhs

        def residual(v):
            xx, lam_full, nus, nb, nhs = split(v)
            stat = 2.0 * (xx - self.goal)
            eqs = []
            for (i, _, free), nu in zip(act, nus):
                c = self.constraints[i]
                l = float(lam_full[i][0]) if c.is_ellipsoid else lam_full[i]
                gx, glam, phi = _constraint_derivatives(c, xx, l)
                stat = stat - nu * gx
                eqs.append([phi])
                if free.any():
                    eqs.append(np.atleast_1d(glam)[free])
            if ball_active:
                stat = stat + 2.0 * nb * xx
                eqs.append([xx @ xx - self.u_max**2])
            for j, nu in zip(hs_active, nhs):
                stat = stat + nu * self.hn[j]
                eqs.append([self.hn[j] @ xx - self.ho[j]])
            return np.concatenate([stat] + [np.asarray(e, float).ravel() for e in eqs])

        sol = scipy.optimize.root(residual, v0, method="hybr", tol=1e-12)
        if not sol.success or np.max(np.abs(residual(sol.x))) > 1e-8:
            return None
        xx, lam_full, nus, nb, nhs = split(sol.x)
        if np.any(nus < -1e-9) or (ball_active and nb < -1e-9) or np.any(nhs < -1e-9):
            return None
        for i, _, _ in act:
            if np.any(lam_full[i] < -1e-9):
                return None
        # The polished point must not violate anything the active set left out.
        if float(xx @ xx) > self.u_max**2 + 1e-9:
            return None
        if self.hn is not None and np.any(self.hn @ xx - self.ho > 1e-9):
            return None
        r = float(np.linalg.norm(xx))
        for c in self.constraints:
            if c.atom.distance(xx) < r - 1e-7:
                return None
        if float(np.sum((xx - self.goal) ** 2)) > float(np.sum((x - self.goal) ** 2)) + 1e-7:
            return None
        out = [
            float(np.clip(l[0], 0.0, None)) if c.is_ellipsoid else np.clip(l, 0.0, None)
            for c, l in zip(self.constraints, lam_full)
        ]
        return xx, out


def _constraint_derivatives(c: DualConstraint, x, lam):
    """(grad_x g, grad_lam g, g) for one dual constraint."""
    if c.is_ellipsoid:
        lam = float(lam)
        d = c.eigvals
        w = c.basis.T @ x
        q = w + lam * c.t_coeff
        s = d + lam
        kcoef = d / s
        phi = float(-np.sum(kcoef * q * q) + lam * (c.center_form - 1.0))
        gx = c.basis @ (-2.0 * kcoef * q)
        glam = float(
            -np.sum(2.0 * kcoef * q * c.t_coeff - (d / s**2) * q * q)
            + c.center_form
            - 1.0
        )
        return gx, glam, phi
    a = c.atom.normals
    b = c.atom.offsets
    lam = np.asarray(lam, float)
    r = x - 0.5 * a.T @ lam
    phi = float(-(r @ r) - b @ lam)
    return -2.0 * r, a @ r - b, phi
