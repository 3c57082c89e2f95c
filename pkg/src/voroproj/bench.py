"""Wall-clock benchmark of the projection pipeline.

Times build+solve together per instance, sequentially, over a sweep of
obstacle counts.  Instance generation is seed-reproducible and excluded
from the timed section; the generator distribution is recorded in the
output metadata so numbers stay comparable across runs.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import Ellipsoid, ObstacleRegion
from .projection import build_problem, solve_projection
from .voronoi import CellSpec

_DISTRIBUTION = (
    "centers uniform in [-5, 5]^n excluding the ball of radius 2.5 around "
    "the origin; shapes are random rotations of diag(a^2) with semi-axes a "
    "uniform in [0.2, 2.0] m; goal at 6 m in a random direction; u_max 5 m"
)

_CENTER_EXCLUSION = 2.5
_GOAL_DISTANCE = 6.0
_U_MAX = 5.0


@dataclass(frozen=True)
class BenchmarkSpec:
    counts: tuple = (1, 3, 10, 30, 100)
    instances: int = 285
    seed: int = 0
    dimension: int = 3

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if any(c < 1 for c in self.counts):
            raise ValueError("obstacle counts must be positive")
        if self.instances < 1:
            raise ValueError("instances must be positive")


def random_rotation(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def generate_instance(rng, count, dimension):
    """(atoms, goal) for one instance; the origin is never inside an atom."""
    atoms = []
    for _ in range(count):
        while True:
            center = rng.uniform(-5.0, 5.0, size=dimension)
            if np.linalg.norm(center) >= _CENTER_EXCLUSION:
                break
        semi = rng.uniform(0.2, 2.0, size=dimension)
        rot = random_rotation(rng, dimension)
        atoms.append(Ellipsoid(center, rot @ np.diag(semi**2) @ rot.T))
    direction = rng.standard_normal(dimension)
    direction /= np.linalg.norm(direction)
    return atoms, _GOAL_DISTANCE * direction


@dataclass
class BenchmarkRow:
    count: int
    instances: int
    failures: int
    min_ms: float
    median_ms: float
    mean_ms: float
    max_ms: float
    times_ms: list = field(default_factory=list)


def run_benchmark(spec: BenchmarkSpec):
    """Returns (rows, metadata); one row per obstacle count."""
    rows = []
    origin = np.zeros(spec.dimension)
    for count in spec.counts:
        rng = np.random.default_rng((spec.seed, count))
        times = []
        failures = 0
        for _ in range(spec.instances):
            atoms, goal = generate_instance(rng, count, spec.dimension)
            start = time.perf_counter()
            cell = CellSpec(origin, tuple(ObstacleRegion((a,)) for a in atoms))
            problem = build_problem(cell, goal, _U_MAX)
            result = solve_projection(problem)
            elapsed_ms = (time.perf_counter() - start) * 1e3
            if result.ok:
                times.append(elapsed_ms)
            else:
                failures += 1
        arr = np.asarray(times) if times else np.asarray([float("nan")])
        rows.append(
            BenchmarkRow(
                count=count,
                instances=spec.instances,
                failures=failures,
                min_ms=float(arr.min()),
                median_ms=float(np.median(arr)),
                mean_ms=float(arr.mean()),
                max_ms=float(arr.max()),
                times_ms=[float(v) for v in times],
            )
        )
    metadata = {
        "dimension": spec.dimension,
        "seed": spec.seed,
        "instances_per_count": spec.instances,
        "counts": list(spec.counts),
        "distribution": _DISTRIBUTION,
        "timed_section": "build+solve",
    }
    return rows, metadata


def fit_slope(rows):
    """Least-squares slope of log(median time) against log(obstacle count)."""
    counts = np.asarray([r.count for r in rows], dtype=float)
    medians = np.asarray([r.median_ms for r in rows], dtype=float)
    if len(rows) < 2 or np.any(~np.isfinite(medians)) or np.any(medians <= 0):
        return float("nan")
    return float(np.polyfit(np.log(counts), np.log(medians), 1)[0])
