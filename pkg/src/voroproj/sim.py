"""Deterministic N-agent simulator.

Each tick every agent, from a shared snapshot of true positions, receives
noisy measurements of its neighbors, updates its set-membership estimates,
projects its goal onto the safe-reachable set, and moves to the returned
point (or holds on failure).  All moves commit simultaneously; collisions
are monitored from the true positions after each tick.
"""
from __future__ import annotations

import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ScenarioError
from .estimation import EstimateBank, Measurement, apply_margin
from .geometry import Ellipsoid, ObstacleRegion
from .projection import build_problem, inflate_for_dynamics, solve_projection
from .voronoi import CellSpec

GOAL_TOL = 1e-3
STALL_LIMIT = 120

THREADS_ENV = "VOROPROJ_THREADS"


@dataclass(frozen=True)
class AgentSpec:
    start: np.ndarray
    goal: np.ndarray
    u_max: float  # meters per step
    margin_semi_axes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=float))
        object.__setattr__(
            self, "margin_semi_axes", np.asarray(self.margin_semi_axes, dtype=float)
        )


@dataclass(frozen=True)
class Scenario:
    dimension: int
    agents: tuple
    noise_semi_axes: np.ndarray
    epsilon: float
    max_steps: int
    tick_rate_hz: float
    seed: int
    collision_threshold: float
    sensing_radius: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(
            self, "noise_semi_axes", np.asarray(self.noise_semi_axes, dtype=float)
        )
        if self.dimension not in (2, 3):
            raise ScenarioError("dimension must be 2 or 3")
        if self.max_steps < 1:
            raise ScenarioError("max_steps must be positive")
        if self.epsilon < 0:
            raise ScenarioError("epsilon must be nonnegative")
        if self.collision_threshold < 0:
            raise ScenarioError("collision threshold must be nonnegative")
        if self.noise_semi_axes.shape != (self.dimension,):
            raise ScenarioError("noise_semi_axes must have one entry per dimension")
        for a in self.agents:
            if a.start.shape != (self.dimension,) or a.goal.shape != (self.dimension,):
                raise ScenarioError("agent start/goal dimension mismatch")
            if a.margin_semi_axes.shape != (self.dimension,):
                raise ScenarioError("agent margin dimension mismatch")
            if a.u_max <= 0:
                raise ScenarioError("agent u_max must be positive")
        for i, a in enumerate(self.agents):
            for b in self.agents[i + 1 :]:
                if np.linalg.norm(a.start - b.start) <= self.collision_threshold:
                    warnings.warn(
                        "agents start within the collision threshold; the safety "
                        "guarantee assumes a collision-free initial configuration",
                        stacklevel=2,
                    )


@dataclass
class AgentState:
    ident: int
    position: np.ndarray
    goal: np.ndarray
    u_max: float
    margin: Ellipsoid
    bank: EstimateBank
    status: str = "moving"  # moving | at-goal | stalled
    fail_streak: int = 0
    completion_step: int | None = None
    warm: dict = field(default_factory=dict)  # neighbor id -> last multiplier
    inflation: dict = field(default_factory=dict)  # neighbor id -> margin (+) reach ball


@dataclass(frozen=True)
class TraceRecord:
    step: int
    agent_id: int
    position: np.ndarray
    status: str  # "ok" or the projection failure reason
    solve_time_us: float
    min_neighbor_dist: float


def make_agents(s: Scenario):
    agents = []
    for i, spec in enumerate(s.agents):
        margin = Ellipsoid(
            np.zeros(s.dimension), np.diag(spec.margin_semi_axes**2)
        )
        agents.append(
            AgentState(
                ident=i,
                position=spec.start.copy(),
                goal=spec.goal.copy(),
                u_max=spec.u_max,
                margin=margin,
                bank=EstimateBank(owner=i, margin=margin),
            )
        )
    for a in agents:
        for b in agents:
            if b.ident != a.ident:
                # Symmetric dynamics need no reachability inflation (both
                # agents keep to their own cell); only the excess of a
                # faster neighbor's reach must be added.
                excess = max(0.0, b.u_max - a.u_max)
                a.inflation[b.ident] = inflate_for_dynamics(a.margin, excess)
    return agents


def step_agent(agent: AgentState, observations, u_max_by_id, epsilon):
    """One tick for one agent: filter update, projection, move-or-hold.

    observations maps neighbor id -> Measurement or None (dropout);
    returns (new_position, status_string, solve_time_us).
    """
    for j in sorted(observations):
        bound = u_max_by_id[j]
        meas = observations[j]
        if meas is None:
            agent.bank.coast(j, bound)
        else:
            agent.bank.update(meas, bound)

    if agent.status == "at-goal":
        return agent.position, "ok", 0.0

    neighbor_ids = sorted(agent.bank.estimates)
    atoms = []
    for j in neighbor_ids:
        # One Minkowski bound with the precomputed margin+reachability
        # ellipsoid: physical extents plus where the neighbor can move
        # within this tick, so the margin chosen now survives its move.
        atoms.append(
            apply_margin(agent.bank.estimates[j], agent.inflation[j])
        )
    cell = CellSpec(agent.position, tuple(ObstacleRegion((a,)) for a in atoms))
    problem = build_problem(cell, agent.goal, agent.u_max, epsilon)
    warm = [agent.warm.get(j) for j in neighbor_ids]
    if any(w is None for w in warm):
        warm = None

    start = time.perf_counter()
    result = solve_projection(problem, warm_multipliers=warm, gap=1e-6, polish=False)
    elapsed_us = (time.perf_counter() - start) * 1e6

    if result.ok:
        agent.warm = dict(zip(neighbor_ids, result.multipliers))
        agent.fail_streak = 0
        if agent.status == "stalled":
            agent.status = "moving"
        return result.point, "ok", elapsed_us
    agent.fail_streak += 1
    if agent.fail_streak >= STALL_LIMIT:
        agent.status = "stalled"
    return agent.position, result.reason, elapsed_us


def run(s: Scenario):
    """Execute the scenario; returns (traces, metrics)."""
    rng = np.random.default_rng(s.seed)
    agents = make_agents(s)
    n_agents = len(agents)
    noise = Ellipsoid(np.zeros(s.dimension), np.diag(s.noise_semi_axes**2))
    u_max_by_id = {a.ident: a.u_max for a in agents}

    threads = 1
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            threads = max(1, int(raw))
        except ValueError:
            threads = 1

    traces = []
    solve_times = []
    fail_counts = {}
    min_pairwise = float("inf")
    steps_executed = 0

    for a in agents:
        if np.linalg.norm(a.position - a.goal) <= GOAL_TOL:
            a.status = "at-goal"
            a.completion_step = 0

    for t in range(s.max_steps):
        # Always run at least one tick so every agent has a trace record.
        if t > 0 and all(a.status == "at-goal" for a in agents):
            break
        steps_executed = t + 1
        snapshot = [a.position.copy() for a in agents]

        # All noise draws happen here, sequentially in a fixed order, so the
        # run is reproducible regardless of the thread count.
        observations = []
        for i in range(n_agents):
            obs = {}
            for j in range(n_agents):
                if j == i:
                    continue
                gap = float(np.linalg.norm(snapshot[j] - snapshot[i]))
                if s.sensing_radius is not None and gap > s.sensing_radius:
                    if agents[i].bank.estimates.get(j) is not None:
                        obs[j] = None  # coast on dropout
                    continue
                obs[j] = Measurement(j, snapshot[j] + noise.sample(rng), noise)
            observations.append(obs)

        def tick(i):
            return step_agent(agents[i], observations[i], u_max_by_id, s.epsilon)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                outcomes = list(pool.map(tick, range(n_agents)))
        else:
            outcomes = [tick(i) for i in range(n_agents)]

        # Commit all moves simultaneously.
        for a, (pos, status, us) in zip(agents, outcomes):
            a.position = np.asarray(pos, dtype=float).copy()
            if status == "ok":
                if us > 0.0:
                    solve_times.append(us)
                if (
                    a.completion_step is None
                    and np.linalg.norm(a.position - a.goal) <= GOAL_TOL
                ):
                    a.status = "at-goal"
                    a.completion_step = t + 1
            else:
                solve_times.append(us)
                fail_counts[status] = fail_counts.get(status, 0) + 1

        for i, a in enumerate(agents):
            if n_agents > 1:
                dmin = min(
                    float(np.linalg.norm(a.position - b.position))
                    for b in agents
                    if b is not a
                )
                min_pairwise = min(min_pairwise, dmin)
            else:
                dmin = float("inf")
            traces.append(
                TraceRecord(t, i, a.position.copy(), outcomes[i][1], outcomes[i][2], dmin)
            )

    stats = {}
    if solve_times:
        arr = np.asarray(solve_times)
        stats = {
            "min_us": float(arr.min()),
            "median_us": float(np.median(arr)),
            "mean_us": float(arr.mean()),
            "max_us": float(arr.max()),
        }
    metrics = {
        "steps_executed": steps_executed,
        "min_pairwise_distance": min_pairwise if n_agents > 1 else None,
        "completion_steps": {a.ident: a.completion_step for a in agents},
        "all_at_goal": all(a.status == "at-goal" for a in agents),
        "solve_time": stats,
        "failure_counts": fail_counts,
        "final_statuses": {a.ident: a.status for a in agents},
    }
    return traces, metrics


def check_collisions(traces, threshold):
    """Post-hoc collision report from trace records alone.

    Returns a list of (step, agent_i, agent_j, distance) tuples for every
    pair closer than the threshold at any step.
    """
    by_step = {}
    for rec in traces:
        by_step.setdefault(rec.step, []).append(rec)
    report = []
    for step in sorted(by_step):
        records = sorted(by_step[step], key=lambda r: r.agent_id)
        for a_idx in range(len(records)):
            for b_idx in range(a_idx + 1, len(records)):
                ra, rb = records[a_idx], records[b_idx]
                d = float(np.linalg.norm(ra.position - rb.position))
                if d < threshold:
                    report.append((step, ra.agent_id, rb.agent_id, d))
    return report
