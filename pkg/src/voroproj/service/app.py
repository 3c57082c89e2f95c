"""FastAPI application and the shared handler functions.

The handlers are plain functions over the pydantic models so the CLI can
call them in-process without an HTTP round trip.
"""
from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, HTTPException

from ..bench import BenchmarkSpec, fit_slope, run_benchmark
from ..errors import ScenarioError, VoroprojError
from ..geometry import ObstacleRegion
from ..projection import build_problem, solve_projection
from ..sim import check_collisions, run
from ..voronoi import CellSpec
from .models import (
    BenchRequest,
    BenchResponse,
    BenchRow,
    CollisionModel,
    ProjectRequest,
    ProjectResponse,
    SimulateRequest,
    SimulateResponse,
    TraceRowModel,
)


def handle_project(req: ProjectRequest) -> ProjectResponse:
    atoms = tuple(a.to_atom() for a in req.atoms)
    cell = CellSpec(
        np.asarray(req.current, dtype=float),
        tuple(ObstacleRegion((a,)) for a in atoms),
    )
    extra = None
    if req.halfspace_normals is not None:
        extra = (
            np.asarray(req.halfspace_normals, dtype=float),
            np.asarray(req.halfspace_offsets, dtype=float),
        )
    problem = build_problem(cell, req.goal, req.u_max, req.epsilon, extra)
    result = solve_projection(problem)
    if not result.ok:
        return ProjectResponse(ok=False, reason=result.reason)
    return ProjectResponse(
        ok=True,
        point=[float(v) for v in result.point],
        objective=result.stats.objective,
        newton_iterations=result.stats.newton_iterations,
    )


def handle_simulate(req: SimulateRequest) -> SimulateResponse:
    scenario = req.scenario.to_scenario()
    traces, metrics = run(scenario)
    report = check_collisions(traces, scenario.collision_threshold)
    trace_rows = None
    if req.include_trace:
        trace_rows = [
            TraceRowModel(
                step=r.step,
                agent_id=r.agent_id,
                position=[float(v) for v in r.position],
                status=r.status,
                solve_time_us=r.solve_time_us,
                min_neighbor_dist_m=(
                    r.min_neighbor_dist if math.isfinite(r.min_neighbor_dist) else None
                ),
            )
            for r in traces
        ]
    return SimulateResponse(
        metrics=_clean(metrics),
        collisions=[
            CollisionModel(step=s, agent_a=i, agent_b=j, distance=d)
            for s, i, j, d in report
        ],
        trace=trace_rows,
    )


def handle_bench(req: BenchRequest) -> BenchResponse:
    spec = BenchmarkSpec(
        counts=tuple(req.counts),
        instances=req.instances,
        seed=req.seed,
        dimension=req.dimension,
    )
    rows, metadata = run_benchmark(spec)
    slope = fit_slope(rows)
    return BenchResponse(
        rows=[BenchRow(**vars(r)) for r in rows],
        metadata=metadata,
        loglog_slope=slope if math.isfinite(slope) else None,
    )


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def create_app() -> FastAPI:
    app = FastAPI(title="voroproj", version="0.1.0")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/project", response_model=ProjectResponse)
    def project(req: ProjectRequest):
        try:
            return handle_project(req)
        except VoroprojError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        try:
            return handle_simulate(req)
        except ScenarioError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest):
        try:
            return handle_bench(req)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    return app


app = create_app()
