"""Request/response schemas for the HTTP service."""
from __future__ import annotations

from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..geometry import Ellipsoid, Polyhedron
from ..scenario_io import ScenarioModel

__all__ = [
    "EllipsoidModel",
    "PolyhedronModel",
    "AtomModel",
    "ProjectRequest",
    "ProjectResponse",
    "SimulateRequest",
    "SimulateResponse",
    "BenchRequest",
    "BenchRow",
    "BenchResponse",
    "ScenarioModel",
]


class EllipsoidModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["ellipsoid"] = "ellipsoid"
    center: list[float]
    shape: list[list[float]]

    def to_atom(self) -> Ellipsoid:
        return Ellipsoid(np.asarray(self.center), np.asarray(self.shape))


class PolyhedronModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["polyhedron"] = "polyhedron"
    normals: list[list[float]]
    offsets: list[float]

    def to_atom(self) -> Polyhedron:
        return Polyhedron(np.asarray(self.normals), np.asarray(self.offsets))


AtomModel = Annotated[
    Union[EllipsoidModel, PolyhedronModel], Field(discriminator="kind")
]


class ProjectRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    current: list[float]
    goal: list[float]
    u_max: float = Field(gt=0)
    epsilon: float = Field(ge=0, default=0.0)
    atoms: list[AtomModel] = Field(default_factory=list)
    halfspace_normals: list[list[float]] | None = None
    halfspace_offsets: list[float] | None = None


class ProjectResponse(BaseModel):
    ok: bool
    point: list[float] | None = None
    reason: str | None = None
    objective: float | None = None
    newton_iterations: int | None = None


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: ScenarioModel
    include_trace: bool = False


class TraceRowModel(BaseModel):
    step: int
    agent_id: int
    position: list[float]
    status: str
    solve_time_us: float
    min_neighbor_dist_m: float | None


class CollisionModel(BaseModel):
    step: int
    agent_a: int
    agent_b: int
    distance: float


class SimulateResponse(BaseModel):
    metrics: dict
    collisions: list[CollisionModel]
    trace: list[TraceRowModel] | None = None


class BenchRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    counts: list[int] = [1, 3, 10, 30, 100]
    instances: int = Field(gt=0, default=285)
    seed: int = 0
    dimension: int = Field(ge=2, le=3, default=3)


class BenchRow(BaseModel):
    count: int
    instances: int
    failures: int
    min_ms: float
    median_ms: float
    mean_ms: float
    max_ms: float
    times_ms: list[float]


class BenchResponse(BaseModel):
    rows: list[BenchRow]
    metadata: dict
    loglog_slope: float | None
