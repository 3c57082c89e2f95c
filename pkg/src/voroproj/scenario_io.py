"""Scenario files and run artifacts.

Scenario files are YAML with explicit units in the key names; speeds are
given in meters/second and converted to meters/step using the tick rate.
Artifacts are a trace CSV, a metrics JSON, and a plain-text collision
report.
"""
from __future__ import annotations

import json

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ScenarioError
from .sim import AgentSpec, Scenario

_FLOAT_FMT = "%.9g"


class AgentModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: list[float]
    goal: list[float]
    u_max_mps: float = Field(gt=0)
    margin_semi_axes_m: list[float]


class ScenarioModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dimension: int = Field(ge=2, le=3)
    seed: int = 0
    max_steps: int = Field(gt=0)
    tick_rate_hz: float = Field(gt=0)
    collision_threshold_m: float = Field(ge=0)
    epsilon_m: float = Field(ge=0, default=0.0)
    noise_semi_axes_m: list[float]
    sensing_radius_m: float | None = None
    agents: list[AgentModel] = Field(min_length=1)

    def to_scenario(self) -> Scenario:
        dt = 1.0 / self.tick_rate_hz
        agents = tuple(
            AgentSpec(
                start=np.asarray(a.start, dtype=float),
                goal=np.asarray(a.goal, dtype=float),
                u_max=a.u_max_mps * dt,
                margin_semi_axes=np.asarray(a.margin_semi_axes_m, dtype=float),
            )
            for a in self.agents
        )
        try:
            return Scenario(
                dimension=self.dimension,
                agents=agents,
                noise_semi_axes=np.asarray(self.noise_semi_axes_m, dtype=float),
                epsilon=self.epsilon_m,
                max_steps=self.max_steps,
                tick_rate_hz=self.tick_rate_hz,
                seed=self.seed,
                collision_threshold=self.collision_threshold_m,
                sensing_radius=self.sensing_radius_m,
            )
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc

    @classmethod
    def from_scenario(cls, s: Scenario) -> "ScenarioModel":
        return cls(
            dimension=s.dimension,
            seed=s.seed,
            max_steps=s.max_steps,
            tick_rate_hz=s.tick_rate_hz,
            collision_threshold_m=s.collision_threshold,
            epsilon_m=s.epsilon,
            noise_semi_axes_m=[float(v) for v in s.noise_semi_axes],
            sensing_radius_m=s.sensing_radius,
            agents=[
                AgentModel(
                    start=[float(v) for v in a.start],
                    goal=[float(v) for v in a.goal],
                    u_max_mps=a.u_max * s.tick_rate_hz,
                    margin_semi_axes_m=[float(v) for v in a.margin_semi_axes],
                )
                for a in s.agents
            ],
        )


def parse_scenario_text(text: str) -> Scenario:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError("scenario file must contain a mapping at top level")
    try:
        model = ScenarioModel.model_validate(raw)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            lines.append(f"{loc}: {err['msg']}")
        raise ScenarioError("invalid scenario: " + "; ".join(lines)) from exc
    return model.to_scenario()


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_scenario_text(text)


def emit_scenario_text(s: Scenario) -> str:
    model = ScenarioModel.from_scenario(s)
    data = model.model_dump(exclude_none=True)
    return yaml.safe_dump(data, sort_keys=False)


def save_scenario(s: Scenario, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_scenario_text(s))


def write_trace_csv(traces, dimension, path):
    header = (
        ["step", "agent_id"]
        + [f"x{i}" for i in range(dimension)]
        + ["status", "solve_time_us", "min_neighbor_dist_m"]
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for rec in traces:
            row = [str(rec.step), str(rec.agent_id)]
            row += [_FLOAT_FMT % v for v in rec.position]
            dmin = rec.min_neighbor_dist
            row += [
                rec.status,
                _FLOAT_FMT % rec.solve_time_us,
                _FLOAT_FMT % dmin if np.isfinite(dmin) else "inf",
            ]
            fh.write(",".join(row) + "\n")


def write_metrics_json(metrics, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(metrics), fh, indent=2)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_collision_report(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        if not report:
            fh.write("no collisions\n")
            return
        for step, i, j, dist in report:
            fh.write(
                f"step={step} agents=({i},{j}) distance={_FLOAT_FMT % dist}\n"
            )
