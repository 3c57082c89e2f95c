"""Scenario files and run artifacts: parsing, round-trips, writers."""
import json

import numpy as np
import pytest

from voroproj.errors import ScenarioError
from voroproj.scenario_io import (
    emit_scenario_text,
    load_scenario,
    parse_scenario_text,
    write_collision_report,
    write_metrics_json,
    write_trace_csv,
)
from voroproj.sim import TraceRecord

VALID = """\
dimension: 2
seed: 3
max_steps: 50
tick_rate_hz: 60.0
collision_threshold_m: 0.4
epsilon_m: 0.05
noise_semi_axes_m: [0.05, 0.05]
agents:
  - {start: [0.0, 0.0], goal: [3.0, 0.0], u_max_mps: 6.0, margin_semi_axes_m: [0.3, 0.3]}
  - {start: [3.0, 1.0], goal: [0.0, 1.0], u_max_mps: 3.0, margin_semi_axes_m: [0.2, 0.2]}
"""


class TestParsing:
    def test_valid_scenario(self):
        s = parse_scenario_text(VALID)
        assert s.dimension == 2
        assert s.seed == 3
        assert len(s.agents) == 2
        # Speeds convert from m/s to m/step at the tick rate.
        assert s.agents[0].u_max == pytest.approx(0.1)
        assert s.agents[1].u_max == pytest.approx(0.05)
        assert s.epsilon == pytest.approx(0.05)

    def test_round_trip(self):
        s = parse_scenario_text(VALID)
        s2 = parse_scenario_text(emit_scenario_text(s))
        assert s2.dimension == s.dimension
        assert s2.seed == s.seed
        assert np.allclose(s2.noise_semi_axes, s.noise_semi_axes)
        for a, b in zip(s.agents, s2.agents):
            assert np.allclose(a.start, b.start)
            assert np.allclose(a.goal, b.goal)
            assert a.u_max == pytest.approx(b.u_max)
            assert np.allclose(a.margin_semi_axes, b.margin_semi_axes)

    def test_unknown_key_names_field(self):
        bad = VALID + "unknown_key: 1\n"
        with pytest.raises(ScenarioError, match="unknown_key"):
            parse_scenario_text(bad)

    def test_missing_field_names_field(self):
        bad = VALID.replace("max_steps: 50\n", "")
        with pytest.raises(ScenarioError, match="max_steps"):
            parse_scenario_text(bad)

    def test_bad_value_names_agent_field(self):
        bad = VALID.replace("u_max_mps: 6.0", "u_max_mps: -1.0")
        with pytest.raises(ScenarioError, match="u_max_mps"):
            parse_scenario_text(bad)

    def test_not_yaml(self):
        with pytest.raises(ScenarioError, match="YAML"):
            parse_scenario_text("{ [ :::")

    def test_top_level_not_mapping(self):
        with pytest.raises(ScenarioError, match="mapping"):
            parse_scenario_text("- 1\n- 2\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read"):
            load_scenario(tmp_path / "nope.yaml")

    def test_noise_dimension_mismatch(self):
        bad = VALID.replace("[0.05, 0.05]", "[0.05, 0.05, 0.05]")
        with pytest.raises(ScenarioError):
            parse_scenario_text(bad)


class TestWriters:
    def traces(self):
        return [
            TraceRecord(0, 0, np.array([0.0, 0.5]), "ok", 120.0, 1.25),
            TraceRecord(0, 1, np.array([1.0, -0.5]), "ok", 95.0, 1.25),
            TraceRecord(1, 0, np.array([0.1, 0.5]), "infeasible", 80.0, float("inf")),
        ]

    def test_trace_csv(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(self.traces(), 2, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "step,agent_id,x0,x1,status,solve_time_us,min_neighbor_dist_m"
        assert len(lines) == 4
        assert lines[1] == "0,0,0,0.5,ok,120,1.25"
        assert lines[3].endswith("infeasible,80,inf")

    def test_metrics_json(self, tmp_path):
        path = tmp_path / "metrics.json"
        write_metrics_json(
            {"a": np.float64(1.5), "b": float("inf"), "c": {"d": np.int64(2)},
             "e": np.array([1.0, 2.0])},
            path,
        )
        data = json.loads(path.read_text())
        assert data == {"a": 1.5, "b": None, "c": {"d": 2}, "e": [1.0, 2.0]}

    def test_collision_report_empty(self, tmp_path):
        path = tmp_path / "collisions.txt"
        write_collision_report([], path)
        assert path.read_text() == "no collisions\n"

    def test_collision_report_entries(self, tmp_path):
        path = tmp_path / "collisions.txt"
        write_collision_report([(3, 0, 1, 0.25)], path)
        assert path.read_text() == "step=3 agents=(0,1) distance=0.25\n"
