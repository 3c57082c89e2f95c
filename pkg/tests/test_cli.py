"""CLI subcommands run in-process through main()."""
import json

import yaml

from voroproj.cli import EXIT_FAIL, EXIT_OK, EXIT_PARSE, main

SINGLE = """\
dimension: 2
seed: 0
max_steps: 60
tick_rate_hz: 60.0
collision_threshold_m: 0.4
noise_semi_axes_m: [0.05, 0.05]
agents:
  - {start: [0.0, 0.0], goal: [3.0, 0.0], u_max_mps: 6.0, margin_semi_axes_m: [0.3, 0.3]}
"""

# Two agents pinned in place 0.3 m apart with a 0.4 m threshold: every step
# is a recorded violation.
VIOLATION = """\
dimension: 2
seed: 0
max_steps: 3
tick_rate_hz: 60.0
collision_threshold_m: 0.4
noise_semi_axes_m: [0.01, 0.01]
agents:
  - {start: [0.0, 0.0], goal: [0.0, 0.0], u_max_mps: 6.0, margin_semi_axes_m: [0.1, 0.1]}
  - {start: [0.3, 0.0], goal: [0.3, 0.0], u_max_mps: 6.0, margin_semi_axes_m: [0.1, 0.1]}
"""

ATOMS = [{"kind": "ellipsoid", "center": [4.0, 0.0], "shape": [[1.0, 0.0], [0.0, 1.0]]}]


def write(path, text):
    path.write_text(text)
    return str(path)


class TestRun:
    def test_single_agent_scenario(self, tmp_path, capsys):
        scen = write(tmp_path / "s.yaml", SINGLE)
        code = main(["run", "--scenario", scen, "--out", str(tmp_path / "out")])
        assert code == EXIT_OK
        assert (tmp_path / "out" / "trace.csv").exists()
        assert (tmp_path / "out" / "metrics.json").exists()
        assert (tmp_path / "out" / "collisions.txt").read_text() == "no collisions\n"
        out = capsys.readouterr().out
        assert "collisions: 0" in out
        metrics = json.loads((tmp_path / "out" / "metrics.json").read_text())
        # trace.csv rows = steps_executed x agent count.
        rows = (tmp_path / "out" / "trace.csv").read_text().splitlines()
        assert len(rows) - 1 == metrics["steps_executed"] * 1

    def test_violation_scenario_exits_nonzero(self, tmp_path, recwarn):
        scen = write(tmp_path / "v.yaml", VIOLATION)
        code = main(["run", "--scenario", scen, "--out", str(tmp_path / "out")])
        assert code == EXIT_FAIL
        report = (tmp_path / "out" / "collisions.txt").read_text()
        assert "agents=(0,1)" in report

    def test_parse_error(self, tmp_path, capsys):
        scen = write(tmp_path / "bad.yaml", "dimension: 9\n")
        code = main(["run", "--scenario", scen, "--out", str(tmp_path / "out")])
        assert code == EXIT_PARSE
        assert "error:" in capsys.readouterr().err

    def test_seed_override_reproducible_positions(self, tmp_path):
        scen = write(tmp_path / "s.yaml", SINGLE)
        main(["run", "--scenario", scen, "--out", str(tmp_path / "a"), "--seed", "1"])
        main(["run", "--scenario", scen, "--out", str(tmp_path / "b"), "--seed", "1"])

        def positions(path):
            rows = path.read_text().splitlines()[1:]
            return [row.split(",")[:4] for row in rows]

        assert positions(tmp_path / "a" / "trace.csv") == positions(
            tmp_path / "b" / "trace.csv"
        )


class TestProject:
    def test_classic_instance(self, tmp_path, capsys):
        atoms = write(tmp_path / "atoms.yaml", yaml.safe_dump(ATOMS))
        code = main([
            "project", "--current", "0,0", "--goal", "4,0", "--u-max", "10",
            "--atoms", atoms,
        ])
        assert code == EXIT_OK
        assert capsys.readouterr().out.strip() == "1.5 0"

    def test_goal_inside_cell_echoed(self, capsys):
        code = main(["project", "--current", "1,2", "--goal", "1.5,2", "--u-max", "10"])
        assert code == EXIT_OK
        assert capsys.readouterr().out.strip() == "1.5 2"

    def test_unsafe_current(self, tmp_path, capsys):
        atoms = write(
            tmp_path / "atoms.yaml",
            yaml.safe_dump([{"kind": "ellipsoid", "center": [0.2, 0.0],
                             "shape": [[1.0, 0.0], [0.0, 1.0]]}]),
        )
        code = main([
            "project", "--current", "0,0", "--goal", "4,0", "--u-max", "1",
            "--atoms", atoms,
        ])
        assert code == EXIT_FAIL
        assert capsys.readouterr().out.strip() == "FAIL current-position-unsafe"

    def test_bad_point(self, capsys):
        code = main(["project", "--current", "zero", "--goal", "1,0", "--u-max", "1"])
        assert code == EXIT_PARSE

    def test_bad_atoms_file(self, tmp_path, capsys):
        atoms = write(tmp_path / "atoms.yaml", yaml.safe_dump([{"kind": "cone"}]))
        code = main([
            "project", "--current", "0,0", "--goal", "1,0", "--u-max", "1",
            "--atoms", atoms,
        ])
        assert code == EXIT_PARSE


class TestBench:
    def test_small_sweep(self, tmp_path, capsys):
        out = str(tmp_path / "bench.json")
        code = main(["bench", "--counts", "1,3", "--instances", "2", "--out", out])
        assert code == EXIT_OK
        stdout = capsys.readouterr().out
        assert "median_ms" in stdout
        data = json.loads((tmp_path / "bench.json").read_text())
        assert [r["count"] for r in data["rows"]] == [1, 3]

    def test_instances_are_seed_reproducible(self, tmp_path):
        from voroproj.bench import generate_instance
        import numpy as np

        a1, g1 = generate_instance(np.random.default_rng((7, 3)), 3, 3)
        a2, g2 = generate_instance(np.random.default_rng((7, 3)), 3, 3)
        assert np.array_equal(g1, g2)
        for e1, e2 in zip(a1, a2):
            assert np.array_equal(e1.center, e2.center)
            assert np.array_equal(e1.shape, e2.shape)
