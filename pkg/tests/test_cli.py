import json
import math
from pathlib import Path

import pytest
from click.testing import CliRunner

import noma_ra.cli as cli_mod
from noma_ra import max_gain_ratio, throughput_binomial, SystemConfig
from noma_ra.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def scenario_file(tmp_path: Path, **overrides) -> Path:
    doc = {
        "n": 10,
        "l": 4,
        "period_slots": 25,
        "u_max": 300,
        "seed": 7,
        "barring": True,
        "schedule": [{"slots": 250, "users": 20}, {"slots": 250, "users": 80}],
    }
    doc.update(overrides)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


class TestCurves:
    def test_single_level_peak_at_unit_load(self, runner, tmp_path):
        out = tmp_path / "curve.csv"
        result = runner.invoke(
            main,
            ["curves", "--model", "poisson", "--scheme", "noma", "--n", "10",
             "--l", "1", "--grid", "0:6:0.05", "--out", str(out), "--no-plot"],
        )
        assert result.exit_code == 0, result.output
        header, rows = read_csv(out)
        assert header == ["load", "normalized_throughput"]
        assert len(rows) == 121
        best = max(rows, key=lambda r: float(r[1]))
        assert float(best[0]) == pytest.approx(1.0, abs=1e-9)
        assert float(best[1]) == pytest.approx(0.368, abs=1e-3)

    def test_msaloha_equals_single_level_scheme(self, runner, tmp_path):
        a = tmp_path / "msaloha.csv"
        b = tmp_path / "noma_l1.csv"
        r1 = runner.invoke(
            main,
            ["curves", "--scheme", "msaloha", "--n", "10", "--l", "4",
             "--out", str(a), "--no-plot"],
        )
        r2 = runner.invoke(
            main,
            ["curves", "--scheme", "noma", "--n", "10", "--l", "1",
             "--out", str(b), "--no-plot"],
        )
        assert r1.exit_code == 0 and r2.exit_code == 0
        assert a.read_text() == b.read_text()

    def test_capture_sits_below_layered_curve(self, runner, tmp_path):
        paths = {}
        for scheme in ("noma", "msaloha", "capture"):
            out = tmp_path / f"{scheme}.csv"
            result = runner.invoke(
                main,
                ["curves", "--scheme", scheme, "--n", "1", "--l", "4",
                 "--grid", "0:6:0.25", "--out", str(out), "--no-plot"],
            )
            assert result.exit_code == 0
            paths[scheme] = read_csv(out)[1]
        for row_n, row_m, row_c in zip(
            paths["noma"], paths["msaloha"], paths["capture"]
        ):
            load = float(row_n[0])
            noma, msal, cap = (float(r[1]) for r in (row_n, row_m, row_c))
            assert cap <= noma + 1e-12
            # single-winner capture beats the plain baseline once load is
            # high enough for collisions to dominate; at light load the
            # dropped lone bottom-level packet costs it the lead
            if load >= 1.0:
                assert cap >= msal - 1e-12

    def test_binomial_model_rounds_users(self, runner, tmp_path):
        out = tmp_path / "binom.csv"
        result = runner.invoke(
            main,
            ["curves", "--model", "binomial", "--scheme", "noma", "--n", "10",
             "--l", "4", "--grid", "0:3:0.05", "--out", str(out), "--no-plot"],
        )
        assert result.exit_code == 0
        header, rows = read_csv(out)
        loads = [float(r[0]) for r in rows]
        assert loads == sorted(set(loads))
        assert loads[0] == 0.0
        cfg = SystemConfig(10, 4)
        for r in rows[:5]:
            u = round(float(r[0]) * 10)
            assert float(r[1]) == pytest.approx(
                throughput_binomial(u, cfg) / 10, rel=1e-12
            )

    def test_plot_lands_next_to_csv(self, runner, tmp_path):
        out = tmp_path / "curve.csv"
        result = runner.invoke(
            main,
            ["curves", "--n", "1", "--l", "2", "--grid", "0:2:0.5",
             "--out", str(out)],
        )
        assert result.exit_code == 0
        png = tmp_path / "curve.png"
        assert png.exists()
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        manifest = json.loads((tmp_path / "curve.manifest.json").read_text())
        assert manifest["output_paths"] == ["curve.csv", "curve.png"]

    @pytest.mark.parametrize(
        "grid", ["5:1:0.1", "0:6:0", "0:6:-1", "0:6", "a:b:c"]
    )
    def test_bad_grid_is_usage_error(self, runner, tmp_path, grid):
        result = runner.invoke(
            main,
            ["curves", "--grid", grid, "--out", str(tmp_path / "x.csv")],
        )
        assert result.exit_code == 2


class TestOptimal:
    def test_report_values(self, runner):
        result = runner.invoke(main, ["optimal", "--n", "10", "--l", "4", "--no-plot"])
        assert result.exit_code == 0
        got = dict(
            line.split(" = ") for line in result.output.strip().splitlines()
        )
        assert float(got["channel_load_star"]) == pytest.approx(2.6313, abs=1e-3)
        assert float(got["max_normalized_throughput"]) == pytest.approx(
            1.10035, abs=1e-4
        )
        assert float(got["idle_threshold"]) == pytest.approx(0.77510, abs=1e-4)
        assert got["u_star"] == "26"
        assert float(got["gain"]) == pytest.approx(2.9911, abs=1e-3)

    def test_single_level_report(self, runner):
        result = runner.invoke(main, ["optimal", "--n", "10", "--l", "1", "--no-plot"])
        assert result.exit_code == 0
        got = dict(
            line.split(" = ") for line in result.output.strip().splitlines()
        )
        assert float(got["lambda_star"]) == pytest.approx(1.0, abs=1e-6)
        assert float(got["gain"]) == pytest.approx(1.0, abs=1e-9)

    def test_report_file_written_when_asked(self, runner, tmp_path):
        out = tmp_path / "report.txt"
        result = runner.invoke(
            main, ["optimal", "--n", "10", "--l", "4", "--out", str(out), "--no-plot"]
        )
        assert result.exit_code == 0
        assert "u_star = 26" in out.read_text()
        assert (tmp_path / "report.manifest.json").exists()

    def test_sweep_csv(self, runner, tmp_path):
        out = tmp_path / "sweep.csv"
        result = runner.invoke(
            main, ["optimal", "--n", "10", "--l", "1..8", "--out", str(out), "--no-plot"]
        )
        assert result.exit_code == 0
        header, rows = read_csv(out)
        assert header == [
            "l", "lambda_star", "channel_load_star", "max_norm_throughput", "gain"
        ]
        assert [r[0] for r in rows] == [str(l) for l in range(1, 9)]
        gains = [float(r[4]) for r in rows]
        assert all(b > a for a, b in zip(gains, gains[1:]))
        for l, g in zip(range(2, 9), gains[1:]):
            assert g < l

    def test_sweep_needs_out(self, runner):
        result = runner.invoke(main, ["optimal", "--l", "1..4"])
        assert result.exit_code == 2

    @pytest.mark.parametrize("spec", ["0", "4..2", "x", "1..y"])
    def test_bad_level_spec(self, runner, tmp_path, spec):
        result = runner.invoke(
            main, ["optimal", "--l", spec, "--out", str(tmp_path / "x.csv")]
        )
        assert result.exit_code == 2


class TestSimulate:
    def test_summary_row(self, runner, tmp_path):
        out = tmp_path / "sim.csv"
        result = runner.invoke(
            main,
            ["simulate", "--scheme", "noma", "--n", "10", "--l", "4",
             "--arrivals", "poisson:0.65", "--slots", "2000", "--seed", "42",
             "--out", str(out)],
        )
        assert result.exit_code == 0
        header, rows = read_csv(out)
        assert header == [
            "scheme", "n", "l", "load", "slots", "seed",
            "mean_norm_throughput", "idle_freq", "std_err",
        ]
        row = rows[0]
        assert row[:3] == ["noma", "10", "4"]
        assert float(row[3]) == pytest.approx(2.6, abs=1e-12)
        assert row[4:6] == ["2000", "42"]
        assert 0.9 < float(row[6]) < 1.3

    def test_same_seed_byte_identical(self, runner, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            result = runner.invoke(
                main,
                ["simulate", "--arrivals", "binomial:26,0.9", "--slots", "500",
                 "--seed", "3", "--out", str(out)],
            )
            assert result.exit_code == 0
            outs.append(out.read_text())
        assert outs[0] == outs[1]

    def test_env_seed_default_and_override(self, runner, tmp_path):
        env_out = tmp_path / "env.csv"
        result = runner.invoke(
            main,
            ["simulate", "--arrivals", "poisson:0.3", "--slots", "200",
             "--out", str(env_out)],
            env={"NOMA_RA_SEED": "99"},
        )
        assert result.exit_code == 0
        assert read_csv(env_out)[1][0][5] == "99"
        flag_out = tmp_path / "flag.csv"
        result = runner.invoke(
            main,
            ["simulate", "--arrivals", "poisson:0.3", "--slots", "200",
             "--seed", "5", "--out", str(flag_out)],
            env={"NOMA_RA_SEED": "99"},
        )
        assert result.exit_code == 0
        assert read_csv(flag_out)[1][0][5] == "5"

    def test_bad_env_seed_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["simulate", "--arrivals", "poisson:0.3", "--slots", "10",
             "--out", str(tmp_path / "x.csv")],
            env={"NOMA_RA_SEED": "not-a-number"},
        )
        assert result.exit_code == 2

    def test_paper_capture_lone_packet(self, runner, tmp_path):
        out = tmp_path / "cap.csv"
        result = runner.invoke(
            main,
            ["simulate", "--scheme", "capture", "--capture-semantics", "paper",
             "--n", "1", "--l", "2", "--arrivals", "binomial:1,1.0",
             "--slots", "20000", "--seed", "0", "--out", str(out)],
        )
        assert result.exit_code == 0
        mean = float(read_csv(out)[1][0][6])
        assert mean == pytest.approx(0.5, abs=0.02)

    def test_trace_output(self, runner, tmp_path):
        out = tmp_path / "sim.csv"
        trace = tmp_path / "trace.csv"
        result = runner.invoke(
            main,
            ["simulate", "--n", "3", "--l", "2", "--arrivals", "poisson:0.5",
             "--slots", "40", "--seed", "1", "--out", str(out),
             "--trace", str(trace)],
        )
        assert result.exit_code == 0
        header, rows = read_csv(trace)
        assert header == ["t", "channel", "successes", "idle", "collision_level"]
        assert len(rows) == 120
        manifest = json.loads((tmp_path / "sim.manifest.json").read_text())
        assert manifest["output_paths"] == ["sim.csv", "trace.csv"]

    @pytest.mark.parametrize(
        "spec", ["poisson", "poisson:x", "binomial:1.5", "uniform:3", "binomial:2,x"]
    )
    def test_bad_arrivals_spec(self, runner, tmp_path, spec):
        result = runner.invoke(
            main,
            ["simulate", "--arrivals", spec, "--out", str(tmp_path / "x.csv")],
        )
        assert result.exit_code == 2


class TestBarring:
    def test_time_series(self, runner, tmp_path):
        config = scenario_file(tmp_path)
        out = tmp_path / "run.csv"
        result = runner.invoke(
            main, ["barring", "--config", str(config), "--out", str(out), "--no-plot"]
        )
        assert result.exit_code == 0, result.output
        header, rows = read_csv(out)
        assert header == [
            "period", "start_slot", "users_total", "users_active",
            "t_insta", "p_idle_insta", "p_access",
        ]
        assert len(rows) == 20
        assert [r[2] for r in rows[:10]] == ["20"] * 10
        assert [r[2] for r in rows[10:]] == ["80"] * 10

    def test_barring_false_pins_probability(self, runner, tmp_path):
        config = scenario_file(tmp_path)
        out = tmp_path / "off.csv"
        result = runner.invoke(
            main,
            ["barring", "--config", str(config), "--out", str(out),
             "--barring", "false", "--no-plot"],
        )
        assert result.exit_code == 0
        _, rows = read_csv(out)
        assert {r[6] for r in rows} == {"1.0"}

    def test_seed_override_changes_run(self, runner, tmp_path):
        config = scenario_file(tmp_path)
        base = tmp_path / "base.csv"
        other = tmp_path / "other.csv"
        assert runner.invoke(
            main, ["barring", "--config", str(config), "--out", str(base), "--no-plot"]
        ).exit_code == 0
        assert runner.invoke(
            main,
            ["barring", "--config", str(config), "--out", str(other),
             "--seed", "123", "--no-plot"],
        ).exit_code == 0
        assert base.read_text() != other.read_text()

    def test_same_config_same_bytes(self, runner, tmp_path):
        config = scenario_file(tmp_path)
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for out in (a, b):
            assert runner.invoke(
                main,
                ["barring", "--config", str(config), "--out", str(out), "--no-plot"],
            ).exit_code == 0
        assert a.read_text() == b.read_text()

    def test_schema_error_reports_field_path(self, runner, tmp_path):
        config = scenario_file(tmp_path, period_slots="25")
        result = runner.invoke(
            main,
            ["barring", "--config", str(config), "--out", str(tmp_path / "x.csv")],
        )
        assert result.exit_code == 2
        assert "period_slots" in result.output

    def test_missing_config_file(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["barring", "--config", str(tmp_path / "nope.json"),
             "--out", str(tmp_path / "x.csv")],
        )
        assert result.exit_code == 2

    def test_bundled_scenario_parses(self, runner, tmp_path):
        bundled = Path(__file__).parent.parent / "scenarios" / "user_ramp.json"
        out = tmp_path / "ramp.csv"
        result = runner.invoke(
            main, ["barring", "--config", str(bundled), "--out", str(out), "--no-plot"]
        )
        assert result.exit_code == 0
        _, rows = read_csv(out)
        assert len(rows) == 200
        assert [rows[k][2] for k in (0, 50, 100, 150)] == ["20", "50", "80", "110"]


class TestCompare:
    def test_gain_table(self, runner, tmp_path):
        out = tmp_path / "compare.csv"
        result = runner.invoke(
            main, ["compare", "--l", "1..4", "--out", str(out), "--no-plot"]
        )
        assert result.exit_code == 0
        header, rows = read_csv(out)
        assert header == ["l", "noma_max", "msaloha_max", "capture_max", "gain"]
        assert len(rows) == 4
        for row in rows:
            l = int(row[0])
            assert float(row[2]) == pytest.approx(1 / math.e, rel=1e-12)
            assert float(row[4]) == pytest.approx(max_gain_ratio(l), rel=1e-9)
            assert float(row[3]) <= float(row[1])


class TestManifests:
    def test_fields_and_basenames(self, runner, tmp_path):
        out = tmp_path / "sweep.csv"
        result = runner.invoke(
            main, ["optimal", "--l", "1..3", "--out", str(out)]
        )
        assert result.exit_code == 0
        manifest = json.loads((tmp_path / "sweep.manifest.json").read_text())
        assert set(manifest) == {
            "command", "parameters", "seed", "tool_version", "output_paths"
        }
        assert manifest["command"] == "optimal"
        assert all("/" not in p for p in manifest["output_paths"])
        assert manifest["output_paths"][0] == "sweep.csv"


class TestExitCodes:
    def test_internal_failure_maps_to_three(self, runner, tmp_path, monkeypatch):
        def boom(*args, **kwargs):
            raise RuntimeError("forced for the exit-code contract")

        monkeypatch.setattr(cli_mod, "optimal_lambda", boom)
        result = runner.invoke(
            main, ["optimal", "--l", "4", "--out", str(tmp_path / "x.txt")]
        )
        assert result.exit_code == 3

    def test_usage_error_is_two(self, runner):
        result = runner.invoke(main, ["curves"])
        assert result.exit_code == 2
