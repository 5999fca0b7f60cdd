"""Command-line interface tests: config handling, emission, exit codes."""

import json
import math
import os

import pytest

from bellfield.cli import (
    EXIT_IO,
    EXIT_OK,
    EXIT_PHYSICS,
    EXIT_USAGE,
    ConfigError,
    build_config,
    main,
    parse_angle,
    parse_config_file,
)


def run_cli(*args):
    return main(list(args))


class TestParseAngle:
    def test_radians(self):
        assert parse_angle("1.5") == 1.5

    def test_degrees_suffix(self):
        assert parse_angle("45deg") == pytest.approx(math.pi / 4.0)
        assert parse_angle(" 90 deg ") == pytest.approx(math.pi / 2.0)

    def test_invalid(self):
        with pytest.raises(ConfigError):
            parse_angle("fast")


class TestConfig:
    def test_defaults_are_unpolarized_run(self, capsys, tmp_path):
        # Empty config plus defaults: unpolarized field, seed 0, N = 10^4.
        cfg_file = tmp_path / "empty.cfg"
        cfg_file.write_text("# nothing here\n")
        code = run_cli("tomography", "--config", str(cfg_file),
                       "--n_realizations", "50")
        assert code == EXIT_OK
        values = parse_config_file(str(cfg_file))
        assert values == {}

    def test_config_file_round_trip(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(
            "dop = 0.125\n"
            "seed = 9\n"
            "phase_error = 5 deg\n"
            "# comment line\n"
            "n_realizations = 250\n"
        )
        values = parse_config_file(str(cfg_file))
        assert values["dop"] == 0.125
        assert values["seed"] == 9
        assert values["phase_error"] == pytest.approx(math.radians(5.0))
        assert values["n_realizations"] == 250

    def test_dop_resolves_schmidt_pair_at_load(self, tmp_path):
        class Args:
            config = None
            command = "x"

        args = Args()
        for f in ("kappa1", "dop", "intensity", "n_realizations", "seed",
                  "samples_per_realization", "detector_noise", "phase_error",
                  "angle_grid_step", "output_path", "output_format", "path"):
            setattr(args, f, None)
        args.dop = "0.125"
        cfg = build_config(args)
        pair = cfg.schmidt
        assert pair.kappa1 == pytest.approx(0.750, abs=5e-4)
        assert pair.kappa2 == pytest.approx(0.661, abs=5e-4)

    def test_exclusive_kappa_and_dop(self, capsys):
        assert run_cli("bell", "--maximize", "--kappa1", "0.75",
                       "--dop", "0.125") == EXIT_USAGE
        assert "mutually exclusive" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg_file = tmp_path / "bad.cfg"
        cfg_file.write_text("wavelength = 780\n")
        assert run_cli("tomography", "--config", str(cfg_file)) == EXIT_USAGE
        assert "unknown key" in capsys.readouterr().err

    def test_out_of_range_values(self, capsys):
        assert run_cli("bell", "--maximize", "--dop", "1.5") == EXIT_USAGE
        assert run_cli("bell", "--maximize", "--intensity", "0") == EXIT_USAGE
        assert run_cli("bell", "--maximize", "--detector_noise",
                       "0.5") == EXIT_USAGE

    def test_missing_config_file(self, capsys):
        assert run_cli("tomography", "--config", "/nonexistent.cfg") == EXIT_USAGE

    def test_usage_error_exit_code(self):
        assert run_cli("unknown-command") == EXIT_USAGE
        assert run_cli("bell") == EXIT_USAGE  # no mode, no angles


class TestBellCommand:
    def test_maximize_unpolarized_prints_tsirelson(self, capsys):
        assert run_cli("bell", "--maximize", "--dop", "0") == EXIT_OK
        captured = capsys.readouterr()
        assert "bell = 2.828427" in captured.err
        header, row = captured.out.strip().split("\n")
        assert header.startswith("a_rad,a_prime_rad,b_rad,b_prime_rad,")
        assert float(row.split(",")[8]) == pytest.approx(2.8284271, abs=1e-6)

    def test_maximize_measured_field_matches_closed_form(self, capsys):
        # dop = 0.125 gives exactly normalized weights, hence the closed-form
        # maximum 2 * sqrt(1 + 4 k1^2 k2^2) = 2.81734.
        assert run_cli("bell", "--maximize", "--dop", "0.125") == EXIT_OK
        row = capsys.readouterr().out.strip().split("\n")[1]
        assert float(row.split(",")[8]) == pytest.approx(
            2.0 * math.sqrt(1.0 + 4.0 * 0.5625 * 0.4375), abs=1e-6
        )

    def test_explicit_settings(self, capsys):
        assert run_cli("bell", "--dop", "0", "--a", "0", "--a_prime",
                       "45deg", "--b", "-22.5deg", "--b_prime",
                       "22.5deg") == EXIT_OK
        row = capsys.readouterr().out.strip().split("\n")[1]
        assert float(row.split(",")[8]) == pytest.approx(2.8284271, abs=1e-6)

    def test_gisin_degenerate_exits_physics_code(self, capsys):
        assert run_cli("bell", "--gisin", "--dop", "1") == EXIT_PHYSICS
        assert "degenerate" in capsys.readouterr().err

    def test_mc_path(self, capsys):
        assert run_cli("bell", "--gisin", "--dop", "0", "--path", "mc",
                       "--n_realizations", "500") == EXIT_OK
        row = capsys.readouterr().out.strip().split("\n")[1]
        fields = row.split(",")
        assert float(fields[8]) == pytest.approx(2.828, abs=0.1)
        assert float(fields[9]) > 0.0


class TestScanCommand:
    def test_four_curves_peak_at_matching_angles(self, tmp_path):
        out = tmp_path / "scan.csv"
        assert run_cli("scan", "--dop", "0", "--b",
                       "0,0.7853981633974483,1.5707963267948966,2.356194490192345",
                       "--output", str(out)) == EXIT_OK
        rows = [line.split(",") for line in
                out.read_text().strip().split("\n")[1:]]
        by_b = {}
        for a, b, c, stderr in rows:
            by_b.setdefault(float(b), []).append((float(a), float(c)))
        assert len(by_b) == 4
        for b, points in by_b.items():
            best_a, best_c = max(points, key=lambda p: p[1])
            assert best_c == pytest.approx(1.0, abs=1e-9)
            assert math.cos(2.0 * (best_a - b)) == pytest.approx(1.0, abs=1e-9)

    def test_svg_written_next_to_csv(self, tmp_path):
        out = tmp_path / "scan.csv"
        assert run_cli("scan", "--dop", "0", "--output", str(out),
                       "--angle_grid_step", "30deg") == EXIT_OK
        svg = tmp_path / "scan.svg"
        assert svg.exists()
        assert b"<svg" in svg.read_bytes()[:200]

    def test_byte_identical_reruns(self, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        args = ["scan", "--dop", "0.125", "--seed", "3", "--path", "mc",
                "--n_realizations", "200", "--angle_grid_step", "45deg"]
        assert run_cli(*args, "--output", str(out1)) == EXIT_OK
        assert run_cli(*args, "--output", str(out2)) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()
        svg1 = (tmp_path / "a.svg").read_bytes()
        svg2 = (tmp_path / "b.svg").read_bytes()
        assert svg1 == svg2

    def test_json_mirrors_csv_fields(self, tmp_path, capsys):
        csv_out = tmp_path / "scan.csv"
        assert run_cli("scan", "--dop", "0", "--angle_grid_step", "60deg",
                       "--output", str(csv_out)) == EXIT_OK
        json_out = tmp_path / "scan.json"
        assert run_cli("scan", "--dop", "0", "--angle_grid_step", "60deg",
                       "--format", "json", "--output", str(json_out)) == EXIT_OK
        csv_rows = csv_out.read_text().strip().split("\n")
        header = csv_rows[0].split(",")
        json_rows = [json.loads(line) for line in
                     json_out.read_text().strip().split("\n")]
        assert len(json_rows) == len(csv_rows) - 1
        for csv_line, obj in zip(csv_rows[1:], json_rows):
            assert list(obj.keys()) == header
            for token, key in zip(csv_line.split(","), header):
                assert float(token) == pytest.approx(float(obj[key]), abs=1e-15)

    def test_stdout_when_no_output_path(self, capsys):
        assert run_cli("scan", "--dop", "0", "--angle_grid_step",
                       "90deg") == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("a_rad,b_rad,C,stderr\n")


class TestTomographyCommand:
    def test_record_fields(self, tmp_path):
        out = tmp_path / "tomo.csv"
        assert run_cli("tomography", "--dop", "0.125", "--seed", "11",
                       "--n_realizations", "3000", "--output",
                       str(out)) == EXIT_OK
        header, row = out.read_text().strip().split("\n")
        assert header == ("s0,s1,s2,s3,dop,kappa1,kappa2,frame_angle_rad,"
                          "n_realizations,samples_per_realization,seed")
        values = dict(zip(header.split(","), row.split(",")))
        assert float(values["dop"]) == pytest.approx(0.125, abs=0.03)
        assert float(values["kappa1"]) == pytest.approx(0.750, abs=0.02)
        assert int(values["n_realizations"]) == 3000


class TestSimulateExperimentCommand:
    def test_emits_documented_columns_and_figure(self, tmp_path):
        out = tmp_path / "exp.csv"
        assert run_cli("simulate-experiment", "--dop", "0.125",
                       "--n_realizations", "400", "--angle_grid_step",
                       "45deg", "--b", "0.3", "--output", str(out)) == EXIT_OK
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "a_rad,b_rad,j,k,I_total,I_arm,I_aux,I_out,P"
        # one quad per grid angle: 8 angles x 4 projections
        assert len(lines) - 1 == 8 * 4
        assert (tmp_path / "exp.svg").exists()
        quads = {}
        for line in lines[1:]:
            fields = line.split(",")
            quads.setdefault(fields[0], []).append(float(fields[8]))
        for ps in quads.values():
            assert sum(ps) == pytest.approx(1.0, abs=0.05)


class TestErrorPaths:
    def test_io_failure_exits_3_and_writes_nothing(self, tmp_path):
        missing_dir = tmp_path / "no" / "such" / "dir" / "out.csv"
        assert run_cli("scan", "--dop", "0", "--angle_grid_step", "90deg",
                       "--output", str(missing_dir)) == EXIT_IO
        assert not missing_dir.exists()

    def test_physics_failure_writes_nothing(self, tmp_path):
        out = tmp_path / "never.csv"
        assert run_cli("bell", "--gisin", "--dop", "1",
                       "--output", str(out)) == EXIT_PHYSICS
        assert not out.exists()

    def test_config_failure_writes_nothing(self, tmp_path):
        out = tmp_path / "never.csv"
        assert run_cli("scan", "--dop", "2", "--output", str(out)) == EXIT_USAGE
        assert not out.exists()
