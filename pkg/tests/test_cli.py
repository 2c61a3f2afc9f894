"""Command line front end, driven through main(argv)."""

import math

import numpy as np
import pytest

from nldiff.cli import main


def parse_kv(text):
    out = {}
    for line in text.strip().split("\n"):
        key, _, value = line.partition("=")
        out[key] = value
    return out


class TestSolve:
    def test_stdout_csv(self, capsys):
        assert main(["solve", "--problem", "dirichlet-sech", "--L", "5", "--M", "16"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "x,u"
        assert len(lines) == 16  # M - 1 interior nodes
        xs = np.array([float(l.split(",")[0]) for l in lines[1:]])
        us = np.array([float(l.split(",")[1]) for l in lines[1:]])
        np.testing.assert_allclose(xs, np.arange(-7, 8) * 10.0 / 16.0, atol=1e-15)
        # crude sanity: peak at the center, even to discretization error
        assert us.argmax() == 7
        assert us[7] == pytest.approx(1.0, abs=0.05)

    def test_out_file(self, tmp_path, capsys):
        dest = tmp_path / "solution.csv"
        assert (
            main(
                [
                    "solve",
                    "--problem",
                    "realline-algebraic",
                    "--L",
                    "5",
                    "--M",
                    "16",
                    "--out",
                    str(dest),
                ]
            )
            == 0
        )
        assert capsys.readouterr().out == ""
        lines = dest.read_text().strip().split("\n")
        assert lines[0] == "x,u"
        assert len(lines) == 18  # M + 1 nodes on the whole-line grid

    def test_unknown_problem(self):
        with pytest.raises(SystemExit) as err:
            main(["solve", "--problem", "no-such", "--L", "5", "--M", "16"])
        assert "unknown problem" in str(err.value)
        assert "dirichlet-sech" in str(err.value)


class TestConverge:
    def test_stdout_csv(self, capsys):
        code = main(
            ["converge", "--problem", "dirichlet-sech", "--L", "5", "--M", "16,32,64"]
        )
        assert code == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "problem,L,M,h,linf_error,fitted_order,runtime_ms"
        assert len(lines) == 4
        first = lines[1].split(",")
        assert first[0] == "dirichlet-sech"
        assert float(first[1]) == 5.0
        assert int(first[2]) == 16
        # fitted order repeats on every row of the group
        orders = {line.split(",")[5] for line in lines[1:]}
        assert len(orders) == 1

    def test_multiple_half_widths_and_out_file(self, tmp_path):
        dest = tmp_path / "sweep.csv"
        code = main(
            [
                "converge",
                "--problem",
                "dirichlet-sech",
                "--L",
                "4,8",
                "--M",
                "16,32,64",
                "--out",
                str(dest),
                "--workers",
                "2",
            ]
        )
        assert code == 0
        lines = dest.read_text().strip().split("\n")
        assert len(lines) == 7
        halves = [float(l.split(",")[1]) for l in lines[1:]]
        assert halves == [4.0, 4.0, 4.0, 8.0, 8.0, 8.0]

    def test_unknown_problem_lists_known_ids(self):
        with pytest.raises(SystemExit) as err:
            main(["converge", "--problem", "no-such", "--L", "5", "--M", "16,32,64"])
        assert "unknown problem" in str(err.value)
        assert "realline-algebraic" in str(err.value)

    def test_too_few_step_counts_is_a_clean_error(self, capsys):
        code = main(
            ["converge", "--problem", "dirichlet-sech", "--L", "5", "--M", "16,32"]
        )
        assert code == 2
        captured = capsys.readouterr()
        assert captured.out == ""
        assert captured.err.startswith("error: ")
        assert "at least 3 step counts" in captured.err


class TestCheck:
    def test_compatible_forcing_exits_zero(self, capsys):
        assert main(["check", "--problem", "realline-algebraic"]) == 0
        kv = parse_kv(capsys.readouterr().out)
        assert abs(float(kv["mean"])) <= 1e-9
        assert abs(float(kv["first_moment"])) <= 1e-9
        assert kv["passed"] == "true"
        assert float(kv["quad_tol"]) > 0.0

    def test_truncated_neumann_forcing_fails_honestly(self, capsys):
        # zeroing the sech forcing outside the window leaves a nonzero mean,
        # and the preflight reports it instead of hiding it
        assert main(["check", "--problem", "comparison-sech-neumann", "--L", "10"]) == 1
        kv = parse_kv(capsys.readouterr().out)
        assert kv["passed"] == "false"
        mean = float(kv["mean"])
        # the forcing runs like (3/2 - t) e^{-t} in the tail, so the dropped
        # mass is 2 (L - 1/2) e^{-L} to leading order
        assert mean == pytest.approx(2.0 * 9.5 * math.exp(-10.0), rel=1e-5)

    def test_loose_tolerance_flips_the_verdict(self, capsys):
        code = main(
            ["check", "--problem", "comparison-sech-neumann", "--L", "10", "--tol", "1e-2"]
        )
        assert code == 0
        assert parse_kv(capsys.readouterr().out)["passed"] == "true"

    def test_problem_without_certificate_exits_two(self, capsys):
        assert main(["check", "--problem", "dirichlet-sech"]) == 2
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "no whole-line forcing" in captured.err

    def test_quad_tol_tracks_environment(self, capsys, monkeypatch):
        monkeypatch.setenv("NLDIFF_QUAD_TOL", "1e-6")
        main(["check", "--problem", "realline-algebraic"])
        assert float(parse_kv(capsys.readouterr().out)["quad_tol"]) == 1e-6


class TestStability:
    def test_dirichlet_report(self, capsys):
        assert main(["stability", "--problem", "dirichlet-sech", "--L", "5", "--M", "64"]) == 0
        kv = parse_kv(capsys.readouterr().out)
        assert kv["variant"] == "dirichlet"
        assert kv["stable"] == "true"
        assert float(kv["min_eigenvalue"]) == pytest.approx(0.066234881732554443, rel=1e-10)
        assert kv["contraction_norm"] == "nan"
        assert float(kv["symbol_min"]) == pytest.approx(4.5399929762484854e-05, rel=1e-10)
        assert float(kv["symbol_lower_bound"]) == pytest.approx(
            math.exp(-20.0), rel=1e-12
        )

    def test_realline_report(self, capsys):
        assert (
            main(["stability", "--problem", "realline-algebraic", "--L", "5", "--M", "64"])
            == 0
        )
        kv = parse_kv(capsys.readouterr().out)
        assert kv["variant"] == "realline"
        assert kv["min_eigenvalue"] == "nan"
        assert 0.0 < float(kv["contraction_norm"]) < 1.0

    def test_neumann_variant_label(self, capsys):
        assert (
            main(
                ["stability", "--problem", "neumann-discontinuous", "--L", "8", "--M", "64"]
            )
            == 0
        )
        assert parse_kv(capsys.readouterr().out)["variant"] == "neumann"


class TestParser:
    def test_requires_subcommand(self, capsys):
        with pytest.raises(SystemExit):
            main([])

    def test_rejects_unknown_flag(self):
        with pytest.raises(SystemExit):
            main(["solve", "--problem", "dirichlet-sech", "--L", "5", "--M", "16", "--bad", "1"])
