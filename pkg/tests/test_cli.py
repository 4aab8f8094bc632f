"""Tests for the command-line interface and config parsing."""

import os

import numpy as np
import pytest

from rotlayer import cli
from rotlayer.checkpoint import read_csv_rows


def write_config(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


SMALL_RUN = """
[grid]
nx = 16
ny = 16
nz = 8
box_l = 5.0

[run]
omega = 5.0
t_max = 0.02
dt = 1e-3
init = random_3d
amplitude = 0.3
seed = 9
spectrum_slope = -1.0
monitor_every = 5e-3
checkpoint_every = 0.01
"""


class TestParseConfig:
    def test_sections_and_comments_ignored(self, tmp_path):
        path = write_config(
            tmp_path, "# header\n[grid]\nnx = 16  # inline\n\nny = 8\n"
        )
        entries = cli.parse_config(path)
        assert entries["nx"] == ("16", 3)
        assert entries["ny"] == ("8", 5)

    def test_malformed_line_reports_number(self, tmp_path):
        path = write_config(tmp_path, "nx = 16\nbogus line\n")
        with pytest.raises(cli.ConfigError, match=":2:"):
            cli.parse_config(path)

    def test_duplicate_key(self, tmp_path):
        path = write_config(tmp_path, "nx = 16\nnx = 32\n")
        with pytest.raises(cli.ConfigError, match="duplicate"):
            cli.parse_config(path)

    def test_missing_file(self):
        with pytest.raises(cli.ConfigError):
            cli.parse_config("/nonexistent/rotlayer.cfg")


class TestSimulateCommand:
    def test_appending_duplicate_key_is_an_error(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN + "amplitude = 0.0\n")
        with pytest.raises(cli.ConfigError):
            cli.parse_config(cfg)

    def test_minimal_run_writes_artifacts(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN)
        out = str(tmp_path / "out")
        code = cli.main(["simulate", "--config", cfg, "--out", out])
        assert code == 0
        names = sorted(os.listdir(out))
        assert "monitors.csv" in names
        assert "manifest.json" in names
        assert "config.txt" in names
        assert any(name.endswith(".nscf1") for name in names)
        rows = read_csv_rows(os.path.join(out, "monitors.csv"))
        assert rows and "x_norm" in rows[0]

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SMALL_RUN + "vorticity_flavor = mint\n")
        code = cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 2
        assert "unknown key" in capsys.readouterr().err

    def test_bad_value_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "nx = sixteen\n")
        code = cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 2
        assert "expects int" in capsys.readouterr().err

    def test_missing_output_dir_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SMALL_RUN)
        code = cli.main(["simulate", "--config", cfg])
        assert code == 2

    def test_manifest_reproducible(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN)
        out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
        assert cli.main(["simulate", "--config", cfg, "--out", out_a]) == 0
        assert cli.main(["simulate", "--config", cfg, "--out", out_b]) == 0
        with open(os.path.join(out_a, "manifest.json")) as fa:
            with open(os.path.join(out_b, "manifest.json")) as fb:
                assert fa.read() == fb.read()

    def test_seed_override_changes_data(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN)
        out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
        cli.main(["simulate", "--config", cfg, "--out", out_a])
        cli.main(["simulate", "--config", cfg, "--out", out_b, "--seed", "77"])
        with open(os.path.join(out_a, "manifest.json")) as fa:
            with open(os.path.join(out_b, "manifest.json")) as fb:
                assert fa.read() != fb.read()

    def test_threads_flag_does_not_change_results(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_RUN)
        out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
        cli.main(["simulate", "--config", cfg, "--out", out_a, "--threads", "1"])
        cli.main(["simulate", "--config", cfg, "--out", out_b, "--threads", "2"])
        with open(os.path.join(out_a, "manifest.json")) as fa:
            with open(os.path.join(out_b, "manifest.json")) as fb:
                assert fa.read() == fb.read()


class TestRossbyDecayCommand:
    def test_equality_case_passes(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "nx = 16\nny = 16\nnz = 8\nbox_l = 5.0\nomega = 100.0\n"
            "t_max = 0.2\ndt_sample = 0.01\nseed = 1\n",
        )
        out = str(tmp_path / "out")
        code = cli.main(["rossby-decay", "--config", cfg, "--out", out])
        assert code == 0
        rows = read_csv_rows(os.path.join(out, "rossby_decay.csv"))
        assert len(rows) == 21
        products = [row["compensated"] for row in rows]
        assert np.ptp(products) < 1e-10 * products[0]


class TestStrichartzCommand:
    def test_single_omega_flagged(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "nx = 32\nny = 32\nnz = 4\nbox_l = 10.0\nradius = 4.0\n"
            "omegas = 50\nt_max = 0.2\ndt_sample = 0.01\n",
        )
        out = str(tmp_path / "out")
        code = cli.main(["strichartz", "--config", cfg, "--out", out])
        assert code == 0
        assert "slope undefined" in capsys.readouterr().out

    def test_unsorted_omegas_sorted_in_output(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "nx = 32\nny = 32\nnz = 4\nbox_l = 10.0\nradius = 4.0\n"
            "omegas = 1000, 10\nt_max = 0.1\ndt_sample = 0.01\n",
        )
        out = str(tmp_path / "out")
        assert cli.main(["strichartz", "--config", cfg, "--out", out]) == 0
        rows = read_csv_rows(os.path.join(out, "strichartz.csv"))
        assert [row["omega"] for row in rows] == [10.0, 1000.0]


class TestKernelBoundCommand:
    def test_one_cell(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "radius = 4.0\na_values = 0.0\nb_values = 1.0\neval_nx = 32\n",
        )
        out = str(tmp_path / "out")
        assert cli.main(["kernel-bound", "--config", cfg, "--out", out]) == 0
        rows = read_csv_rows(os.path.join(out, "kernel_bound.csv"))
        assert len(rows) == 1
        assert rows[0]["sup_K"] > 0

    def test_negative_radius_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "radius = -1.0\n")
        code = cli.main(["kernel-bound", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 2


class TestEnergyCheckCommand:
    def test_clean_run_passes(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "nx = 16\nny = 16\nnz = 8\nbox_l = 5.0\nomega = 10.0\n"
            "t_max = 0.04\ndt = 1e-3\ninit = random_3d\namplitude = 0.5\n"
            "seed = 3\nspectrum_slope = -1.0\nmonitor_every = 2e-3\n"
            "checkpoint_every = 0.04\n",
        )
        code = cli.main(["energy-check", "--config", cfg])
        assert code == 0
        out = capsys.readouterr().out
        assert out.count("[ok]") == 5


class TestOseenConvergenceCommand:
    def test_small_perturbed_run(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "nx = 32\nny = 32\nnz = 4\nbox_l = 30.0\nomega = 0.0\n"
            "t_max = 0.05\ndt = 1e-3\ninit = oseen_plus_2d_perturbation\n"
            "alpha = 1.0\namplitude = 0.3\nseed = 6\nmonitor_every = 0.01\n"
            "checkpoint_every = 0.01\n",
        )
        out = str(tmp_path / "out")
        code = cli.main(["oseen-convergence", "--config", cfg, "--out", out])
        assert code == 0
        assert os.path.exists(os.path.join(out, "convergence.csv"))
        assert os.path.exists(os.path.join(out, "rates.txt"))
        rows = read_csv_rows(os.path.join(out, "convergence.csv"))
        assert rows[0]["oseen_l1_distance"] > 0.01


class TestShippedConfigsParse:
    def test_all_configs_parse_cleanly(self):
        root = os.path.join(os.path.dirname(__file__), "..", "configs")
        names = sorted(os.listdir(root))
        assert len(names) >= 6
        for name in names:
            entries = cli.parse_config(os.path.join(root, name))
            assert entries
