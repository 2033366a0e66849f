import json
import math
import re
import subprocess
import sys

import pytest

from routepool import interop, subsample_instance
from routepool.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def pool_dir(tmp_path):
    out = tmp_path / "pools"
    code = run_cli(
        "gen-base", "--dist", "uniform", "--problem", "tsp",
        "--n-base", 60, "--seed", 5, "--out", out,
    )
    assert code == 0
    return out


def pool_file(directory):
    return next(directory.glob("base-*.json"))


class TestGenBase:
    def test_idempotent_and_byte_identical(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            assert run_cli(
                "gen-base", "--dist", "x-rc", "--problem", "cvrp",
                "--n-base", 80, "--seed", 9, "--out", out,
            ) == 0
        fa, fb = pool_file(out_a), pool_file(out_b)
        assert fa.name == fb.name
        assert fa.read_bytes() == fb.read_bytes()

    def test_n_base_one_tsp_rejected(self, tmp_path, capsys):
        code = run_cli(
            "gen-base", "--dist", "uniform", "--problem", "tsp",
            "--n-base", 1, "--seed", 5, "--out", tmp_path,
        )
        assert code == 2

    def test_x_rc_tsp_rejected(self, tmp_path):
        code = run_cli(
            "gen-base", "--dist", "x-rc", "--problem", "tsp",
            "--n-base", 10, "--seed", 5, "--out", tmp_path,
        )
        assert code == 2

    def test_prints_resolved_config_and_base_id(self, tmp_path, capsys):
        run_cli(
            "gen-base", "--dist", "rotation", "--problem", "tsp",
            "--n-base", 20, "--seed", 5, "--out", tmp_path,
        )
        out = capsys.readouterr().out
        assert "resolved configuration:" in out
        assert "n_base = 20" in out
        assert re.search(r"base_id [0-9a-f]{16}", out)


class TestSubsample:
    def test_default_test_length_is_128(self, pool_dir, tmp_path, capsys):
        out = tmp_path / "ds"
        assert run_cli(
            "subsample", "--base", pool_file(pool_dir), "--n", 10,
            "--role", "test", "--seed", 3, "--out", out,
        ) == 0
        ds = interop.load_dataset(next(out.glob("test-*.json")))
        assert len(ds) == 128

    def test_singleton_composes_with_library(self, pool_dir, tmp_path):
        out = tmp_path / "ds"
        run_cli(
            "subsample", "--base", pool_file(pool_dir), "--n", 10,
            "--role", "test", "--seed", 3, "--length", 1, "--out", out,
        )
        ds = interop.load_dataset(next(out.glob("test-*.json")))
        pool = interop.load_pool(pool_file(pool_dir))
        assert ds.instances[0] == subsample_instance(pool, 10, 3, 0)

    def test_train_seed_collision_exits_3(self, pool_dir, tmp_path):
        out = tmp_path / "ds"
        run_cli(
            "subsample", "--base", pool_file(pool_dir), "--n", 10,
            "--role", "test", "--seed", 42, "--length", 2, "--out", out,
        )
        code = run_cli(
            "subsample", "--base", pool_file(pool_dir), "--n", 10,
            "--role", "train", "--seed", 42, "--length", 2, "--out", out,
        )
        assert code == 3

    def test_epoch_role_writes_batch_bytes(self, pool_dir, tmp_path):
        out = tmp_path / "ds"
        assert run_cli(
            "subsample", "--base", pool_file(pool_dir), "--n", 8, "--role", "epoch",
            "--epoch", 2, "--seed", 7, "--length", 4, "--out", out,
        ) == 0
        blob = next(out.glob("epoch-*.bin")).read_bytes()
        header = json.loads(blob.split(b"\n", 1)[0])
        assert header["epoch"] == 2 and header["length"] == 4


class TestBench:
    def test_outputs_and_replay(self, pool_dir, tmp_path):
        ds_dir = tmp_path / "ds"
        run_cli(
            "subsample", "--base", pool_file(pool_dir), "--n", 10,
            "--role", "test", "--seed", 3, "--length", 3, "--out", ds_dir,
        )
        dataset_file = next(ds_dir.glob("test-*.json"))
        bench_dir = tmp_path / "bench"
        code = run_cli(
            "bench", "--dataset", dataset_file, "--solvers", "sa,greedy",
            "--budgets", "0.02,0.05", "--reference", "sa", "--seed", 2,
            "--out", bench_dir,
        )
        assert code == 0
        report_file = next(bench_dir.glob("report-*.json"))
        cells_file = next(bench_dir.glob("cells-*.csv"))
        assert (bench_dir / "summary.txt").exists()
        assert (bench_dir / "aggregates.csv").exists()
        report = json.loads(report_file.read_text())
        assert len(report["records"]) == 2 * 2 * 3

        replay_dir = tmp_path / "replay"
        code = run_cli(
            "bench", "--dataset", dataset_file, "--solvers", "sa,greedy",
            "--budgets", "0.02,0.05", "--reference", "sa", "--seed", 2,
            "--replay", report_file, "--out", replay_dir,
        )
        assert code == 0
        original = json.loads(report_file.read_text())["records"]
        replayed = json.loads(next(replay_dir.glob("report-*.json")).read_text())["records"]
        assert [r["cost"] for r in replayed] == [r["cost"] for r in original]
        assert [r["iterations"] for r in replayed] == [r["iterations"] for r in original]

    def test_reference_must_be_among_solvers(self, pool_dir, tmp_path):
        ds_dir = tmp_path / "ds"
        run_cli(
            "subsample", "--base", pool_file(pool_dir), "--n", 8,
            "--role", "test", "--seed", 3, "--length", 2, "--out", ds_dir,
        )
        code = run_cli(
            "bench", "--dataset", next(ds_dir.glob("test-*.json")),
            "--solvers", "sa", "--budgets", "0.02", "--reference", "hgs",
            "--out", tmp_path / "bench",
        )
        assert code == 2


class TestConfigFile:
    def test_ini_defaults_merge_under_flags(self, pool_dir, tmp_path, capsys):
        ini = tmp_path / "conf.ini"
        ini.write_text("[subsample]\nn = 12\nlength = 2\nseed = 77\n")
        out = tmp_path / "ds"
        code = run_cli(
            "--config", ini, "subsample", "--base", pool_file(pool_dir),
            "--n", 9, "--role", "test", "--out", out,
        )
        assert code == 0
        text = capsys.readouterr().out
        assert "n = 9" in text  # explicit flag wins
        assert "length = 2" in text and "seed = 77" in text  # INI fills the rest
        ds = interop.load_dataset(next(out.glob("test-*.json")))
        assert ds.n == 9 and len(ds) == 2 and ds.sample_seed == 77


class TestLabelExportPlotInspect:
    def test_label_exact(self, pool_dir, tmp_path):
        ds_dir = tmp_path / "ds"
        run_cli(
            "subsample", "--base", pool_file(pool_dir), "--n", 8,
            "--role", "test", "--seed", 3, "--length", 2, "--out", ds_dir,
        )
        dataset_file = next(ds_dir.glob("test-*.json"))
        out = tmp_path / "labeled"
        assert run_cli("label", "--dataset", dataset_file, "--solver", "exact", "--out", out) == 0
        labeled = interop.load_dataset(next(out.glob("*-labeled-exact.json")))
        assert labeled.labels is not None and len(labeled.labels) == 2

    def test_export_tsplib_scaling(self, pool_dir, tmp_path):
        ds_dir = tmp_path / "ds"
        run_cli(
            "subsample", "--base", pool_file(pool_dir), "--n", 6,
            "--role", "test", "--seed", 3, "--length", 1, "--out", ds_dir,
        )
        out = tmp_path / "tsplib"
        assert run_cli(
            "export", "--dataset", next(ds_dir.glob("test-*.json")), "--out", out
        ) == 0
        text = next(out.glob("*.tsp")).read_text()
        assert "EDGE_WEIGHT_TYPE : EUC_2D" in text

    def test_plot_explosion_pool_has_central_hole(self, tmp_path):
        pool_out = tmp_path / "pool"
        run_cli(
            "gen-base", "--dist", "explosion", "--problem", "tsp",
            "--n-base", 400, "--seed", 6, "--out", pool_out,
        )
        svg_path = tmp_path / "plot.svg"
        assert run_cli("plot", "--base", pool_file(pool_out), "--out", svg_path) == 0
        svg = svg_path.read_text()
        # map circle centers back to the unit square and count points in the hole
        from routepool.plotsvg import MARGIN, SIZE

        span = SIZE - 2 * MARGIN
        inside = 0
        for m in re.finditer(r'class="pool" cx="([0-9.]+)" cy="([0-9.]+)"', svg):
            x = (float(m.group(1)) - MARGIN) / span
            y = (SIZE - MARGIN - float(m.group(2))) / span
            if math.hypot(x - 0.5, y - 0.5) < 0.3 * (1 - 1e-6):
                inside += 1
        assert inside == 0

    def test_plot_marks_cvrp_depot(self, tmp_path):
        pool_out = tmp_path / "pool"
        run_cli(
            "gen-base", "--dist", "uniform", "--problem", "cvrp",
            "--n-base", 30, "--seed", 6, "--out", pool_out,
        )
        svg_path = tmp_path / "plot.svg"
        run_cli("plot", "--base", pool_file(pool_out), "--out", svg_path)
        assert 'class="depot"' in svg_path.read_text()

    def test_inspect_pool(self, pool_dir, capsys):
        assert run_cli("inspect", "--path", pool_file(pool_dir)) == 0
        out = capsys.readouterr().out
        assert "routepool-pool" in out


class TestEntryPoint:
    def test_console_script_version(self):
        proc = subprocess.run(
            [sys.executable, "-m", "routepool.cli", "--version"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "routepool" in proc.stdout
