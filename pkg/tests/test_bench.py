"""
Tests for experiment configuration, the sweep harness, the CLI and tracing

Runs use the toy profile shrunk further (1 epoch, tiny network) so the whole
file finishes in well under a minute.

Run with: pytest tests/test_bench.py -v
"""
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from bench import commands as commands_module
from bench import experiment as experiment_module
from bench import sweep as sweep_module
from bench.commands import cmd_eval, cmd_gen, cmd_lambda_cv, cmd_render, cmd_train, dataset_paths
from bench.experiment import (
    ExperimentConfig,
    build_experiment,
    content_hash,
    normalize_key,
    parse_config_text,
)
from bench.profiles import PRESETS, get_preset, list_presets
from bench.sweep import Sweep, cell_path, sweep_cells
from config import config as runtime_config
from datagen.formats import load_checkpoint
from evaluation.metrics import RunMetrics
from evaluation.report import CellResult
from infrastructure.errors import ConfigError, ContractError, DataError
from infrastructure.observability import get_observability_status, init_observability, observe, span_name
from main import parse_overrides, run
from physics import SensorImage, render

FAST = {
    "hidden_dims": "8",
    "epochs": "1",
    "n_test": "4",
    "n_observed": "4",
    "n_simulated": "6",
    "n_observed_grid": "0, 4",
    "n_simulated_grid": "0, 6",
    "noise_sigma": "0.0005",
    "lambda_grid": "0.3, 0.7",
    "gallery_k": "2",
}


def fast_experiment(tmp_path, **extra) -> ExperimentConfig:
    overrides = dict(FAST, output_dir=str(tmp_path))
    overrides.update(extra)
    return build_experiment("toy", None, overrides)


@pytest.fixture(autouse=True)
def no_env_output_dir(monkeypatch):
    monkeypatch.setattr(runtime_config.runtime, "output_dir_override", None)


# =============================================================================
# Profiles / config
# =============================================================================

class TestExperimentConfig:

    def test_profiles(self):
        assert set(PRESETS) == {"toy", "desk", "full"}
        assert PRESETS["full"].values["n_observed_grid"] == [0, 1000, 10000, 20000, 40000]
        assert PRESETS["full"].long_running
        assert "desk" in list_presets()
        with pytest.raises(ConfigError):
            get_preset("huge")

    def test_default_profile_is_desk(self):
        exp = build_experiment()
        assert (exp.width, exp.height) == (32, 32)
        assert exp.n_observed_grid == [0, 500, 2000]

    def test_parse_text(self):
        text = """
        # comment
        lambda = 0.25
        n-observed = 10      # trailing comment
        hidden_dims = 16, 8
        noise_sigma = auto
        """
        values = parse_config_text(text)
        assert values == {"lam": "0.25", "n_observed": "10", "hidden_dims": "16, 8", "noise_sigma": "auto"}

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text("epochs = 3\nbogus = 1\n", source="exp.txt")
        assert "exp.txt:2" in info.value.message

    def test_malformed_line(self):
        with pytest.raises(ConfigError):
            parse_config_text("epochs 3\n")

    def test_key_spellings(self):
        assert normalize_key("n-test") == "n_test"
        assert normalize_key("lambda") == "lam"
        with pytest.raises(ConfigError):
            normalize_key("nope")

    def test_precedence(self, tmp_path, monkeypatch):
        path = tmp_path / "exp.txt"
        path.write_text("epochs = 7\nbatch_size = 3\noutput_dir = from-file\n")
        exp = build_experiment("toy", str(path), {"batch-size": "5"})
        assert exp.width == 16                 # profile
        assert exp.epochs == 7                 # file over profile
        assert exp.batch_size == 5             # flag over file
        assert exp.output_dir == "from-file"

        monkeypatch.setattr(runtime_config.runtime, "output_dir_override", "from-env")
        assert build_experiment("toy", str(path)).output_dir == "from-env"
        assert build_experiment("toy", str(path), {"output_dir": "from-flag"}).output_dir == "from-flag"

    def test_e_max_beyond_solver_limit(self, capsys):
        with pytest.raises(ConfigError):
            build_experiment("toy", None, {"e_max": "0.98"})
        assert run(["gen", "--profile", "toy", "--e_max", "0.98"]) == 2
        assert "e_max" in capsys.readouterr().err

    def test_long_running_profile_warns(self, monkeypatch):
        warnings = []
        monkeypatch.setattr(experiment_module.logger, "warning", warnings.append)
        build_experiment("desk")
        assert warnings == []
        build_experiment("full")
        assert len(warnings) == 1
        assert "'full'" in warnings[0] and "long-running" in warnings[0]

    def test_profile_help_lists_presets(self, capsys):
        with pytest.raises(SystemExit):
            run(["gen", "--help"])
        out = " ".join(capsys.readouterr().out.split())
        for name in PRESETS:
            assert f"{name}:" in out
        assert "(default: desk)" in out

    def test_invalid_value(self):
        with pytest.raises(ConfigError):
            build_experiment("toy", None, {"epochs": "many"})

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError):
            build_experiment("toy", str(tmp_path / "missing.txt"))

    def test_dump_round_trip(self, tmp_path):
        exp = fast_experiment(tmp_path, intensity_law="inverse_square", noise_sigma="auto")
        path = exp.dump(str(tmp_path / "dump"))
        again = build_experiment("desk", path)
        assert again == exp

    def test_train_config(self, tmp_path):
        exp = fast_experiment(tmp_path)
        cfg = exp.train_config(n_observed=0, n_simulated=6, seed=2)
        assert (cfg.n_observed, cfg.n_simulated) == (0, 6)
        assert cfg.method == "simpinn"
        assert cfg.arch.hidden_dims == [8]
        assert cfg.physics.width == 16
        assert cfg.seed == 2

    def test_content_hash_is_stable(self):
        assert content_hash({"b": 1, "a": [1, 2]}) == content_hash({"a": [1, 2], "b": 1})
        assert len(content_hash({"a": 1})) == 12


# =============================================================================
# Sweep
# =============================================================================

class TestSweep:

    def test_double_zero_cell_skipped(self, tmp_path):
        exp = fast_experiment(tmp_path)
        assert sweep_cells(exp) == [(4, 0, 0), (0, 6, 0), (4, 6, 0)]

    def test_run_and_resume(self, tmp_path, monkeypatch):
        exp = fast_experiment(tmp_path)
        sweep = Sweep(exp)
        report = sweep.run()
        assert len(report.cells) == 3
        assert all(c.ok for c in report.cells), [c.error for c in report.cells]
        for name in ("sweep.csv", "sweep.md", "sweep.log", "config.txt"):
            assert os.path.exists(os.path.join(sweep.directory, name))
        with open(os.path.join(sweep.directory, "sweep.csv"), newline="") as f:
            first_csv = f.read()
        assert first_csv.count("\r\n") == 4

        def must_not_run(*args, **kwargs):
            raise AssertionError("completed cell re-run")

        monkeypatch.setattr(sweep_module, "run_cell", must_not_run)
        again = Sweep(exp)
        done, todo = again.pending()
        assert len(done) == 3 and todo == []
        again.run()
        with open(os.path.join(again.directory, "sweep.csv"), newline="") as f:
            assert f.read() == first_csv
        print("✅ Resumed sweep reuses every completed cell")

    def test_failed_cell_rerun_on_resume(self, tmp_path, monkeypatch):
        exp = fast_experiment(tmp_path, n_observed_grid="4", n_simulated_grid="0")
        real = sweep_module.run_cell

        def failing(exp_, cell, noise):
            return CellResult(n_observed=cell[0], n_simulated=cell[1], seed=cell[2],
                              method="pinn", status="failed", error="error[NUMERIC]: boom")

        monkeypatch.setattr(sweep_module, "run_cell", failing)
        report = Sweep(exp).run()
        assert not report.cells[0].ok
        md = open(os.path.join(Sweep(exp).directory, "sweep.md")).read()
        assert "failed" in md

        monkeypatch.setattr(sweep_module, "run_cell", real)
        sweep = Sweep(exp)
        assert sweep.pending()[1] == [(4, 0, 0)]
        assert sweep.run().cells[0].ok

    def test_interrupt_keeps_cells_finished_out_of_order(self, tmp_path, monkeypatch):
        exp = fast_experiment(tmp_path, n_observed_grid="4", n_simulated_grid="0, 6")
        first, second = sweep_cells(exp)
        directory = Sweep(exp).directory

        def slow_first(exp_, cell, noise):
            if cell == first:
                # wait until the later cell has been recorded, then get interrupted
                deadline = time.monotonic() + 5.0
                while not os.path.exists(cell_path(directory, second)) and time.monotonic() < deadline:
                    time.sleep(0.01)
                raise KeyboardInterrupt
            return CellResult(n_observed=cell[0], n_simulated=cell[1], seed=cell[2], method="simpinn",
                              metrics=RunMetrics(mse_e=0.1, mse_i=0.2, mse_omega=0.3))

        monkeypatch.setattr(Sweep, "executor_class", ThreadPoolExecutor)
        monkeypatch.setattr(sweep_module, "run_cell", slow_first)
        with pytest.raises(KeyboardInterrupt):
            Sweep(exp, workers=2).run()

        done, todo = Sweep(exp).pending()
        assert list(done) == [second]
        assert todo == [first]
        print("✅ Interrupted parallel sweep keeps the cell that finished first")

    def test_fresh_sweeps_write_identical_csv(self, tmp_path):
        texts = []
        for name in ("a", "b"):
            sweep = Sweep(fast_experiment(tmp_path / name))
            sweep.run()
            with open(os.path.join(sweep.directory, "sweep.csv"), "rb") as f:
                texts.append(f.read())
        assert texts[0] == texts[1]
        print("✅ Two fresh sweeps give byte-identical sweep.csv")

    def test_manifest_path(self, tmp_path):
        assert cell_path(str(tmp_path), (4, 6, 1)).endswith(os.path.join("cells", "o4_s6_seed1.json"))

    def test_directory_depends_on_settings(self, tmp_path):
        a = Sweep(fast_experiment(tmp_path)).directory
        b = Sweep(fast_experiment(tmp_path, epochs="2")).directory
        c = Sweep(fast_experiment(tmp_path, gallery_k="5")).directory
        assert a != b
        assert a == c

    def test_empty_grid_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            Sweep(fast_experiment(tmp_path, seeds=""))


# =============================================================================
# Commands
# =============================================================================

class TestCommands:

    def test_pipeline(self, tmp_path):
        exp = fast_experiment(tmp_path)
        gen = cmd_gen(exp)
        assert len(gen.written) == 3
        assert cmd_gen(exp).up_to_date

        result = cmd_train(exp)
        assert result.method == "simpinn"
        assert os.path.exists(os.path.join(result.directory, "metrics.csv"))
        assert os.path.exists(os.path.join(result.directory, "config.txt"))
        params, state = load_checkpoint(result.checkpoint, expected_arch=exp.arch())
        assert state is not None and state.step > 0

        metrics = cmd_eval(exp, result.checkpoint)
        assert metrics.n_samples == 4
        assert metrics.mse_e == pytest.approx(result.metrics.mse_e, rel=1e-12)

        gallery = cmd_render(exp, result.checkpoint, dataset_paths(exp, 0.0005).test, 2)
        assert sorted(os.listdir(gallery)) == ["errors.csv", "sample_0000.pgm", "sample_0001.pgm"]
        print("✅ gen -> train -> eval -> render on the toy profile")

    def test_render_k_out_of_range(self, tmp_path):
        exp = fast_experiment(tmp_path)
        cmd_gen(exp)
        result = cmd_train(exp)
        with pytest.raises(ContractError):
            cmd_render(exp, result.checkpoint, dataset_paths(exp, 0.0005).test, 99)

    def test_render_zero_samples(self, tmp_path):
        exp = fast_experiment(tmp_path)
        cmd_gen(exp)
        result = cmd_train(exp)
        gallery = cmd_render(exp, result.checkpoint, dataset_paths(exp, 0.0005).test, 0)
        assert os.listdir(gallery) == ["errors.csv"]
        with open(os.path.join(gallery, "errors.csv"), newline="") as f:
            assert f.read() == "index,sq_err_e,sq_err_i,sq_err_omega,mse_reconstruction\r\n"

    def test_render_perfect_inverter_halves_match(self, tmp_path, monkeypatch):
        exp = fast_experiment(tmp_path, noise_sigma="0")
        cmd_gen(exp)
        result = cmd_train(exp)

        def truth(params, samples):
            return np.stack([s.x_hidden.as_array() for s in samples], axis=1)

        def stored_render(x, physics):
            # dataset images are stored as f32
            image = render(x, physics)
            return SensorImage(image.width, image.height, image.pixels.astype(np.float32).astype(np.float64))

        monkeypatch.setattr(commands_module, "predict_pool", truth)
        monkeypatch.setattr(commands_module, "render", stored_render)
        gallery = cmd_render(exp, result.checkpoint, dataset_paths(exp, 0.0).test, 2)

        for j in range(2):
            with open(os.path.join(gallery, f"sample_{j:04d}.pgm")) as f:
                lines = f.read().splitlines()
            assert lines[1] == f"{2 * exp.width + 2} {exp.height}"
            for row in lines[3:]:
                values = row.split()
                assert values[:exp.width] == values[exp.width + 2:]
        with open(os.path.join(gallery, "errors.csv"), newline="") as f:
            rows = f.read().split("\r\n")[1:-1]
        assert [r.split(",")[1:4] for r in rows] == [["0.0", "0.0", "0.0"]] * 2
        print("✅ Exact inverter at zero noise renders identical halves")

    def test_gen_empty_observed_pool(self, tmp_path):
        exp = fast_experiment(tmp_path, n_observed="0")
        paths = cmd_gen(exp).paths
        # 40-byte header plus the CRC
        assert os.path.getsize(paths.observed) == 44

    def test_lambda_cv(self, tmp_path):
        exp = fast_experiment(tmp_path)
        cmd_gen(exp)
        best = cmd_lambda_cv(exp)
        assert best in (0.3, 0.7)
        with open(os.path.join(str(tmp_path), "lambda-cv", "lambda_cv.csv"), newline="") as f:
            assert len(f.read().split("\r\n")) == 4

    def test_train_without_data(self, tmp_path):
        with pytest.raises(DataError):
            cmd_train(fast_experiment(tmp_path))


# =============================================================================
# CLI
# =============================================================================

class TestCli:

    def test_parse_overrides(self):
        assert parse_overrides(["--epochs", "3", "--n-test=5"]) == {"epochs": "3", "n-test": "5"}
        with pytest.raises(ConfigError):
            parse_overrides(["--epochs"])
        with pytest.raises(ConfigError):
            parse_overrides(["stray"])

    def test_no_command(self):
        assert run([]) == 1

    def test_unknown_profile(self, capsys):
        assert run(["gen", "--profile", "huge"]) == 2
        err = capsys.readouterr().err.strip()
        assert err.startswith("error[CONFIG]:")
        assert "\n" not in err

    def test_unknown_key(self, capsys):
        assert run(["gen", "--profile", "toy", "--bogus", "1"]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_missing_checkpoint(self, tmp_path, capsys):
        code = run(["eval", "--profile", "toy", "--checkpoint", str(tmp_path / "none.spnc"),
                    "--output_dir", str(tmp_path), "--noise_sigma", "0.001"])
        assert code == 3
        assert capsys.readouterr().err.strip().splitlines()[-1].startswith("error[DATA]:")

    def test_gen_via_cli(self, tmp_path):
        argv = ["gen", "--profile", "toy", "--output-dir", str(tmp_path)]
        for key, value in FAST.items():
            argv += [f"--{key}", value]
        assert run(argv) == 0
        assert len(os.listdir(os.path.join(str(tmp_path), "data"))) == 4


# =============================================================================
# Tracing
# =============================================================================

class TestObservability:

    def test_untraced_without_key(self, monkeypatch):
        monkeypatch.setattr(runtime_config.observability, "lmnr_enabled", False)

        def step():
            return 3

        assert observe(name="step")(step) is step
        assert init_observability() is False
        status = get_observability_status()
        assert status["key_configured"] is False and status["active"] is False

    def test_span_names(self):
        def fit():
            pass

        assert span_name(fit) == "simpinn.fit"
        assert span_name(fit, "train") == "simpinn.train"
        assert span_name(fit, "simpinn.cmd_gen") == "simpinn.cmd_gen"
