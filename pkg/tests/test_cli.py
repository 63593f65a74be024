"""CLI pipeline: subcommands, exit codes, artifact determinism."""

import json

import pytest

from perfbound import cli

MINI_CONFIG = {
    "master_seed": 7,
    "datasets": [
        {"name": "MC30", "method": "monte_carlo", "n_total": 30},
        {"name": "LHC30", "method": "latin_hypercube", "n_total": 30},
    ],
    "grid_resolution": [13, 13, 13],
    "restarts": 2,
    "max_nm_iter": 60,
    "minimax_iters": 1000,
}


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(MINI_CONFIG))
    return path


def run(*argv):
    return cli.main([str(a) for a in argv])


class TestSample:
    def test_writes_labeled_csv_and_provenance(self, tmp_path, config_file):
        out = tmp_path / "out"
        assert run("--config", config_file, "--out", out, "sample") == 0
        rows = (out / "MC30.csv").read_text().splitlines()
        assert rows[0] == "speed_ego,speed_target,aperture_angle,outcome"
        assert len(rows) == 31
        sidecar = json.loads((out / "MC30.json").read_text())
        assert sidecar["design"]["method"] == "monte_carlo"
        assert sidecar["design"]["n_total"] == 30

    def test_rerun_is_byte_identical(self, tmp_path, config_file):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run("--config", config_file, "--out", out_a, "sample", "LHC30")
        run("--config", config_file, "--out", out_b, "sample", "LHC30")
        assert (out_a / "LHC30.csv").read_bytes() == (out_b / "LHC30.csv").read_bytes()

    def test_unknown_dataset_is_usage_error(self, tmp_path, config_file, capsys):
        code = run("--config", config_file, "--out", tmp_path, "sample", "BOGUS")
        assert code == 1
        assert "unknown dataset" in capsys.readouterr().err

    def test_seed_flag_changes_data_threads_does_not(self, tmp_path, config_file):
        outs = {}
        for tag, extra in {
            "a": ["--seed", "3"],
            "b": ["--seed", "4"],
            "c": ["--seed", "3", "--threads", "2"],
        }.items():
            out = tmp_path / tag
            assert run("--config", config_file, "--out", out, *extra, "sample", "MC30") == 0
            outs[tag] = (out / "MC30.csv").read_bytes()
        assert outs["a"] != outs["b"]
        assert outs["a"] == outs["c"]

    def test_unknown_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run("frobnicate")
        assert exc.value.code == 1


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("pipeline")
    config = tmp / "config.json"
    config.write_text(json.dumps(MINI_CONFIG))
    out = tmp / "out"
    assert cli.main(["--config", str(config), "--out", str(out), "sample"]) == 0
    assert (
        cli.main(
            ["--config", str(config), "--out", str(out), "train", str(out / "LHC30.csv")]
        )
        == 0
    )
    return config, out


class TestPipeline:
    def test_train_wrote_model_and_split(self, workdir):
        _, out = workdir
        assert (out / "LHC30_model.json").exists()
        assert len((out / "LHC30_train.csv").read_text().splitlines()) == 28
        assert len((out / "LHC30_test.csv").read_text().splitlines()) == 4

    def test_evaluate(self, workdir, capsys):
        config, out = workdir
        code = cli.main(
            [
                "--config", str(config), "--out", str(out),
                "evaluate", str(out / "LHC30_model.json"), str(out / "LHC30_test.csv"),
            ]
        )
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert 0.0 <= result["accuracy"] <= 1.0
        assert result["n_misclassified"] in range(4)

    def test_boundary_and_compare_self_is_zero(self, workdir, capsys):
        config, out = workdir
        assert (
            cli.main(
                ["--config", str(config), "--out", str(out),
                 "boundary", str(out / "LHC30_model.json")]
            )
            == 0
        )
        capsys.readouterr()
        bpath = out / "LHC30_boundary.csv"
        assert bpath.exists()
        code = cli.main(
            ["--config", str(config), "--out", str(out), "compare", str(bpath), str(bpath)]
        )
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["hausdorff_raw"] == 0.0
        assert result["hausdorff_normalized"] == 0.0

    def test_slice_defaults(self, workdir):
        config, out = workdir
        code = cli.main(
            ["--config", str(config), "--out", str(out),
             "slice", str(out / "LHC30_model.json"), "--data", str(out / "LHC30.csv")]
        )
        assert code == 0
        assert (out / "LHC30_slice.csv").exists()
        svg_text = (out / "LHC30_slice.svg").read_text()
        assert svg_text.startswith("<svg")
        assert "aperture_angle = 17.5" in svg_text


class TestReport:
    def test_full_campaign_and_determinism(self, tmp_path, config_file):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run("--config", config_file, "--out", out_a, "report") == 0
        assert run("--config", config_file, "--out", out_b, "report") == 0
        report = json.loads((out_a / "report.json").read_text())
        assert set(report["datasets"]) == {"MC30", "LHC30"}
        assert "MC30_vs_LHC30" in report["boundary_distances"]
        for name in sorted(p.name for p in out_a.iterdir()):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name
        # report references only files that exist
        for artifact in report["artifacts"]:
            assert (out_a / artifact).exists()


class TestErrorPaths:
    def test_missing_model_is_data_error(self, tmp_path, config_file, capsys):
        code = run("--config", config_file, "--out", tmp_path,
                   "evaluate", tmp_path / "nope.json", tmp_path / "nope.csv")
        assert code == 2
        assert "data error" in capsys.readouterr().err

    def test_corrupt_csv_reports_line_number(self, tmp_path, config_file, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text(
            "speed_ego,speed_target,aperture_angle,outcome\n50,10,15,collision\nbroken line\n"
        )
        code = run("--config", config_file, "--out", tmp_path, "train", bad)
        assert code == 2
        assert ":3:" in capsys.readouterr().err

    def test_single_class_dataset_is_numerical_error(self, tmp_path, config_file, capsys):
        rows = ["speed_ego,speed_target,aperture_angle,outcome"]
        rows += [f"{40 + i},10.0,20.0,no_collision" for i in range(12)]
        data = tmp_path / "oneclass.csv"
        data.write_text("\n".join(rows) + "\n")
        code = run("--config", config_file, "--out", tmp_path, "train", data)
        assert code == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_bad_config_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"unknown_knob": 1}')
        code = run("--config", bad, "--out", tmp_path, "sample")
        assert code == 2


class TestSimulate:
    def test_reports_trace_and_oracle(self, capsys):
        assert run("simulate", "47.27", "15.76", "11.36") == 0
        result = json.loads(capsys.readouterr().out)
        assert result["outcome"] == "collision"
        assert result["oracle_outcome"] == "collision"
        assert result["min_gap"] == 0.0

    def test_physics_file_override(self, tmp_path, capsys):
        phys = tmp_path / "phys.cfg"
        phys.write_text("decel=12.0\n")  # strong brakes prevent the collision
        assert run("simulate", "47.27", "15.76", "11.36", "--physics", phys) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["outcome"] == "no_collision"
