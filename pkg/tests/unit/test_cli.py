from pathlib import Path

import pytest
import simplejson

from cdpauth import Codebook, Dir, File
from cdpauth.cli import RunConfig, build_parser, main
from cdpauth.errors import ConfigError


def run(capsys: pytest.CaptureFixture, *argv: str) -> dict:
    assert main(["--json", *argv]) == 0
    return simplejson.loads(capsys.readouterr().out)


def digests(directory: Path) -> dict[str, str]:
    return {file.name: file.digest() for file in Dir(directory).files()}


@pytest.fixture()
def workspace(tmp_path: Path, capsys: pytest.CaptureFixture) -> Path:
    """Templates, printed originals, fakes and a trained codebook produced through the command line."""
    run(capsys, "gen", "--n", "4", "--L", "16", "--out", str(tmp_path / "templates"))
    run(capsys, "print", "--preset", "A", "--in", str(tmp_path / "templates"), "--out", str(tmp_path / "originals"))
    run(capsys, "attack", "--reprint", "B", "--in", str(tmp_path / "originals"), "--out", str(tmp_path / "fakes"))
    run(capsys, "train", "--templates", str(tmp_path / "templates"), "--printed", str(tmp_path / "originals"), "--out", str(tmp_path / "codebook.json"))
    return tmp_path


class TestParser:
    def test_subcommands(self):  # synced
        parser = build_parser()
        for command in ("gen", "print", "attack", "train", "auth", "eval", "stability"):
            assert parser.parse_args([command] + {"print": ["--preset", "A", "--in", "x"], "attack": ["--reprint", "A", "--in", "x"],
                                                  "train": ["--templates", "t", "--printed", "x"],
                                                  "auth": ["--template", "t", "--probe", "y", "--codebook", "c"]}.get(command, [])).command == command

    def test_missing_required_argument(self):  # synced
        with pytest.raises(SystemExit) as info:
            main(["print", "--preset", "A"])
        assert info.value.code == 2

    def test_no_command(self):  # synced
        assert main([]) == 2


class TestGen:
    def test_writes_templates(self, tmp_path: Path, capsys: pytest.CaptureFixture):  # synced
        result = run(capsys, "--seed", "4", "gen", "--n", "3", "--L", "12", "--out", str(tmp_path))
        assert result["files"] == 3
        assert sorted(digests(tmp_path)) == ["manifest.json", "t0000.json", "t0000.pgm", "t0001.json", "t0001.pgm", "t0002.json", "t0002.pgm"]

        manifest = File(tmp_path / "manifest.json").read()
        assert manifest["command"] == "gen" and manifest["config"] == {"n": 3, "L": 12, "p": 0.5, "seed": 4}
        assert manifest["outputs"]["t0001.pgm"] == File(tmp_path / "t0001.pgm").digest()

    def test_byte_identical_reruns(self, tmp_path: Path, capsys: pytest.CaptureFixture):  # synced
        for name in ("first", "second"):
            run(capsys, "gen", "--n", "2", "--L", "20", "--out", str(tmp_path / name))

        assert digests(tmp_path / "first") == digests(tmp_path / "second")

    def test_default_output_root(self, output_root: Dir, capsys: pytest.CaptureFixture):  # synced
        result = run(capsys, "gen", "--n", "1", "--L", "8")
        assert Path(result["out"]) == output_root.path / "templates" and "t0000.pgm" in output_root.new_dir("templates")

    @pytest.mark.parametrize("argv", [["--p", "1.5"], ["--L", "0"], ["--n", "0"]])
    def test_invalid_parameters(self, tmp_path: Path, argv: list, capsys: pytest.CaptureFixture):  # synced
        assert main(["gen", "--out", str(tmp_path), *argv]) == 2
        assert "cdpauth: error:" in capsys.readouterr().err

    def test_refuses_to_overwrite(self, tmp_path: Path, capsys: pytest.CaptureFixture):  # synced
        run(capsys, "gen", "--n", "1", "--L", "8", "--out", str(tmp_path))
        assert main(["--if-exists", "fail", "gen", "--n", "1", "--L", "8", "--out", str(tmp_path)]) == 1


class TestPipeline:
    def test_outputs(self, workspace: Path):  # synced
        for name in ("originals", "fakes"):
            assert len(list(Dir(workspace / name).files("pgm"))) == 4
            assert File(workspace / name / "t0002.pgm").read().shape == (48, 48)

        codebook = Codebook.load(File(workspace / "codebook.json"))
        assert codebook.total.count == 4 * 14 * 14 and codebook.h == 3 and codebook.k == 3
        assert File(workspace / "codebook.manifest.json").read()["outputs"]["codebook.json"] == File(workspace / "codebook.json").digest()

    def test_print_is_reproducible(self, workspace: Path, capsys: pytest.CaptureFixture):  # synced
        run(capsys, "print", "--preset", "A", "--in", str(workspace / "templates"), "--out", str(workspace / "again"))
        assert {name: value for name, value in digests(workspace / "again").items() if name != "manifest.json"} \
            == {name: value for name, value in digests(workspace / "originals").items() if name != "manifest.json"}

    def test_channel_override(self, workspace: Path, capsys: pytest.CaptureFixture):  # synced
        result = run(capsys, "print", "--preset", "A", "--noise-sigma", "0", "--in", str(workspace / "templates"), "--out", str(workspace / "clean"))
        assert File(workspace / "clean" / "manifest.json").read()["config"]["params"]["noise_sigma"] == 0
        assert result["params"] != run(capsys, "print", "--preset", "A", "--in", str(workspace / "templates"), "--out", str(workspace / "noisy"))["params"]

    def test_unknown_preset(self, workspace: Path):  # synced
        assert main(["print", "--preset", "Z", "--in", str(workspace / "templates"), "--out", str(workspace / "z")]) == 2

    def test_train_count_mismatch(self, workspace: Path):  # synced
        (workspace / "fakes" / "t0000.pgm").unlink()
        assert main(["train", "--templates", str(workspace / "templates"), "--printed", str(workspace / "fakes"), "--out", str(workspace / "cb.json")]) == 2


class TestAuth:
    def auth(self, workspace: Path, capsys: pytest.CaptureFixture, probe: str, *argv: str) -> dict:
        return run(capsys, "auth", "--template", str(workspace / "templates" / "t0001.pgm"), "--probe", str(workspace / probe / "t0001.pgm"),
                   "--codebook", str(workspace / "codebook.json"), "--out", str(workspace / "auth"), *argv)

    def test_explicit_threshold(self, workspace: Path, capsys: pytest.CaptureFixture):  # synced
        accepted = self.auth(workspace, capsys, "originals", "--threshold", "-1e9")
        assert accepted["decision"] == "original" and accepted["metric"] == "M-LLS" and accepted["threshold_source"] == "explicit"

        rejected = self.auth(workspace, capsys, "originals", "--metric", "HAMM", "--threshold", "-1")
        assert rejected["decision"] == "fake" and rejected["oriented_score"] == -rejected["score"] and rejected["threshold"] == 1.0

    def test_validation_threshold(self, workspace: Path, capsys: pytest.CaptureFixture):  # synced
        result = self.auth(workspace, capsys, "fakes", "--val-templates", str(workspace / "templates"), "--val-originals", str(workspace / "originals"),
                           "--val-fakes", str(workspace / "fakes"), "--rule", "tpr_at_fpr:0")
        assert result["threshold_source"].startswith("validation (tpr_at_fpr:0")
        assert result["decision"] == "fake"

    def test_one_class_threshold(self, workspace: Path, capsys: pytest.CaptureFixture):  # synced
        result = self.auth(workspace, capsys, "originals", "--val-templates", str(workspace / "templates"), "--val-originals", str(workspace / "originals"),
                           "--alpha", "0")
        assert result["threshold_source"] == "one-class (alpha=0.0)" and result["decision"] == "original"

    def test_needs_a_threshold(self, workspace: Path):  # synced
        assert main(["auth", "--template", str(workspace / "templates" / "t0001.pgm"), "--probe", str(workspace / "originals" / "t0001.pgm"),
                     "--codebook", str(workspace / "codebook.json"), "--out", str(workspace / "auth")]) == 2

    def test_missing_codebook(self, workspace: Path, capsys: pytest.CaptureFixture):  # synced
        assert main(["auth", "--template", str(workspace / "templates" / "t0001.pgm"), "--probe", str(workspace / "originals" / "t0001.pgm"),
                     "--codebook", str(workspace / "missing.json"), "--threshold", "0"]) == 2
        assert "does not exist" in capsys.readouterr().err


EVAL_SETTINGS = ["--set", "n_templates=12", "--set", "L=24", "--set", "n_train=4", "--set", "n_val=4", "--set", "n_test=4", "--set", "run_seeds=0",
                 "--set", "metrics=LLS,M-LLS,HAMM,M-HAMM"]


class TestEval:
    def test_outputs(self, tmp_path: Path, capsys: pytest.CaptureFixture):  # synced
        result = run(capsys, "eval", *EVAL_SETTINGS, "--out", str(tmp_path / "eval"))
        assert set(result["totals"]["interior"]) == {"LLS", "M-LLS", "HAMM", "M-HAMM"}
        assert set(digests(tmp_path / "eval")) == {"auc_runs.csv", "auc_summary.csv", "summary.json", "auc_table_interior.csv", "roc_points.csv",
                                                   "roc_interior_A.svg", "roc_interior_B.svg", "manifest.json"}

        runs = File(tmp_path / "eval" / "auc_runs.csv").read()
        assert len(runs) == 2 * 4 * 4 and list(runs.columns) == ["run_seed", "border_mode", "printer", "fake", "metric", "auc", "threshold", "test_fpr", "test_fnr", "mu"]
        assert list(File(tmp_path / "eval" / "auc_table_interior.csv").read().columns)[-1] == "total:average"

    def test_byte_identical_reruns(self, tmp_path: Path, capsys: pytest.CaptureFixture):  # synced
        run(capsys, "eval", *EVAL_SETTINGS, "--out", str(tmp_path / "first"))
        run(capsys, "eval", *EVAL_SETTINGS, "--out", str(tmp_path / "second"))
        assert digests(tmp_path / "first") == digests(tmp_path / "second")

    def test_config_file(self, tmp_path: Path, capsys: pytest.CaptureFixture):  # synced
        config = File(tmp_path / "config.json").write({"schema_version": 1, "n_templates": 12, "L": 24, "n_train": 4, "n_val": 4, "n_test": 4,
                                                       "run_seeds": [0], "metrics": ["HAMM"], "out": str(tmp_path / "configured")})
        run(capsys, "eval", "--config", str(config))

        manifest = File(tmp_path / "configured" / "manifest.json").read()
        assert manifest["config"]["metrics"] == ["HAMM"] and manifest["inputs"] == {str(config): config.digest()}

    @pytest.mark.parametrize("argv", [["--set", "n_templates"], ["--set", "colour=red"], ["--set", "n_templates=5"], ["--config", "missing.json"]])
    def test_invalid_config(self, tmp_path: Path, argv: list):  # synced
        assert main(["eval", *argv, "--out", str(tmp_path)]) == 2


class TestStability:
    def test_outputs(self, tmp_path: Path, capsys: pytest.CaptureFixture):  # synced
        result = run(capsys, "stability", "--set", "L=24", "--sizes", "1,4", "--reference", "4", "--repeats", "2", "--printer", "B", "--out", str(tmp_path))
        assert [point["size"] for point in result["curve"]] == [1, 4] and result["curve"][-1]["mean_d1"] == 0.0
        assert {"stability.csv", "stability.svg", "manifest.json"} <= set(digests(tmp_path))

    @pytest.mark.parametrize("argv", [["--printer", "C"], ["--sizes", "1,x"], ["--sizes", "9", "--reference", "4"]])
    def test_invalid(self, tmp_path: Path, argv: list):  # synced
        assert main(["stability", "--set", "L=24", "--repeats", "1", "--reference", "4", *argv, "--out", str(tmp_path)]) == 2


class TestRunConfig:
    def test_from_mapping(self):  # synced
        run_config = RunConfig.from_mapping({"out": "somewhere", "verbosity": "1", "L": 24})
        assert (run_config.out, run_config.verbosity, run_config.experiment.L) == ("somewhere", 1, 24)
        assert RunConfig.from_mapping(run_config.to_mapping()) == run_config

    def test_rejects_non_objects(self, tmp_path: Path):  # synced
        with pytest.raises(ConfigError):
            RunConfig.from_file(File(tmp_path / "config.json").write([1, 2]))
