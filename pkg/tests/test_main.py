import json

import pytest

from main import EXIT_CONFIG, EXIT_IO, EXIT_OK, RunConfig, infer_format, main
from utils import ConfigError


@pytest.mark.parametrize("value,fmt", [
    ("xor", "xor-builtin"),
    ("data/SPECT.train", "spect"),
    ("data/SPECTF.test", "spectf"),
    ("bupa.data", "bupa"),
    ("measurements.csv", "generic-csv"),
])
def test_infer_format(value, fmt):
    assert infer_format(value) == fmt


def test_fit_xor_writes_model(tmp_path, capsys):
    out = tmp_path / "xor.json"
    assert main(["fit", "--dataset", "xor", "--out", str(out)]) == EXIT_OK
    model = json.loads(out.read_text())
    assert model["model"]["pwla"]["weights"] == [0.5, 0.5]
    assert model["model"]["epochs"] == 1
    assert "train_accuracy=1.0000" in capsys.readouterr().out


def test_predict_with_saved_model(tmp_path, capsys):
    model = tmp_path / "xor.json"
    main(["fit", "--dataset", "xor", "--out", str(model)])
    capsys.readouterr()

    assert main(["predict", "--dataset", "xor", "--model", str(model)]) == EXIT_OK
    assert capsys.readouterr().out.split() == ["0", "1", "1", "0"]

    assert main(["predict", "--dataset", "xor", "--model", str(model), "--out-format", "json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["accuracy"] == 1.0


def test_missing_file_is_an_io_error(tmp_path, capsys):
    assert main(["dump-weights", "--dataset", str(tmp_path / "absent.csv")]) == EXIT_IO
    assert "file not found" in capsys.readouterr().err


def test_unknown_method_is_a_config_error(capsys):
    assert main(["bench", "--dataset", "xor", "--methods", "pwla-smffnn,svm"]) == EXIT_CONFIG
    assert "svm" in capsys.readouterr().err


def test_bad_policy_is_a_config_error():
    assert main(["dump-weights", "--dataset", "xor", "--reduce", "top-k:zero"]) == EXIT_CONFIG


def test_argument_errors_exit_with_two():
    with pytest.raises(SystemExit) as info:
        main(["fit"])
    assert info.value.code == 2


def test_dump_weights_xor(capsys):
    assert main(["dump-weights", "--dataset", "xor", "--compare"]) == EXIT_OK
    out = capsys.readouterr().out
    rows = [line for line in out.splitlines() if line.startswith(("1 ", "2 "))]
    assert len(rows) >= 2
    assert all("0.500" in row for row in rows[:2])
    assert "xor: matches" in out


def test_dump_weights_csv(capsys):
    main(["dump-weights", "--dataset", "xor", "--out-format", "csv"])
    assert capsys.readouterr().out.splitlines() == ["attribute,name,weight,kept", "1,attr1,0.5,1", "2,attr2,0.5,1"]


def test_dump_stacks_xor(capsys):
    assert main(["dump-stacks", "--dataset", "xor", "--out-format", "json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == {"stack0": [2.0, 0.0], "stack1": [1.0, 1.0]}


def test_folds_cover_every_instance(write_file, capsys):
    rows = "\n".join(f"{i},{i % 3},{i % 2}" for i in range(20))
    path = write_file("data.csv", f"a,b,label\n{rows}\n")
    assert main(["folds", "--dataset", str(path), "--k", "5", "--seed", "3", "--out-format", "json"]) == EXIT_OK
    plan = json.loads(capsys.readouterr().out)
    assert plan["k"] == 5
    assert sorted(set(plan["assignments"])) == [0, 1, 2, 3, 4]
    assert len(plan["assignments"]) == 20


def test_bench_is_reproducible(tmp_path):
    args = ["bench", "--dataset", "xor", "--methods", "pwla-smffnn,sbpn", "--k", "4", "--seed", "1",
            "--max-epochs", "200", "--no-timing", "--out-format", "csv"]
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    assert main([*args, "--out", str(first)]) == EXIT_OK
    assert main([*args, "--out", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("pwla-smffnn,xor,")
    assert lines[1].endswith(",1.0,0.0")


def test_bench_holdout_on_a_test_file(tmp_path, write_file, capsys):
    train = write_file("train.csv", "0,0,0\n0,1,1\n1,0,1\n1,1,0\n")
    test = write_file("test.csv", "1,1,0\n0,1,1\n")
    assert main(["bench", "--dataset", str(train), "--test-dataset", str(test),
                 "--methods", "pwla-smffnn", "--no-timing", "--out-format", "json"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)[0]
    assert report["dataset"] == "train.csv->test.csv"
    assert report["accuracy"] == 1.0


def test_reproduce_xor(capsys):
    assert main(["reproduce", "--scenarios", "xor", "--max-epochs", "50", "--no-timing"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "=== XOR ===" in out
    assert "pca-bpn:2" in out


def test_reproduce_unknown_scenario():
    assert main(["reproduce", "--scenarios", "iris"]) == EXIT_CONFIG


class TestRunConfig:
    def test_data_commands_need_a_dataset(self):
        with pytest.raises(ConfigError, match="--dataset"):
            RunConfig(command="dump-weights")

    def test_fold_commands_need_two_folds(self):
        with pytest.raises(ConfigError, match="--k"):
            RunConfig(command="folds", dataset="xor", k=1)

    def test_combine_without_test_file(self):
        assert main(["bench", "--dataset", "xor", "--combine-test"]) == EXIT_CONFIG

    def test_jobs_must_be_positive(self):
        assert main(["folds", "--dataset", "xor", "--jobs", "0"]) == EXIT_CONFIG


def test_bench_help_names_the_timing_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["bench", "--help"])
    assert info.value.code == 0
    text = " ".join(capsys.readouterr().out.split())
    assert "only --no-timing runs repeat byte for byte" in text
