"""Command-line surface: flags, output shapes, exit codes."""

import subprocess
import sys

import pytest

from forestscope.cli import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_PRESET,
    EXIT_USAGE,
    main,
)


def run_main(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_datasets_lists_concepts_and_bundled(capsys):
    code, out, _ = run_main(capsys, "datasets")
    assert code == EXIT_OK
    assert "concept xyz-or-ab: 5 features, space 32" in out
    assert "bundled lenses: 24 examples" in out


def test_datasets_validate_good_and_bad(tmp_path, capsys):
    good = tmp_path / "ok.csv"
    good.write_text("a=0|1,class=n|y\n0,n\n1,y\n", encoding="utf-8")
    code, out, _ = run_main(capsys, "datasets", "--validate", str(good))
    assert code == EXIT_OK and "2 examples" in out

    bad = tmp_path / "bad.csv"
    bad.write_text("a=0|1,class=n|y\n0,maybe\n", encoding="utf-8")
    code, _, err = run_main(capsys, "datasets", "--validate", str(bad))
    assert code == EXIT_DATA and "error: data:" in err

    code, _, err = run_main(capsys, "datasets", "--validate", str(tmp_path / "gone.csv"))
    assert code == EXIT_DATA


def test_enumerate_profile_lines(capsys):
    code, out, _ = run_main(capsys, "enumerate", "--concept", "xyz-or-ab", "--max-nodes", "8")
    assert code == EXIT_OK
    assert out.splitlines() == ["8,72"]


def test_enumerate_emit_trees_streams_then_counts(capsys):
    code, out, _ = run_main(capsys, "enumerate", "--concept", "ab", "--max-nodes", "2", "--emit-trees")
    lines = out.splitlines()
    assert code == EXIT_OK
    assert lines[0].startswith("(") and lines[-1] == "2,2"
    assert len(lines) == 3


def test_enumerate_needs_exactly_one_source(capsys, tmp_path):
    code, _, err = run_main(capsys, "enumerate")
    assert code == EXIT_CONFIG and "exactly one" in err
    p = tmp_path / "d.csv"
    p.write_text("a=0|1,class=n|y\n0,n\n", encoding="utf-8")
    code, _, err = run_main(capsys, "enumerate", "--concept", "ab", "--data", str(p))
    assert code == EXIT_CONFIG


def test_enumerate_truncation_exits_nonzero(capsys):
    code, _, err = run_main(
        capsys, "enumerate", "--concept", "xyz-or-ab", "--max-trees", "10"
    )
    assert code == EXIT_FAILURE
    assert "cap" in err


def test_enumerate_data_file(tmp_path, capsys):
    p = tmp_path / "xor.csv"
    p.write_text(
        "p=0|1,q=0|1,class=n|y\n0,0,n\n0,1,y\n1,0,y\n1,1,n\n", encoding="utf-8"
    )
    code, out, _ = run_main(capsys, "enumerate", "--data", str(p))
    assert code == EXIT_OK
    assert out.splitlines() == ["3,2"]


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as e:
        main(["enumerate", "--max-nodes", "not-a-number"])
    assert e.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as e:
        main(["no-such-command"])
    assert e.value.code == EXIT_USAGE


def test_experiment_writes_run_directory(tmp_path, capsys):
    out_dir = tmp_path / "run"
    code, out, err = run_main(
        capsys,
        "experiment", "--preset", "fig14", "--seed", "9",
        "--out", str(out_dir), "--threads", "1",
    )
    assert code == EXIT_OK
    assert (out_dir / "cardinality_stats.csv").is_file()
    assert (out_dir / "run_manifest.csv").is_file()
    assert "wrote" in out
    assert "trial" in err  # progress lines go to stderr


def test_experiment_quiet_silences_progress(tmp_path, capsys):
    code, _, err = run_main(
        capsys,
        "experiment", "--preset", "fig14", "--seed", "9",
        "--out", str(tmp_path / "q"), "--quiet",
    )
    assert code == EXIT_OK and err == ""


def test_experiment_unknown_preset(capsys):
    code, _, err = run_main(capsys, "experiment", "--preset", "fig99")
    assert code == EXIT_PRESET
    assert "fig1" in err  # the message lists what exists


def test_experiment_custom_protocol(tmp_path, capsys):
    out_dir = tmp_path / "custom"
    code, _, _ = run_main(
        capsys,
        "experiment", "--concept", "ab", "--n-train", "20", "--trials", "4",
        "--max-nodes", "6", "--seed", "3", "--out", str(out_dir), "--quiet",
    )
    assert code == EXIT_OK
    lines = (out_dir / "run_manifest.csv").read_text().splitlines()
    assert len(lines) == 5


def test_experiment_rejects_zero_trials(tmp_path, capsys):
    # an explicit 0 must not fall back to the default trial count
    code, _, err = run_main(
        capsys,
        "experiment", "--concept", "ab", "--n-train", "12", "--trials", "0",
        "--out", str(tmp_path / "x"), "--quiet",
    )
    assert code == EXIT_CONFIG
    assert "trial_count" in err


def test_experiment_rejects_trial_override_for_loo(tmp_path, capsys):
    code, _, err = run_main(
        capsys,
        "experiment", "--preset", "fig5", "--trials", "7",
        "--out", str(tmp_path / "x"), "--quiet",
    )
    assert code == EXIT_CONFIG


def test_experiment_fig15_needs_data(tmp_path, capsys):
    code, _, err = run_main(
        capsys, "experiment", "--preset", "fig15", "--out", str(tmp_path / "x"), "--quiet"
    )
    assert code == EXIT_CONFIG
    assert "data" in err


def test_experiment_fig15_runs_on_a_supplied_file(tmp_path, capsys):
    from forestscope import Dataset, FeatureSchema, LabeledExample, instance_space, save_dataset
    from forestscope.rng import SplitMix64

    schema = FeatureSchema(
        features=(
            ("stable", ("no", "yes")),
            ("error", ("no", "yes")),
            ("sign", ("neg", "pos")),
            ("wind", ("head", "tail")),
            ("magnitude", ("low", "medium", "strong", "outof")),
            ("visibility", ("none", "poor", "fair", "good")),
        ),
        classes=("noauto", "auto"),
    )
    rows = list(instance_space(schema))
    picked = sorted(SplitMix64(20260817).sample_indices(len(rows), 140))

    def label(x):
        if x[1] == 1 or x[4] == 3:
            return 0
        return int(x[0] == 1 or x[5] >= 2)

    data = Dataset(schema, tuple(LabeledExample(rows[i], label(rows[i])) for i in picked))
    src = tmp_path / "flight.csv"
    save_dataset(data, str(src))

    out_dir = tmp_path / "run"
    code, _, _ = run_main(
        capsys,
        "experiment", "--preset", "fig15", "--data", str(src),
        "--seed", "9", "--out", str(out_dir), "--quiet",
    )
    assert code == EXIT_OK
    table = (out_dir / "cardinality_stats.csv").read_text().splitlines()
    labels = {line.split(",")[0] for line in table[1:]}
    assert labels == {"fig15:n20cap7", "fig15:n50cap9", "fig15:n100cap11"}


def test_threads_env_fallback(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FORESTSCOPE_THREADS", "2")
    code, _, _ = run_main(
        capsys,
        "experiment", "--preset", "fig14", "--seed", "9",
        "--out", str(tmp_path / "env"), "--quiet",
    )
    assert code == EXIT_OK
    monkeypatch.setenv("FORESTSCOPE_THREADS", "zero?")
    code, _, err = run_main(
        capsys,
        "experiment", "--preset", "fig14", "--seed", "9",
        "--out", str(tmp_path / "env2"), "--quiet",
    )
    assert code == EXIT_CONFIG


def test_oracle_check_reports_matches(capsys):
    code, out, _ = run_main(
        capsys, "oracle-check", "--features", "3", "--labelings", "4", "--seed", "0"
    )
    assert code == EXIT_OK
    assert out.strip() == "4/4 match"


def test_oracle_check_bounds_features(capsys):
    code, _, err = run_main(capsys, "oracle-check", "--features", "9")
    assert code == EXIT_CONFIG
    assert "1..4" in err


def test_policy_command_round_trip(tmp_path, capsys):
    out_dir = tmp_path / "run"
    code, _, _ = run_main(
        capsys,
        "experiment", "--concept", "xyz-or-ab", "--n-train", "20",
        "--trials", "6", "--max-nodes", "8", "--seed", "5",
        "--out", str(out_dir), "--quiet",
    )
    assert code == EXIT_OK
    policy_dir = tmp_path / "tables"
    code, out, _ = run_main(
        capsys,
        "policy", "--records", str(out_dir / "trial_records.jsonl"),
        "--out", str(policy_dir), "--seed", "5",
    )
    assert code == EXIT_OK
    assert (policy_dir / "policy.csv").is_file()
    rows = [l for l in out.splitlines() if "," in l]
    assert rows
    for line in rows:
        label, min_size, preferred, count = line.split(",")
        assert int(min_size) <= int(preferred)


def test_policy_missing_records_file(tmp_path, capsys):
    code, _, err = run_main(capsys, "policy", "--records", str(tmp_path / "gone.jsonl"))
    assert code == EXIT_DATA


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "forestscope.cli", "datasets"],
        capture_output=True, text=True,
    )
    assert proc.returncode == EXIT_OK
    assert "concept xyz-or-ab" in proc.stdout
    script = subprocess.run(
        ["forestscope", "--help"], capture_output=True, text=True
    )
    assert script.returncode == EXIT_OK
    assert "enumerate" in script.stdout
