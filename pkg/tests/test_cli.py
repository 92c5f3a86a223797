import json

import numpy as np
import pytest

from gap_gauge import FullJoint
from gap_gauge.cli import main, parse_grid
from gap_gauge.errors import ValidationError
from gap_gauge.files import model_to_dict, write_json

from conftest import M1, M1_WITH_D

CLASSIFIER = {"p0": 0.05, "r0": 0.1, "p1": 0.07, "r1": 0.09}


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("GAPGAUGE_SEED", raising=False)


@pytest.fixture
def m1_model_file(tmp_path):
    path = tmp_path / "m1.json"
    write_json(path, model_to_dict(M1))
    return str(path)


@pytest.fixture
def constrained_config_file(tmp_path):
    path = tmp_path / "config.json"
    write_json(
        path,
        {**CLASSIFIER, "mode": "constrained", "eps_b1": 0.2, "eps_b2": 0.2},
    )
    return str(path)


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParseGrid:
    def test_simple(self):
        assert parse_grid("0:1:0.5") == [0.0, 0.5, 1.0]

    def test_tenth_steps_have_clean_values(self):
        grid = parse_grid("0:1:0.1")
        assert len(grid) == 11
        assert grid[3] == 0.3  # not 0.30000000000000004
        assert grid[-1] == 1.0

    def test_single_point(self):
        assert parse_grid("0.2:0.2:0.1") == [0.2]

    def test_rejects_zero_step(self):
        with pytest.raises(ValidationError, match="step"):
            parse_grid("0:1:0")

    def test_rejects_backwards(self):
        with pytest.raises(ValidationError, match="stop"):
            parse_grid("1:0:0.1")

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError, match="\\[0, 1\\]"):
            parse_grid("0.5:1.5:0.5")

    def test_rejects_malformed(self):
        with pytest.raises(ValidationError, match="start:stop:step"):
            parse_grid("0,1,0.1")
        with pytest.raises(ValidationError, match="numeric"):
            parse_grid("a:b:c")


class TestAnalyze:
    def test_reduced_model_report(self, capsys, m1_model_file):
        code, out, err = run(capsys, "analyze", m1_model_file)
        assert code == 0 and err == ""
        report = json.loads(out)
        assert report["gap"]["error"] == pytest.approx(0.001, abs=1e-12)
        assert report["gap"]["G"] == pytest.approx(0.201, abs=1e-12)
        assert report["bounds"]["best"] == pytest.approx(0.04, abs=1e-12)
        assert report["structure"]["eps_B1"] == pytest.approx(0.2, abs=1e-12)
        assert report["independence"] is None

    def test_joint_model_includes_diagnostics(self, capsys, tmp_path):
        from gap_gauge import consistent_marginals, expand

        joint = expand(M1_WITH_D, consistent_marginals(M1_WITH_D))
        path = tmp_path / "joint.json"
        write_json(path, model_to_dict(joint))
        code, out, _ = run(capsys, "analyze", str(path))
        assert code == 0
        report = json.loads(out)
        assert report["independence"] is not None
        assert report["independence"]["case1_holds"] is False
        assert report["gap"]["error"] == pytest.approx(0.001, abs=1e-10)

    def test_uniform_joint_has_no_gap(self, capsys, tmp_path):
        path = tmp_path / "uniform.json"
        write_json(path, model_to_dict(FullJoint(cells=np.full(16, 1 / 16))))
        code, out, _ = run(capsys, "analyze", str(path))
        assert code == 0
        report = json.loads(out)
        assert report["gap"]["G"] == pytest.approx(0.0, abs=1e-12)
        assert report["gap"]["G_hat"] == pytest.approx(0.0, abs=1e-12)
        assert report["independence"]["case1_holds"] is True

    def test_invalid_model_exits_2(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        payload = model_to_dict(M1)
        payload["reduced"]["slice0"]["p"] = 1.2
        write_json(path, payload)
        code, out, err = run(capsys, "analyze", str(path))
        assert code == 2
        assert "p" in err and "1.2" in err

    def test_missing_file_exits_2(self, capsys, tmp_path):
        code, _, err = run(capsys, "analyze", str(tmp_path / "absent.json"))
        assert code == 2
        assert err != ""

    def test_zero_mass_joint_exits_3(self, capsys, tmp_path):
        cells = np.zeros(16)
        cells[0b0111] = 0.5  # all mass on l=0
        cells[0b0000] = 0.5
        path = tmp_path / "degenerate.json"
        write_json(path, model_to_dict(FullJoint(cells=cells)))
        code, _, err = run(capsys, "analyze", str(path))
        assert code == 3
        assert "zero mass" in err

    def test_csv_format(self, capsys, m1_model_file):
        code, out, _ = run(capsys, "analyze", m1_model_file, "--format", "csv")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "field,value"
        fields = dict(line.split(",", 1) for line in lines[1:])
        assert float(fields["gap.error"]) == pytest.approx(0.001, abs=1e-12)
        assert fields["independence"] == ""

    def test_out_file_and_manifest(self, capsys, m1_model_file, tmp_path):
        out_path = tmp_path / "report.json"
        code, out, _ = run(capsys, "analyze", m1_model_file, "--out", str(out_path))
        assert code == 0
        assert out == ""  # nothing on stdout when writing to a file
        report = json.loads(out_path.read_text())
        assert report["bounds"]["best"] == pytest.approx(0.04, abs=1e-12)
        manifest = json.loads((tmp_path / "report.json.manifest.json").read_text())
        assert manifest["command"] == "analyze"
        assert manifest["seed"] == 42
        assert list(manifest["inputs"]) == [m1_model_file]
        assert manifest["inputs"][m1_model_file].startswith("sha256:")
        assert manifest["outputs"] == [str(out_path)]

    def test_stdout_run_writes_no_manifest(self, capsys, m1_model_file, tmp_path):
        code, _, _ = run(capsys, "analyze", m1_model_file)
        assert code == 0
        assert not list(tmp_path.glob("*manifest*"))


class TestSimulate:
    def test_writes_outputs_and_manifest(self, capsys, constrained_config_file, tmp_path):
        prefix = str(tmp_path / "run")
        code, _, err = run(
            capsys, "simulate", constrained_config_file,
            "--trials", "200", "--out", prefix,
        )
        assert code == 0, err
        summary = json.loads((tmp_path / "run.summary.json").read_text())
        assert summary["n_trials"] == 200
        assert summary["seed"] == 42
        assert summary["rejection_rate"] > 0.0
        errors = (tmp_path / "run.errors.csv").read_text().splitlines()
        assert errors[0] == "error"
        assert len(errors) == 201
        hist = (tmp_path / "run.hist.csv").read_text().splitlines()
        assert hist[0] == "bin_lo,bin_hi,count"
        manifest = json.loads((tmp_path / "run.manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["config"]["trials"] == 200
        assert manifest["config"]["sampler"]["eps_b1"] == 0.2
        assert len(manifest["outputs"]) == 3

    def test_rerun_is_byte_identical(self, capsys, constrained_config_file, tmp_path):
        for prefix in ("one", "two"):
            code, _, _ = run(
                capsys, "simulate", constrained_config_file,
                "--trials", "150", "--out", str(tmp_path / prefix),
            )
            assert code == 0
        for suffix in (".summary.json", ".errors.csv", ".hist.csv"):
            assert (tmp_path / ("one" + suffix)).read_bytes() == (
                tmp_path / ("two" + suffix)
            ).read_bytes()

    def test_seed_flag_changes_results(self, capsys, constrained_config_file, tmp_path):
        for prefix, seed in (("a", "42"), ("b", "43")):
            run(
                capsys, "simulate", constrained_config_file,
                "--trials", "150", "--seed", seed, "--out", str(tmp_path / prefix),
            )
        assert (tmp_path / "a.errors.csv").read_text() != (
            tmp_path / "b.errors.csv"
        ).read_text()

    def test_env_seed_used_when_no_flag(
        self, capsys, monkeypatch, constrained_config_file, tmp_path
    ):
        monkeypatch.setenv("GAPGAUGE_SEED", "7")
        run(
            capsys, "simulate", constrained_config_file,
            "--trials", "100", "--out", str(tmp_path / "env"),
        )
        summary = json.loads((tmp_path / "env.summary.json").read_text())
        assert summary["seed"] == 7

    def test_seed_flag_beats_env(
        self, capsys, monkeypatch, constrained_config_file, tmp_path
    ):
        monkeypatch.setenv("GAPGAUGE_SEED", "7")
        run(
            capsys, "simulate", constrained_config_file,
            "--trials", "100", "--seed", "9", "--out", str(tmp_path / "flag"),
        )
        summary = json.loads((tmp_path / "flag.summary.json").read_text())
        assert summary["seed"] == 9

    def test_bad_env_seed_exits_2(
        self, capsys, monkeypatch, constrained_config_file, tmp_path
    ):
        monkeypatch.setenv("GAPGAUGE_SEED", "many")
        code, _, err = run(
            capsys, "simulate", constrained_config_file,
            "--trials", "100", "--out", str(tmp_path / "x"),
        )
        assert code == 2
        assert "GAPGAUGE_SEED" in err

    def test_budget_exhaustion_exits_4(self, capsys, tmp_path):
        config = tmp_path / "tight.json"
        write_json(
            config,
            {
                **CLASSIFIER, "mode": "constrained",
                "eps_b1": 1.0, "eps_b2": 1.0, "max_rejections": 1,
            },
        )
        code, _, err = run(
            capsys, "simulate", str(config),
            "--trials", "2000", "--out", str(tmp_path / "run"),
        )
        assert code == 4
        assert "no valid sample" in err

    def test_unconstrained_config(self, capsys, tmp_path):
        config = tmp_path / "plain.json"
        write_json(config, {**CLASSIFIER, "mode": "unconstrained"})
        code, _, err = run(
            capsys, "simulate", str(config),
            "--trials", "100", "--out", str(tmp_path / "run"),
        )
        assert code == 0, err
        summary = json.loads((tmp_path / "run.summary.json").read_text())
        assert summary["rejection_rate"] == 0.0


class TestSweep:
    def test_writes_expected_columns(self, capsys, constrained_config_file, tmp_path):
        out = tmp_path / "sweep.csv"
        code, _, err = run(
            capsys, "sweep", constrained_config_file,
            "--varied", "eps_b2", "--grid", "0:0.4:0.2",
            "--trials", "40", "--out", str(out),
        )
        assert code == 0, err
        lines = out.read_text().splitlines()
        assert lines[0] == "grid_value,p95,bound_a,bound_combined_stated,bound_combined_proof"
        assert len(lines) == 4

    def test_stated_column_follows_formula(self, capsys, constrained_config_file, tmp_path):
        # varied eps_b2 with eps_b1 fixed at 0.2:
        # stated = 2 gamma_B2 + eps_b2 (2 gamma_A + gamma_B1) + eps_b1 gamma_B1
        out = tmp_path / "sweep.csv"
        run(
            capsys, "sweep", constrained_config_file,
            "--varied", "eps_b2", "--grid", "0:1:0.25",
            "--trials", "20", "--out", str(out),
        )
        for line in out.read_text().splitlines()[1:]:
            g, _, _, stated, _ = (float(x) for x in line.split(","))
            expected = 2 * 0.02 + g * (2 * 0.1 + 0.05) + 0.2 * 0.05
            assert stated == pytest.approx(expected, abs=1e-12)

    def test_rerun_is_byte_identical(self, capsys, constrained_config_file, tmp_path):
        for name in ("one.csv", "two.csv"):
            run(
                capsys, "sweep", constrained_config_file,
                "--varied", "eps_b1", "--grid", "0:0.2:0.1",
                "--trials", "40", "--out", str(tmp_path / name),
            )
        assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()

    def test_zero_step_exits_2(self, capsys, constrained_config_file, tmp_path):
        code, _, err = run(
            capsys, "sweep", constrained_config_file,
            "--varied", "eps_b2", "--grid", "0:1:0",
            "--trials", "10", "--out", str(tmp_path / "s.csv"),
        )
        assert code == 2
        assert "step" in err

    def test_unconstrained_config_exits_2(self, capsys, tmp_path):
        config = tmp_path / "plain.json"
        write_json(config, {**CLASSIFIER, "mode": "unconstrained"})
        code, _, err = run(
            capsys, "sweep", str(config),
            "--varied", "eps_b2", "--grid", "0:0.2:0.1",
            "--trials", "10", "--out", str(tmp_path / "s.csv"),
        )
        assert code == 2
        assert "constrained" in err

    def test_manifest_records_grid(self, capsys, constrained_config_file, tmp_path):
        out = tmp_path / "sweep.csv"
        run(
            capsys, "sweep", constrained_config_file,
            "--varied", "eps_b2", "--grid", "0:0.2:0.1",
            "--trials", "20", "--out", str(out),
        )
        manifest = json.loads((tmp_path / "sweep.csv.manifest.json").read_text())
        assert manifest["config"]["varied"] == "eps_b2"
        assert manifest["config"]["grid"] == "0:0.2:0.1"


class TestEstimate:
    @pytest.fixture
    def records_file(self, tmp_path, m1_joint):
        from gap_gauge import sample_dataset

        data = sample_dataset(m1_joint, 5000, seed=3)
        path = tmp_path / "records.csv"
        rows = ["l,v,vhat,y"]
        rows += [
            f"{l},{v},{vh},{y}"
            for l, v, vh, y in zip(data.l, data.v, data.vhat, data.y)
        ]
        path.write_text("\n".join(rows) + "\n")
        return str(path)

    def test_full_pipeline(self, capsys, records_file):
        code, out, err = run(capsys, "estimate", records_file)
        assert code == 0, err
        report = json.loads(out)
        assert report["n"] == 5000
        assert report["gap"]["G_hat"] == pytest.approx(0.202, abs=0.05)
        assert report["bounds"]["best"] > 0.0
        assert report["bootstrap_ci"] is None

    def test_no_v_column_reports_g_hat_only(self, capsys, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text("l,v,vhat,y\n0,,1,1\n0,,1,0\n1,,1,1\n1,,1,1\n1,,1,0\n0,,0,0\n")
        code, out, _ = run(capsys, "estimate", str(path))
        assert code == 0
        report = json.loads(out)
        assert report["gap"] is None
        assert report["structure"] is None
        assert report["bounds"] is None
        assert report["g_hat"] == pytest.approx(1 / 6, abs=1e-12)

    def test_bootstrap_deterministic(self, capsys, records_file):
        outputs = []
        for _ in range(2):
            code, out, _ = run(
                capsys, "estimate", records_file, "--bootstrap", "25"
            )
            assert code == 0
            outputs.append(out)
        assert outputs[0] == outputs[1]
        report = json.loads(outputs[0])
        ci = report["bootstrap_ci"]
        assert ci["replicates"] == 25
        lo, hi = ci["intervals"]["G_hat"]
        assert lo <= report["gap"]["G_hat"] <= hi

    def test_condition_ystar_missing_column_exits_2(self, capsys, records_file):
        code, _, err = run(capsys, "estimate", records_file, "--condition-ystar")
        assert code == 2
        assert "ystar" in err

    def test_condition_ystar_filters(self, capsys, tmp_path):
        path = tmp_path / "records.csv"
        rows = ["l,v,vhat,y,ystar"]
        for i in range(16):
            l, v, vh, y = i >> 3 & 1, i >> 2 & 1, i >> 1 & 1, i & 1
            rows.append(f"{l},{v},{vh},{y},1")
            rows.append(f"{l},{v},{vh},{1 - y},0")
        path.write_text("\n".join(rows) + "\n")
        code, out, _ = run(capsys, "estimate", str(path), "--condition-ystar")
        assert code == 0
        assert json.loads(out)["n"] == 16

    def test_malformed_row_exits_2(self, capsys, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text("l,v,vhat,y\n0,2,1,1\n")
        code, _, err = run(capsys, "estimate", str(path))
        assert code == 2
        assert "line 2" in err

    def test_header_only_exits_3(self, capsys, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text("l,v,vhat,y\n")
        code, _, err = run(capsys, "estimate", str(path))
        assert code == 3

    def test_zero_mass_exits_3(self, capsys, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text("l,v,vhat,y\n0,,1,1\n0,,0,0\n1,,0,0\n")
        code, _, err = run(capsys, "estimate", str(path))
        assert code == 3
        assert "vhat=1" in err

    def test_out_file_and_manifest(self, capsys, records_file, tmp_path):
        out_path = tmp_path / "estimate.json"
        code, _, _ = run(
            capsys, "estimate", records_file, "--out", str(out_path)
        )
        assert code == 0
        manifest = json.loads((tmp_path / "estimate.json.manifest.json").read_text())
        assert manifest["command"] == "estimate"
        assert manifest["config"]["bootstrap"] == 0


class TestTopLevel:
    def test_usage_error_exits_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 2

    def test_unknown_command_exits_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 2

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["--version"])
        assert err.value.code == 0
        assert "gap-gauge" in capsys.readouterr().out

    def test_out_of_range_seed_exits_2(self, capsys, m1_model_file):
        code, _, err = run(capsys, "analyze", m1_model_file, "--seed", "-1")
        assert code == 2
        assert "seed" in err
