import json

import numpy as np
import pytest

from gap_gauge import (
    FullJoint,
    Histogram,
    ReducedModel,
    SamplerConfig,
    ValidationError,
    bound_report,
    compute_gaps,
    run_monte_carlo,
    structure_params,
    sweep,
)
from gap_gauge.files import (
    bound_report_dict,
    dumps_json,
    gap_report_dict,
    load_model_file,
    load_sampler_config,
    model_from_dict,
    model_to_dict,
    read_errors_csv,
    read_histogram_csv,
    read_summary_json,
    read_sweep_csv,
    sampler_config_from_dict,
    sampler_config_to_dict,
    structure_params_dict,
    summary_dict,
    write_errors_csv,
    write_histogram_csv,
    write_json,
    write_sweep_csv,
)


class TestDumpsJson:
    def test_sorted_keys_and_trailing_newline(self):
        text = dumps_json({"b": 1, "a": 2})
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")

    def test_deterministic(self):
        payload = {"x": 0.1 + 0.2, "y": [1, 2, {"k": True}]}
        assert dumps_json(payload) == dumps_json(payload)

    def test_floats_round_trip(self):
        value = 0.1 + 0.2
        assert json.loads(dumps_json({"v": value}))["v"] == value


class TestModelFiles:
    def test_reduced_round_trip(self, m1, tmp_path):
        path = tmp_path / "model.json"
        write_json(path, model_to_dict(m1))
        loaded = load_model_file(path)
        assert isinstance(loaded, ReducedModel)
        assert loaded == m1

    def test_reduced_round_trip_with_d(self, m1_with_d, tmp_path):
        path = tmp_path / "model.json"
        write_json(path, model_to_dict(m1_with_d))
        assert load_model_file(path) == m1_with_d

    def test_joint_round_trip(self, m1_joint, tmp_path):
        path = tmp_path / "model.json"
        write_json(path, model_to_dict(m1_joint))
        loaded = load_model_file(path)
        assert isinstance(loaded, FullJoint)
        assert np.allclose(loaded.cells, m1_joint.cells, atol=0)

    def test_requires_exactly_one_variant(self, m1, m1_joint):
        both = {**model_to_dict(m1), **model_to_dict(m1_joint)}
        with pytest.raises(ValidationError, match="exactly one"):
            model_from_dict(both)
        with pytest.raises(ValidationError, match="exactly one"):
            model_from_dict({})

    def test_rejects_unknown_keys(self, m1):
        payload = model_to_dict(m1)
        payload["reduced"]["slice0"]["q"] = 0.5
        with pytest.raises(ValidationError, match="unknown field 'q'"):
            model_from_dict(payload)

    def test_rejects_missing_field(self, m1):
        payload = model_to_dict(m1)
        del payload["reduced"]["slice1"]["c"]
        with pytest.raises(ValidationError, match="missing required field 'c'"):
            model_from_dict(payload)

    def test_out_of_range_cites_field(self, m1):
        payload = model_to_dict(m1)
        payload["reduced"]["slice0"]["p"] = 1.2
        with pytest.raises(ValidationError) as err:
            model_from_dict(payload)
        assert "slice0" in str(err.value) and "p" in str(err.value)

    def test_rejects_boolean_number(self, m1):
        payload = model_to_dict(m1)
        payload["reduced"]["slice0"]["p"] = True
        with pytest.raises(ValidationError, match="must be a number"):
            model_from_dict(payload)

    def test_rejects_wrong_cell_count(self):
        with pytest.raises(ValidationError, match="16"):
            model_from_dict({"joint": {"cells": [0.25, 0.25, 0.25, 0.25]}})

    def test_load_error_names_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError, match="bad.json"):
            load_model_file(path)


class TestSamplerConfigFiles:
    def test_unconstrained_round_trip(self, tmp_path):
        config = SamplerConfig(p0=0.05, r0=0.1, p1=0.07, r1=0.09, mode="unconstrained")
        path = tmp_path / "config.json"
        write_json(path, sampler_config_to_dict(config))
        assert load_sampler_config(path) == config

    def test_constrained_round_trip(self, tmp_path):
        config = SamplerConfig(
            p0=0.05, r0=0.1, p1=0.07, r1=0.09,
            mode="constrained", eps_b1=0.2, eps_b2=0.4, max_rejections=500,
        )
        path = tmp_path / "config.json"
        write_json(path, sampler_config_to_dict(config))
        assert load_sampler_config(path) == config

    def test_eps_required_for_constrained(self):
        with pytest.raises(ValidationError, match="eps"):
            sampler_config_from_dict(
                {"p0": 0.05, "r0": 0.1, "p1": 0.07, "r1": 0.09, "mode": "constrained"}
            )

    def test_eps_rejected_for_unconstrained(self):
        with pytest.raises(ValidationError, match="eps"):
            sampler_config_from_dict(
                {
                    "p0": 0.05, "r0": 0.1, "p1": 0.07, "r1": 0.09,
                    "mode": "unconstrained", "eps_b1": 0.2,
                }
            )

    def test_rejects_unknown_field(self):
        with pytest.raises(ValidationError, match="unknown field"):
            sampler_config_from_dict(
                {
                    "p0": 0.05, "r0": 0.1, "p1": 0.07, "r1": 0.09,
                    "mode": "unconstrained", "trials": 100,
                }
            )

    def test_rejects_non_integer_budget(self):
        with pytest.raises(ValidationError, match="max_rejections"):
            sampler_config_from_dict(
                {
                    "p0": 0.05, "r0": 0.1, "p1": 0.07, "r1": 0.09,
                    "mode": "constrained", "eps_b1": 0.2, "eps_b2": 0.2,
                    "max_rejections": 10.5,
                }
            )


class TestReportDicts:
    def test_gap_report_keys(self, m1):
        payload = gap_report_dict(compute_gaps(m1))
        assert set(payload) == {"G", "G_hat", "delta0", "delta1", "error"}
        assert payload["error"] == pytest.approx(0.001, abs=1e-12)

    def test_structure_keys(self, m1):
        payload = structure_params_dict(structure_params(m1))
        assert set(payload) == {
            "gamma_A", "gamma_B1", "gamma_B2", "eps_B1", "eps_B2", "g_star",
        }

    def test_bound_keys(self, m1):
        payload = bound_report_dict(bound_report(m1))
        assert set(payload) == {
            "bound_A", "bound_B1", "bound_B2",
            "bound_combined_stated", "bound_combined_proof", "best",
        }


@pytest.fixture(scope="module")
def result():
    config = SamplerConfig(
        p0=0.05, r0=0.1, p1=0.07, r1=0.09,
        mode="constrained", eps_b1=0.2, eps_b2=0.2,
    )
    return run_monte_carlo(config, n_trials=300, seed=42)


@pytest.fixture(scope="module")
def sweep_result():
    config = SamplerConfig(
        p0=0.05, r0=0.1, p1=0.07, r1=0.09,
        mode="constrained", eps_b1=0.2, eps_b2=0.2,
    )
    return sweep(config, "eps_b2", [0.0, 0.5, 1.0], n_trials=60, seed=7)


class TestResultFiles:
    def test_summary_round_trip(self, result, tmp_path):
        path = tmp_path / "summary.json"
        write_json(path, summary_dict(result))
        loaded = read_summary_json(path)
        assert loaded["n_trials"] == 300
        assert loaded["p95"] == result.p95
        assert loaded["seed"] == 42
        assert loaded["bounds"]["best"] == result.bounds.best

    def test_summary_rejects_extra_keys(self, result, tmp_path):
        payload = summary_dict(result)
        payload["extra"] = 1
        path = tmp_path / "summary.json"
        write_json(path, payload)
        with pytest.raises(ValidationError, match="unknown field"):
            read_summary_json(path)

    def test_errors_round_trip(self, result, tmp_path):
        path = tmp_path / "errors.csv"
        write_errors_csv(path, result.errors)
        back = read_errors_csv(path)
        assert np.array_equal(back, result.errors)

    def test_errors_header_checked(self, tmp_path):
        path = tmp_path / "errors.csv"
        path.write_text("value\n0.1\n")
        with pytest.raises(ValidationError, match="header"):
            read_errors_csv(path)

    def test_histogram_round_trip(self, result, tmp_path):
        path = tmp_path / "hist.csv"
        write_histogram_csv(path, result.histogram)
        assert read_histogram_csv(path) == result.histogram

    def test_histogram_contiguity_checked(self, tmp_path):
        path = tmp_path / "hist.csv"
        path.write_text("bin_lo,bin_hi,count\n0.0,0.5,3\n0.6,1.0,2\n")
        with pytest.raises(ValidationError, match="contiguous"):
            read_histogram_csv(path)

    def test_write_is_byte_identical(self, result, tmp_path):
        first = tmp_path / "one.csv"
        second = tmp_path / "two.csv"
        write_errors_csv(first, result.errors)
        write_errors_csv(second, result.errors)
        assert first.read_bytes() == second.read_bytes()

    def test_error_values_survive_exactly(self, tmp_path):
        # repr round-trips doubles exactly; the file must too
        values = [0.1 + 0.2, 1e-17, 0.07 - 0.05]
        path = tmp_path / "errors.csv"
        write_errors_csv(path, values)
        assert list(read_errors_csv(path)) == values


class TestSweepFiles:
    def test_round_trip(self, sweep_result, tmp_path):
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, sweep_result)
        rows = read_sweep_csv(path)
        assert len(rows) == 3
        for row, point in zip(rows, sweep_result.points):
            assert row["grid_value"] == point.grid_value
            assert row["p95"] == point.p95
            assert row["bound_a"] == point.bound_a
            assert row["bound_combined_stated"] == point.bound_combined_stated
            assert row["bound_combined_proof"] == point.bound_combined_proof

    def test_header_checked(self, tmp_path):
        path = tmp_path / "sweep.csv"
        path.write_text("grid,p95\n0.0,0.1\n")
        with pytest.raises(ValidationError, match="header"):
            read_sweep_csv(path)
