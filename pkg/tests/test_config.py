"""Configuration parsing: strict keys, validated values, sweep expansion."""

import pytest

from iescreen.config import ConfigError, parse_config


def base_doc(**overrides):
    doc = {
        "scenario": {"total_n": 100000, "p0": 0.02, "rr": 0.9, "p_m": 0.05,
                     "rr_neg": 1.0, "rr_pos": 0.8666666666666667},
    }
    doc.update(overrides)
    return doc


class TestSchema:
    def test_minimal_document(self):
        parsed = parse_config(base_doc())
        assert len(parsed.cells) == 1
        cfg = parsed.cells[0]
        assert cfg.scenario.control_fraction == 0.5
        assert cfg.reps == 10_000
        assert cfg.alpha == 0.05
        assert parsed.output.format == "csv"

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(base_doc(scenrio={}))

    def test_unknown_scenario_key(self):
        doc = base_doc()
        doc["scenario"]["rr_posi"] = 0.8
        with pytest.raises(ConfigError, match="rr_posi"):
            parse_config(doc)

    def test_unknown_mechanism_key(self):
        doc = base_doc(mechanisms={"sampling": {"f_event": 1.0, "f_nonevent": 0.5,
                                                "f_other": 0.1}})
        with pytest.raises(ConfigError, match="f_other"):
            parse_config(doc)

    def test_missing_scenario_field(self):
        doc = base_doc()
        del doc["scenario"]["rr_pos"]
        with pytest.raises(ConfigError, match="rr_pos"):
            parse_config(doc)

    def test_probability_validated(self):
        doc = base_doc(mechanisms={"sampling": {"f_event": 1.0, "f_nonevent": 1.5}})
        with pytest.raises(ConfigError, match="probability"):
            parse_config(doc)

    def test_scenario_value_validated(self):
        doc = base_doc()
        doc["scenario"]["p0"] = 1.2
        with pytest.raises(ConfigError):
            parse_config(doc)

    def test_boolean_not_a_number(self):
        doc = base_doc()
        doc["scenario"]["rr"] = True
        with pytest.raises(ConfigError, match="boolean"):
            parse_config(doc)

    def test_sim_section(self):
        parsed = parse_config(base_doc(sim={"reps": 500, "seed": 7, "alpha": 0.01}))
        cfg = parsed.cells[0]
        assert (cfg.reps, cfg.seed, cfg.alpha) == (500, 7, 0.01)

    def test_bad_sim_values(self):
        with pytest.raises(ConfigError, match="reps"):
            parse_config(base_doc(sim={"reps": 0}))
        with pytest.raises(ConfigError, match="seed"):
            parse_config(base_doc(sim={"seed": -1}))
        with pytest.raises(ConfigError, match="alpha"):
            parse_config(base_doc(sim={"alpha": 2}))

    def test_output_section(self):
        parsed = parse_config(base_doc(output={"path": "out.json", "format": "json"}))
        assert parsed.output.path == "out.json"
        assert parsed.output.format == "json"
        with pytest.raises(ConfigError, match="format"):
            parse_config(base_doc(output={"format": "xlsx"}))


class TestMechanisms:
    def test_all_three_layers(self):
        doc = base_doc(mechanisms={
            "sampling": {"f_event": 0.95, "f_nonevent": 0.5},
            "degradation": {"loss_event": 0.1, "loss_nonevent": 0.2,
                            "retest_correction": True},
            "noncompliance": {"screen_event": 0.3, "screen_nonevent": 0.15,
                              "control_event": 0.15, "control_nonevent": 0.3,
                              "correction": True},
        })
        cfg = parse_config(doc).cells[0]
        assert cfg.sampling.strata[0].fraction == 0.95
        assert cfg.degradation.loss_nonevent == 0.2
        assert cfg.retest_correction is True
        assert cfg.noncompliance.control_nonevent == 0.3
        assert cfg.compliance_correction is True

    def test_correction_flag_must_be_boolean(self):
        doc = base_doc(mechanisms={"degradation": {"loss_event": 0.1,
                                                   "loss_nonevent": 0.2,
                                                   "retest_correction": "yes"}})
        with pytest.raises(ConfigError, match="boolean"):
            parse_config(doc)


class TestSweeps:
    def test_single_field_sweep(self):
        doc = base_doc(mechanisms={"sampling": {"f_event": 1.0,
                                                "f_nonevent": [0.1, 0.5, 1.0]}})
        parsed = parse_config(doc)
        assert [c.sampling.strata[1].fraction for c in parsed.cells] == [0.1, 0.5, 1.0]

    def test_cartesian_product_deterministic_order(self):
        doc = base_doc()
        doc["scenario"]["total_n"] = [50000, 100000]
        doc["scenario"]["rr_pos"] = [0.7, 0.8]
        cells = parse_config(doc).cells
        combos = [(c.scenario.rr_pos, c.scenario.total_n) for c in cells]
        # sweep keys expand sorted by (section, field): rr_pos varies slower
        assert combos == [(0.7, 50000.0), (0.7, 100000.0),
                          (0.8, 50000.0), (0.8, 100000.0)]

    def test_non_sweepable_field(self):
        with pytest.raises(ConfigError, match="integer"):
            parse_config(base_doc(sim={"reps": [10, 20]}))

    def test_empty_sweep_rejected(self):
        doc = base_doc()
        doc["scenario"]["rr_pos"] = []
        with pytest.raises(ConfigError, match="empty"):
            parse_config(doc)

    def test_infeasible_cell_parses_then_fails_at_run(self):
        # feasibility is a run-time property, not a parse-time one
        from iescreen import InfeasibleScenarioError, run_study

        doc = base_doc()
        doc["scenario"]["p_m"] = 0.5
        doc["scenario"]["rr_pos"] = 2.5  # pushes a conditional rate below zero
        cells = parse_config(doc).cells
        with pytest.raises(InfeasibleScenarioError):
            run_study(cells[0])
