import json
import subprocess
import sys

import pytest
import yaml

from cms import ConfigError, InputError
from cms.cli import main, run
from cms.config import DEFAULTS, build_system, load_config, resolve_config
from cms.reports import payload_bytes

CHAIN_DOC = {
    "system": {"family": "finite_chain", "transition": [[0.9, 0.1], [0.5, 0.5]]},
    "run": {"seed": 4242},
    "chain": {"n_samples": 20_000, "burn_in": 2_000},
    "entropy": {"n_max": 4, "stream_length": 200_000},
    "coding": {"window": 30, "n_points": 2_000, "stride": 5},
    "lemma2": {"past_length": 1, "n_windows": 20_000},
    "validate": {"n_samples": 2_000},
    "contraction": {"n_pairs": 5_000},
}

BERN_DOC = {
    "system": {"family": "bernoulli_ifs", "slopes": [0.5, 0.5],
               "offsets": [0.0, 0.5], "probabilities": [0.5, 0.5]},
    "run": {"seed": 7},
    "chain": {"n_samples": 20_000, "burn_in": 1_000},
    "entropy": {"n_max": 4, "stream_length": 200_000},
    "coding": {"window": 60, "n_points": 2_000, "stride": 5},
    "lemma2": {"past_length": 60, "n_windows": 20_000, "bins_per_axis": 8,
               "min_bin_count": 500},
    "validate": {"n_samples": 2_000},
    "contraction": {"n_pairs": 5_000},
}


class TestConfigResolution:
    def test_defaults_filled(self):
        cfg = resolve_config({"system": {"family": "planar_affine_trig"},
                              "run": {"seed": 1}})
        for section, defaults in DEFAULTS.items():
            for key, value in defaults.items():
                if key != "seed":
                    assert key in cfg[section]
        assert cfg["entropy"]["n_max"] == 5

    def test_seed_required(self):
        with pytest.raises(ConfigError, match="seed"):
            resolve_config({"system": {"family": "planar_affine_trig"}})

    def test_seed_override(self):
        cfg = resolve_config({"system": {"family": "planar_affine_trig"}}, seed=9)
        assert cfg["run"]["seed"] == 9

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="unknown config section"):
            resolve_config({"system": {"family": "x"}, "run": {"seed": 1},
                            "extra": {}})

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError, match="entropy.n_maxx"):
            resolve_config({"system": {"family": "x"}, "run": {"seed": 1},
                            "entropy": {"n_maxx": 3}})

    def test_bad_units(self):
        with pytest.raises(ConfigError, match="units"):
            resolve_config({"system": {"family": "x"}, "run": {"seed": 1, "units": "shannons"}})

    def test_bad_int_field(self):
        with pytest.raises(ConfigError, match="chain.n_samples"):
            resolve_config({"system": {"family": "x"}, "run": {"seed": 1},
                            "chain": {"n_samples": -3}})

    def test_idempotent(self):
        cfg = resolve_config(CHAIN_DOC)
        assert resolve_config(cfg) == cfg

    def test_build_system_families(self):
        assert build_system(resolve_config(CHAIN_DOC)).family == "finite_chain"
        assert build_system(resolve_config(BERN_DOC)).family == "bernoulli_ifs"
        doc = {"system": {"family": "planar_affine_trig",
                          "overrides": {"2": {"by": 0.0}}},
               "run": {"seed": 1}}
        system = build_system(resolve_config(doc))
        assert system.params.by[1] == 0.0

    def test_bad_family_params(self):
        with pytest.raises(ConfigError):
            build_system(resolve_config({"system": {"family": "finite_chain",
                                                    "wrong": 1},
                                         "run": {"seed": 1}}))


class TestRun:
    def test_entropy_verdict_and_values(self):
        report, code = run(resolve_config(CHAIN_DOC), "entropy")
        assert code == 0 and report["passed"]
        block = report["results"]["block_rate"]
        assert abs(block["value"] - 0.386427) < 0.02
        assert report["results"]["agreement"]["passed"]

    def test_contraction_command(self):
        report, code = run(resolve_config(CHAIN_DOC), "contraction")
        assert code == 0
        assert report["results"]["max_ratio"] == 0.0

    def test_invariant_command(self):
        report, code = run(resolve_config(CHAIN_DOC), "invariant")
        assert code == 0
        masses = report["results"]["part_masses"]
        assert abs(masses[0] - 5 / 6) < 0.02

    def test_coding_command(self):
        report, code = run(resolve_config(CHAIN_DOC), "coding")
        assert code == 0 and report["results"]["part_mass_check"]["passed"]

    def test_lemma2_command(self):
        report, code = run(resolve_config(CHAIN_DOC), "lemma2")
        assert code == 0 and report["results"]["passed"]

    def test_report_command_collects_all(self):
        report, code = run(resolve_config(BERN_DOC), "report")
        assert code == 0 and report["passed"]
        for section in ("validation", "contraction", "invariant", "entropy",
                        "coding", "lemma2"):
            assert section in report["results"]

    def test_payload_determinism(self):
        a, _ = run(resolve_config(CHAIN_DOC), "entropy")
        b, _ = run(resolve_config(CHAIN_DOC), "entropy")
        a.pop("_side", None)
        b.pop("_side", None)
        assert payload_bytes(a) == payload_bytes(b)

    def test_rerun_from_config_echo(self):
        a, _ = run(resolve_config(CHAIN_DOC), "invariant")
        a.pop("_side", None)
        b, _ = run(resolve_config(a["config"]), "invariant")
        b.pop("_side", None)
        assert payload_bytes(a) == payload_bytes(b)

    def test_invalid_system_gates_estimates(self):
        doc = {"system": {"family": "planar_affine_trig",
                          "overrides": {2: {"by": 0.0}}},
               "run": {"seed": 1}, "validate": {"n_samples": 2_000}}
        report, code = run(resolve_config(doc), "entropy")
        assert code == 1
        assert "error" in report["results"]
        assert "formula" not in report["results"]

    def test_report_on_invalid_system_has_only_validation(self):
        doc = {"system": {"family": "planar_affine_trig",
                          "overrides": {2: {"by": 0.0}}},
               "run": {"seed": 1}, "validate": {"n_samples": 2_000}}
        report, code = run(resolve_config(doc), "report")
        assert code == 1
        assert set(report["results"]) == {"validation_gate", "error"}

    def test_units_flag_propagates(self):
        doc = dict(CHAIN_DOC)
        cfg = resolve_config(doc, units="bits")
        report, _ = run(cfg, "entropy")
        assert report["results"]["formula"]["units"] == "bits"

    def test_unknown_command(self):
        with pytest.raises(InputError):
            run(resolve_config(CHAIN_DOC), "frobnicate")


class TestMainEntry:
    def _write(self, tmp_path, doc):
        path = tmp_path / "config.yaml"
        path.write_text(yaml.safe_dump(doc))
        return str(path)

    def test_exit_zero_and_outputs(self, tmp_path, capsys):
        cfg = self._write(tmp_path, CHAIN_DOC)
        out = tmp_path / "out"
        code = main(["entropy", "--config", cfg, "--out", str(out)])
        assert code == 0
        assert (out / "entropy_report.json").exists()
        assert (out / "block_entropy.csv").exists()
        data = json.loads((out / "entropy_report.json").read_text())
        assert data["command"] == "entropy"
        printed = capsys.readouterr().out
        assert json.loads(printed)["command"] == "entropy"

    def test_invariant_csv_sidecar(self, tmp_path, capsys):
        cfg = self._write(tmp_path, CHAIN_DOC)
        out = tmp_path / "out"
        assert main(["invariant", "--config", cfg, "--out", str(out)]) == 0
        assert (out / "invariant_measure.csv").exists()
        assert (out / "invariant_measure.csv.provenance.json").exists()

    def test_lemma2_details_csv(self, tmp_path, capsys):
        cfg = self._write(tmp_path, CHAIN_DOC)
        out = tmp_path / "out"
        assert main(["lemma2", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "lemma2_bins.csv").read_text().splitlines()
        assert lines[0].startswith("bin,vertex,")
        assert len(lines) > 1

    def test_missing_seed_is_input_error(self, tmp_path, capsys):
        cfg = self._write(tmp_path, {"system": {"family": "finite_chain",
                                                "transition": [[1.0]]}})
        assert main(["validate", "--config", cfg]) == 2

    def test_missing_file_is_input_error(self, capsys):
        assert main(["validate", "--config", "/no/such/file.yaml"]) == 2

    def test_system_shortcut_requires_no_params(self, capsys):
        code = main(["validate", "--system", "bernoulli_ifs", "--seed", "3"])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["config"]["system"]["family"] == "bernoulli_ifs"

    def test_console_script_installed(self):
        proc = subprocess.run([sys.executable, "-m", "cms.cli", "validate",
                               "--system", "finite_chain", "--seed", "1"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["passed"]
