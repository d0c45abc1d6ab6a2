import json
import os

import numpy as np
import pytest

from levy_mkv.harness.cli import main as cli_main
from levy_mkv.harness.config import ConfigError, parse_config, load_config
from levy_mkv.harness.results import ResultRecord, constants_hash
from levy_mkv.harness.svg import line_plot


def small_raw(**overrides):
    raw = {
        "seed": 7,
        "model": {"gamma": 2.0, "drift": "linear", "interaction": "sine",
                  "eta": 0.05},
        "levy": {"beta": 0.5, "c0": 1.0, "kappa": 1.0, "trunc_delta": 1e-3},
        "simulation": {"t_end": 1.0, "record_times": [0.0, 0.5, 1.0], "M": 128,
                       "replicas": 16, "N_list": [8, 16], "chaos_seeds": 2,
                       "law_refine particles": None},
        "initial": {"first": {"kind": "point", "center": [0.0, 0.0]},
                    "second": {"kind": "point", "center": [1.0, 0.0]}},
        "output": {"dir": "out"},
    }
    raw["simulation"].pop("law_refine particles")
    for key, val in overrides.items():
        section, _, name = key.partition(".")
        if name:
            raw.setdefault(section, {})[name] = val
        else:
            raw[section] = val
    return raw


def write_config(tmp_path, raw):
    lines = [f"seed = {raw['seed']}"]
    for section in ("model", "levy", "metrics", "simulation", "output"):
        if section not in raw:
            continue
        lines.append(f"[{section}]")
        for k, v in raw[section].items():
            if isinstance(v, str):
                lines.append(f'{k} = "{v}"')
            elif isinstance(v, bool):
                lines.append(f"{k} = {str(v).lower()}")
            elif isinstance(v, (list, tuple)):
                lines.append(f"{k} = {list(v)}")
            else:
                lines.append(f"{k} = {v}")
    if "initial" in raw:
        for sub in ("first", "second"):
            if sub in raw["initial"]:
                d = raw["initial"][sub]
                inner = ", ".join(
                    f'{k} = "{v}"' if isinstance(v, str) else f"{k} = {list(v)}"
                    if isinstance(v, (list, tuple)) else f"{k} = {v}"
                    for k, v in d.items())
                lines.append(f"[initial.{sub}]")
                for k, v in d.items():
                    if isinstance(v, str):
                        lines.append(f'{k} = "{v}"')
                    elif isinstance(v, (list, tuple)):
                        lines.append(f"{k} = {list(v)}")
                    else:
                        lines.append(f"{k} = {v}")
    path = tmp_path / "run.toml"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


class TestConfig:
    def test_parse_happy_path(self):
        cfg = parse_config(small_raw())
        assert cfg.model.gamma == 2.0
        assert cfg.levy.beta == 0.5
        assert cfg.params.replicas == 16
        assert cfg.config_hash() == parse_config(small_raw()).config_hash()

    def test_unknown_key_rejected(self):
        raw = small_raw()
        raw["levy"]["mystery"] = 1.0
        with pytest.raises(ConfigError):
            parse_config(raw)

    def test_unknown_section_rejected(self):
        raw = small_raw()
        raw["extra"] = {}
        with pytest.raises(ConfigError):
            parse_config(raw)

    def test_bad_drift_name(self):
        with pytest.raises(ConfigError):
            parse_config(small_raw(**{"model.drift": "quartic"}))

    def test_k0_guard(self):
        with pytest.raises(ConfigError):
            parse_config(small_raw(metrics={"k0": 3.0}))

    def test_seed_override(self):
        cfg = parse_config(small_raw(), seed_override=99)
        assert cfg.seed == 99

    def test_load_from_toml_file(self, tmp_path):
        path = write_config(tmp_path, small_raw())
        cfg = load_config(path)
        assert cfg.model.interaction.eta == 0.05
        assert cfg.initial_second.center == (1.0, 0.0)

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/run.toml")


class TestResults:
    def test_csv_deterministic_and_provenance(self):
        rec = ResultRecord("demo", "abc123", "def456")
        rec.add(0.5, "E_rho", 1.2345, 0.01, 100)
        rec.add(1.0, "E_rho", 1.1, 0.01, 100, N=16)
        text = rec.csv_text()
        assert text.startswith("# experiment=demo config=abc123 constants=def456")
        assert "t,stat,value,stderr,n,N" in text
        assert rec.csv_text() == text  # stable

    def test_json_no_nan(self):
        rec = ResultRecord("demo", "a", "b")
        rec.add(0.0, "x", 1.0, 0.0, 1)
        payload = json.loads(rec.json_text())
        assert payload["rows"][0]["value"] == 1.0

    def test_write_files(self, tmp_path):
        rec = ResultRecord("demo", "a", "b")
        rec.add(0.0, "x", 1.0, 0.0, 1)
        out = rec.write(str(tmp_path), formats=("csv", "json"))
        assert os.path.exists(out["csv"])
        assert os.path.exists(out["json"])

    def test_constants_hash_stable(self, ref_constants):
        assert constants_hash(ref_constants.to_dict()) == \
            constants_hash(ref_constants.to_dict())


class TestSVG:
    def test_linear_plot(self, tmp_path):
        path = str(tmp_path / "p.svg")
        line_plot(path, [0, 1, 2], {"y": [1.0, 0.5, 0.25]}, "t", "x", "y",
                  provenance="config=xyz")
        text = open(path).read()
        assert "<svg" in text and "polyline" in text and "config=xyz" in text

    def test_log_plot_with_band_and_reference(self, tmp_path):
        path = str(tmp_path / "p.svg")
        line_plot(path, [1, 10, 100], {"y": [1.0, 0.3, 0.1]}, "t", "N", "v",
                  logx=True, logy=True,
                  bands={"y": ([0.9, 0.25, 0.08], [1.1, 0.35, 0.12])},
                  reference={"ref": [1.0, 0.32, 0.1]})
        text = open(path).read()
        assert "polygon" in text and "stroke-dasharray" in text


class TestCLI:
    def test_config_error_exit_2(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("this is not { toml\n")
        rc = cli_main(["constants", "--config", str(bad)])
        assert rc == 2

    def test_unknown_key_exit_2(self, tmp_path):
        path = write_config(tmp_path, small_raw())
        with open(path, "a") as fh:
            fh.write("[levy]\n")  # duplicate section: TOML parse error
        rc = cli_main(["constants", "--config", path])
        assert rc == 2

    def test_hh_violation_exit_3(self, tmp_path, capsys):
        raw = small_raw(**{"model.gamma": 0.5})  # L_b^2/gamma^2 = 4 >= 3/4
        path = write_config(tmp_path, raw)
        rc = cli_main(["constants", "--config", path,
                       "--out", str(tmp_path / "o")])
        assert rc == 3

    def test_constants_happy_path(self, tmp_path, capsys):
        path = write_config(tmp_path, small_raw())
        rc = cli_main(["constants", "--config", path,
                       "--out", str(tmp_path / "o")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "tau" in out and "0.125" in out
        report = json.loads((tmp_path / "o" / "constants" / "report.json").read_text())
        assert report["constants"]["alpha"] == 0.5
        assert report["constants"]["script_R"] == pytest.approx(3.0)

    def test_contraction_end_to_end(self, tmp_path):
        raw = small_raw()
        raw["simulation"]["replicas"] = 12
        raw["simulation"]["M"] = 128
        path = write_config(tmp_path, raw)
        rc = cli_main(["contraction", "--config", path,
                       "--out", str(tmp_path / "o")])
        assert rc == 0
        base = tmp_path / "o" / "contraction"
        assert (base / "results.csv").exists()
        assert (base / "report.json").exists()
        assert (base / "plot.svg").exists()

    def test_csv_bytes_reproducible(self, tmp_path):
        raw = small_raw()
        raw["simulation"]["replicas"] = 8
        path = write_config(tmp_path, raw)
        rc1 = cli_main(["contraction", "--config", path,
                        "--out", str(tmp_path / "a")])
        rc2 = cli_main(["contraction", "--config", path,
                        "--out", str(tmp_path / "b")])
        assert rc1 == rc2 == 0
        a = (tmp_path / "a" / "contraction" / "results.csv").read_bytes()
        b = (tmp_path / "b" / "contraction" / "results.csv").read_bytes()
        assert a == b

    def test_worker_count_invariance(self, tmp_path):
        raw = small_raw()
        raw["simulation"]["replicas"] = 8
        path = write_config(tmp_path, raw)
        cli_main(["contraction", "--config", path, "--out", str(tmp_path / "a"),
                  "--workers", "1"])
        cli_main(["contraction", "--config", path, "--out", str(tmp_path / "b"),
                  "--workers", "2"])
        a = (tmp_path / "a" / "contraction" / "results.csv").read_bytes()
        b = (tmp_path / "b" / "contraction" / "results.csv").read_bytes()
        assert a == b

    def test_check_gate_exit_5(self, tmp_path):
        # a deliberately under-resolved chaos run lands outside the slope
        # band; --check must turn that into exit code 5
        raw = small_raw()
        raw["simulation"]["N_list"] = [8, 16]
        raw["simulation"]["chaos_seeds"] = 3
        raw["simulation"]["law_refine_particles"] = 256
        raw["simulation"]["law_refine_passes"] = 1
        path = write_config(tmp_path, raw)
        rc = cli_main(["chaos", "--config", path, "--out", str(tmp_path / "o"),
                       "--check"])
        assert rc == 5

    def test_zero_interaction_chaos_exact(self, tmp_path):
        raw = small_raw(**{"model.interaction": "zero", "model.eta": 0.0})
        path = write_config(tmp_path, raw)
        rc = cli_main(["chaos", "--config", path, "--out", str(tmp_path / "o"),
                       "--check"])
        assert rc == 0
        report = json.loads((tmp_path / "o" / "chaos" / "report.json").read_text())
        assert report["exact_zero_case"] is True
        assert report["slope"] is None

    def test_moments_cli_small(self, tmp_path):
        raw = small_raw()
        raw["simulation"]["law_refine_particles"] = 512
        raw["simulation"]["law_refine_passes"] = 1
        path = write_config(tmp_path, raw)
        rc = cli_main(["moments", "--config", path, "--out", str(tmp_path / "o")])
        assert rc == 0
        report = json.loads((tmp_path / "o" / "moments" / "report.json").read_text())
        assert report["C3"] > 0
        assert report["C3_violations"] == []

    def test_fidelity_cli_small(self, tmp_path):
        raw = small_raw()
        raw["simulation"]["record_times"] = [0.5, 1.0]
        raw["simulation"]["replicas"] = 400
        path = write_config(tmp_path, raw)
        rc = cli_main(["fidelity", "--config", path, "--out", str(tmp_path / "o")])
        assert rc == 0
        report = json.loads((tmp_path / "o" / "fidelity" / "report.json").read_text())
        stats = {row["stat"] for row in report["rows"]}
        assert any(s.startswith("coupled_KS_") for s in stats)
        assert any(s.startswith("mutated_KS_") for s in stats)

    def test_fidelity_zero_rate_all_pass(self, tmp_path):
        # no jumps at all: both simulators are the same deterministic flow,
        # every KS statistic is zero
        raw = small_raw(**{"levy.trunc_delta": 1.0})
        raw["simulation"]["record_times"] = [0.5, 1.0]
        raw["simulation"]["replicas"] = 50
        path = write_config(tmp_path, raw)
        # no --check: the mutation battery is vacuous without jumps
        rc = cli_main(["fidelity", "--config", path, "--out", str(tmp_path / "o")])
        assert rc == 0
        report = json.loads((tmp_path / "o" / "fidelity" / "report.json").read_text())
        coupled = [row for row in report["rows"]
                   if row["stat"].startswith("coupled_KS_")]
        assert coupled and all(row["value"] == 0.0 for row in coupled)
