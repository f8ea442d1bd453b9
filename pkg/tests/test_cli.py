import csv
import dataclasses
import hashlib
import json
import os

import pytest

from fraclab.cli import (CUTOFF_CSV_COLUMNS, HARDY_SHELLS_CSV_COLUMNS, main)
from fraclab.config import (ConfigError, RunConfig, apply_overrides, from_ini,
                            to_ini, validate)
from fraclab.sobolev import SOBOLEV_CSV_COLUMNS


class TestConfigRoundTrip:
    def test_default_round_trips(self):
        cfg = RunConfig()
        assert from_ini(to_ini(cfg)) == cfg

    def test_nontrivial_round_trips(self):
        cfg = RunConfig(command="cutoff", domain="koch", level=6, s=0.1 + 0.2,
                        p=1.0, n_grid=(8, 16, 32), seed=11, R_loc=2.5,
                        phi_breaks=(0.5, 1.0), phi_values=(0.7, 1.3))
        back = from_ini(to_ini(cfg))
        assert back == cfg
        assert back.s == 0.1 + 0.2  # repr formatting keeps every bit

    def test_empty_tuples_round_trip(self):
        cfg = RunConfig(phi_breaks=(), n_grid=())
        assert from_ini(to_ini(cfg)) == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            from_ini("[dimension]\nsamplez = 10\n")

    def test_two_sections_rejected(self):
        with pytest.raises(ConfigError, match="exactly one"):
            from_ini("[dimension]\n[tube]\n")
        with pytest.raises(ConfigError, match="exactly one"):
            from_ini("# nothing\n")

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="unknown command section"):
            from_ini("[frobnicate]\ns = 0.5\n")

    def test_bad_literal_rejected(self):
        with pytest.raises(ConfigError, match="bad value"):
            from_ini("[dimension]\nlevel = seven\n")
        with pytest.raises(ConfigError, match="bad value"):
            from_ini("[dimension]\ns = nan\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError):
            from_ini("[dimension]\ns = 0.5\ns = 0.6\n")

    def test_case_sensitive_keys(self):
        cfg = from_ini("[reduction]\nR_loc = 3.5\nH = 0.5\n")
        assert cfg.R_loc == 3.5 and cfg.H == 0.5


class TestOverrides:
    def test_apply(self):
        cfg = apply_overrides(RunConfig(), {"s": "0.25", "n_grid": "4, 8"})
        assert cfg.s == 0.25 and cfg.n_grid == (4, 8)

    def test_command_not_overridable(self):
        with pytest.raises(ConfigError):
            apply_overrides(RunConfig(), {"command": "koch"})

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            apply_overrides(RunConfig(), {"bogus": "1"})

    def test_bad_literal(self):
        with pytest.raises(ConfigError, match="bad value"):
            apply_overrides(RunConfig(), {"level": "x"})


class TestValidate:
    def test_default_is_clean(self):
        assert validate(RunConfig()) == []

    def test_s_range(self):
        msgs = validate(dataclasses.replace(RunConfig(), s=1.5))
        assert msgs == ["s=1.5 outside the open interval (0, 1)"]

    def test_resolution_rule_message(self):
        cfg = RunConfig(command="cutoff", domain="koch", level=3)
        msgs = validate(cfg)
        assert msgs == [
            "resolution rule violated: 3^-3=0.037 exceeds (3/256)/10=0.00117;"
            " the level-3 prefractal cannot resolve the 3/256 tube"]

    def test_koch_command_resolution_rule(self):
        cfg = RunConfig(command="koch", domain="koch", level=7, n_grid=(8, 2048))
        msgs = validate(cfg)
        assert any("resolution rule violated" in m for m in msgs)
        assert not validate(dataclasses.replace(cfg, n_grid=(8, 256)))

    def test_tube_window(self):
        msgs = validate(RunConfig(command="tube", r_min=0.2, r_max=0.1))
        assert any("0 < r_min < r_max" in m for m in msgs), msgs
        cfg2 = RunConfig(command="tube", domain="koch", level=5, r_min=1e-3)
        assert any("below the" in m for m in validate(cfg2))

    def test_violations_accumulate(self):
        cfg = RunConfig(command="tube", s=2.0, p=0.5, seed=-1, n_r=2)
        assert len(validate(cfg)) == 4

    def test_scaling_H(self):
        assert any("H=" in m for m in validate(RunConfig(command="scaling", H=1.5)))

    def test_unknown_command_short_circuits(self):
        msgs = validate(dataclasses.replace(RunConfig(), command="bogus", s=5.0))
        assert len(msgs) == 1 and "command" in msgs[0]

    def test_tabulated_phi(self):
        cfg = RunConfig(command="scaling", phi_kind="tabulated")
        assert any("tabulated phi" in m for m in validate(cfg))
        ok = dataclasses.replace(cfg, phi_breaks=(0.5, 1.0), phi_values=(1.0, 2.0))
        assert validate(ok) == []


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def _tree_bytes(root):
    out = {}
    for base, _, names in os.walk(root):
        for name in names:
            p = os.path.join(base, name)
            with open(p, "rb") as fh:
                out[os.path.relpath(p, root)] = fh.read()
    return out


class TestMain:
    def test_seminorm_run_exit0(self, tmp_path, capsys):
        rc = main(["seminorm", "--domain", "square", "--field", "coord_x1",
                   "--samples", "4000", "--output_dir", str(tmp_path / "o")])
        assert rc == 0
        line = capsys.readouterr().out.strip()
        assert line.endswith("summary.json")
        with open(line, encoding="utf-8") as fh:
            summary = json.load(fh)
        assert summary["command"] == "seminorm"
        assert summary["seed"] == 0 and summary["samples"] == 4000
        assert summary["value_p"] > 0
        rows = _read_rows(os.path.join(os.path.dirname(line), "sobolev.csv"))
        assert rows[0] == SOBOLEV_CSV_COLUMNS

    def test_validate_only_ok(self, capsys):
        assert main(["dimension", "--validate-only"]) == 0
        assert capsys.readouterr().out.strip() == "ok"

    def test_validate_only_violation(self, capsys):
        rc = main(["cutoff", "--domain", "koch", "--level", "3", "--validate-only"])
        assert rc == 3
        assert "violation: resolution rule violated" in capsys.readouterr().out

    def test_bad_value_exit3(self, tmp_path, capsys):
        rc = main(["seminorm", "--s", "1.2", "--output_dir", str(tmp_path)])
        assert rc == 3
        assert "config error:" in capsys.readouterr().err

    def test_unknown_flag_exit3(self, capsys):
        assert main(["dimension", "--frobnicate", "1"]) == 3

    def test_unparseable_flag_exit3(self, capsys):
        rc = main(["dimension", "--level", "seven"])
        assert rc == 3
        assert "bad value" in capsys.readouterr().err

    def test_missing_config_exit3(self, capsys):
        rc = main(["dimension", "--config", "/nonexistent/x.ini"])
        assert rc == 3
        assert "cannot read config file" in capsys.readouterr().err

    def test_section_command_mismatch_exit3(self, tmp_path, capsys):
        p = tmp_path / "c.ini"
        p.write_text("[cutoff]\ndomain = square\n", encoding="utf-8")
        rc = main(["koch", "--config", str(p)])
        assert rc == 3
        assert "does not match" in capsys.readouterr().err

    def test_estimator_failure_exit2(self, tmp_path, capsys):
        rc = main(["tube", "--domain", "disk", "--r_min", "1e-9", "--r_max",
                   "1e-8", "--samples", "1000", "--output_dir", str(tmp_path)])
        assert rc == 2
        assert "estimator error:" in capsys.readouterr().err

    def test_config_file_plus_flag_precedence(self, tmp_path, capsys):
        p = tmp_path / "c.ini"
        p.write_text("[seminorm]\ndomain = square\nfield = coord_x1\ns = 0.4\n"
                     f"samples = 4000\noutput_dir = {tmp_path / 'o'}\n",
                     encoding="utf-8")
        rc = main(["seminorm", "--config", str(p), "--s", "0.6"])
        assert rc == 0
        line = capsys.readouterr().out.strip()
        with open(line, encoding="utf-8") as fh:
            assert json.load(fh)["s"] == 0.6

    def test_hardy_artifacts_and_manifest(self, tmp_path, capsys):
        rc = main(["hardy", "--domain", "disk", "--s", "0.5", "--p", "1",
                   "--samples", "8000", "--output_dir", str(tmp_path / "o")])
        assert rc == 0
        out = os.path.dirname(capsys.readouterr().out.strip())
        shells = _read_rows(os.path.join(out, "hardy_shells.csv"))
        assert shells[0] == HARDY_SHELLS_CSV_COLUMNS
        assert len(shells) > 2
        with open(os.path.join(out, "manifest.json"), encoding="utf-8") as fh:
            man = json.load(fh)
        assert man["command"] == "hardy" and man["seed"] == 0
        names = [f["name"] for f in man["files"]]
        assert "summary.json" in names and "manifest.json" not in names
        for entry in man["files"]:
            with open(os.path.join(out, entry["name"]), "rb") as fh:
                blob = fh.read()
            assert hashlib.sha256(blob).hexdigest() == entry["sha256"]
            assert len(blob) == entry["bytes"]

    def test_cutoff_csv_schema(self, tmp_path, capsys):
        rc = main(["cutoff", "--domain", "square", "--s", "0.3", "--p", "1",
                   "--n_grid", "4,8", "--samples", "4000",
                   "--output_dir", str(tmp_path / "o")])
        assert rc == 0
        out = os.path.dirname(capsys.readouterr().out.strip())
        rows = _read_rows(os.path.join(out, "cutoff.csv"))
        assert rows[0] == CUTOFF_CSV_COLUMNS
        assert len(rows) == 3

    def test_rerun_byte_identical(self, tmp_path, capsys):
        args = ["hardy", "--domain", "disk", "--samples", "6000", "--p", "1"]
        assert main(args + ["--output_dir", str(tmp_path / "a")]) == 0
        assert main(args + ["--output_dir", str(tmp_path / "b")]) == 0
        capsys.readouterr()
        a = _tree_bytes(tmp_path / "a")
        b = _tree_bytes(tmp_path / "b")
        assert a == b
        assert len(a) == 4  # summary, manifest, sobolev.csv, hardy_shells.csv

    def test_threads_env_does_not_change_bytes(self, tmp_path, capsys, monkeypatch):
        args = ["seminorm", "--domain", "disk", "--samples", "5000"]
        monkeypatch.delenv("FRACLAB_THREADS", raising=False)
        assert main(args + ["--output_dir", str(tmp_path / "a")]) == 0
        monkeypatch.setenv("FRACLAB_THREADS", "4")
        assert main(args + ["--output_dir", str(tmp_path / "b")]) == 0
        capsys.readouterr()
        assert _tree_bytes(tmp_path / "a") == _tree_bytes(tmp_path / "b")

    def test_scaling_summary(self, tmp_path, capsys):
        rc = main(["scaling", "--phi_exponent", "0.5", "--eta", "0.3",
                   "--output_dir", str(tmp_path / "o")])
        assert rc == 0
        with open(capsys.readouterr().out.strip(), encoding="utf-8") as fh:
            summary = json.load(fh)
        assert summary["wlsc"]["pass"] is True   # eta 0.3 <= exponent 0.5
        assert summary["wusc"]["pass"] is False  # needs eta >= exponent
        assert summary["psi_lower_asymptotic"]["pass"] is True
