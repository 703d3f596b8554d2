import json
import subprocess
import sys

import pytest

from lindqfi.cli import csv_text, derive_seed, echo_text, load_config_text, main, parse_config, validate
from lindqfi.errors import ConfigError


def _write(tmp_path, obj, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


def test_minimal_qfi_defaults(tmp_path):
    cfg = parse_config(_write(tmp_path, {"subcommand": "qfi", "params": {"scenario": "dephasing"}}))
    assert cfg.params["steps"] == 200 and cfg.params["t"] == 0.3
    assert '"steps": 200' in echo_text(cfg) and '"t": 0.3' in echo_text(cfg)


def test_unknown_key_named(tmp_path):
    path = _write(tmp_path, {"subcommand": "qfi", "params": {"gamma_typo": 1.0}})
    with pytest.raises(ConfigError, match="gamma_typo"):
        parse_config(path)
    with pytest.raises(ConfigError, match="colour"):
        validate({"subcommand": "qfi", "colour": 1})


@pytest.mark.parametrize("sub", ["qfi", "rpm", "scaling", "pauli", "imaging", "uhlmann", "oracle-check"])
def test_echo_round_trip(sub):
    cfg = parse_config(subcommand=sub)
    again = validate(json.loads(echo_text(cfg)))
    assert again == cfg and echo_text(again) == echo_text(cfg)


def test_scenario_specific_defaults():
    cfg = parse_config(subcommand="qfi", param_overrides={"scenario": "collective-spin"})
    assert cfg.params["N"] == 3 and "probe" in cfg.params
    cfg = parse_config(subcommand="scaling", param_overrides={"family": "tensor-norm", "k": 3})
    assert cfg.params["reference"] == 6.0 and cfg.params["tolerance"] == pytest.approx(0.6)


def test_type_errors_and_line_diagnostics(tmp_path):
    with pytest.raises(ConfigError, match="steps"):
        parse_config(subcommand="qfi", param_overrides={"steps": 2.5})
    with pytest.raises(ConfigError, match="format"):
        validate({"subcommand": "qfi", "format": "xml"})
    with pytest.raises(ConfigError, match=":2:"):
        load_config_text('{"subcommand": "qfi",\n "seed": }')
    with pytest.raises(ConfigError, match="does not match"):
        parse_config(_write(tmp_path, {"subcommand": "rpm"}), subcommand="qfi")
    with pytest.raises(ConfigError, match="not found"):
        parse_config(str(tmp_path / "missing.json"))


def test_flags_override_file(tmp_path):
    path = _write(tmp_path, {"subcommand": "rpm", "seed": 3, "params": {"trials": 10}})
    cfg = parse_config(path, "rpm", {"seed": 9}, {"trials": 20})
    assert cfg.seed == 9 and cfg.params["trials"] == 20


def test_derived_seeds_stable():
    assert derive_seed(0, "rpm") == derive_seed(0, "rpm")
    assert derive_seed(0, "rpm") != derive_seed(1, "rpm") != derive_seed(0, "rpm", 1)


def test_csv_precision():
    text = csv_text(["x"], [[0.1 + 0.2]])
    assert text == "x\n0.30000000000000004\n"


def test_exit_codes(tmp_path, capsys):
    assert main(["imaging", "--out", str(tmp_path / "a")]) == 0
    assert main(["scaling", "--out", str(tmp_path / "b")]) == 1     # lambda_max exponent misses 2
    assert main(["qfi", "--set", "gamma_typo=1", "--out", str(tmp_path / "c")]) == 2
    assert "gamma_typo" in capsys.readouterr().err
    assert main(["qfi", "--set", "t=80", "--set", "steps=2", "--out", str(tmp_path / "d")]) == 3
    for d in "ab":
        summary = json.loads((tmp_path / d / "summary.json").read_text())
        for c in summary["checks"]:
            assert {"value", "reference", "tolerance", "pass"} <= set(c)


def test_outputs_byte_identical(tmp_path):
    args = ["rpm", "--trials", "5000", "--seed", "11"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("covariance.csv", "counts.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    sa = json.loads((tmp_path / "a" / "summary.json").read_text())
    sb = json.loads((tmp_path / "b" / "summary.json").read_text())
    sa["config"].pop("output_dir"), sb["config"].pop("output_dir")
    assert sa == sb


def test_scaling_independent_of_workers(tmp_path):
    common = ["scaling", "--set", "family=toy-sparse", "--sizes", "2,3,4,5,6"]
    main(common + ["--workers", "1", "--out", str(tmp_path / "a")])
    main(common + ["--workers", "4", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "scaling.csv").read_bytes() == (tmp_path / "b" / "scaling.csv").read_bytes()


def test_rpm_reads_count_record(tmp_path):
    # few trials: the variance-ratio checks may fail, the count record is still written
    assert main(["rpm", "--trials", "2000", "--out", str(tmp_path / "a")]) in (0, 1)
    counts = tmp_path / "a" / "counts.txt"
    assert main(["rpm", "--set", f"counts_file={counts}", "--format", "json", "--out", str(tmp_path / "b")]) == 0
    doc = json.loads((tmp_path / "b" / "results.json").read_text())
    est = [row[3] for row in doc["estimate"]["rows"]]
    assert est == pytest.approx([1.0, 2.0, 3.0], rel=0.01)


def test_json_format_and_print_config(tmp_path, capsys):
    assert main(["pauli", "--set", "N=1", "--format", "json", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "results.json").exists() and not (tmp_path / "bell_fisher.csv").exists()
    capsys.readouterr()
    assert main(["qfi", "--print-config"]) == 0
    echoed = json.loads(capsys.readouterr().out)
    assert echoed["params"]["steps"] == 200


def test_console_script_entry(tmp_path):
    out = subprocess.run([sys.executable, "-m", "lindqfi.cli", "oracle-check", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "PASS raw_agreement" in out.stdout
