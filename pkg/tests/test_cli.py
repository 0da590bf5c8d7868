import hashlib
import json
import subprocess
import sys

import pytest

from emlab.cli import ConfigError, MITIGATE_COLUMNS, load_config, main, parse_config
from emlab.limits import COST_COLUMNS
from emlab.parity import PARITY_COLUMNS
from emlab.records import RECORD_COLUMNS, read_csv
from emlab.validation import VALIDATE_COLUMNS

SMALL = {
    "decay": {"seed": 1, "family": "mixing", "ns": [2, 3], "Ds": [1, 2], "noise": {"kind": "depolarizing-local", "p": 0.9}, "trials": 200},
    "nonunital": {"seed": 2, "ns": [2, 3], "Ds": [1, 2, 3], "gamma": 0.2, "trials": 20},
    "mitigate": {
        "seed": 3,
        "circuit": {"family": "identity", "n": 2, "D": 1},
        "noise": {"kind": "depolarizing-local", "p": 0.9},
        "observables": ["ZI", "IZ"],
        "protocols": [{"protocol": "pec", "epsilon": 0.2, "delta": 0.2}, {"protocol": "vd", "epsilon": 0.2, "delta": 0.2}],
    },
    "bounds": {
        "seed": 4,
        "delta": 0.2,
        "decay": {"family": "mixing", "ns": [2, 3], "Ds": [1, 2], "noise": {"kind": "depolarizing-local", "p": 0.9}, "trials": 200},
        "ensembles": [{"circuit": {"family": "mixing", "n": 2, "D": 1}, "noise": {"kind": "depolarizing-local", "p": 0.9}}],
    },
    "parity": {"seed": 5, "n": 5, "tau": 0.1, "budget": 4, "reps": 20, "sampling_reps": 10},
}
CSV = {
    "decay": ("decay.csv", RECORD_COLUMNS),
    "nonunital": ("nonunital.csv", RECORD_COLUMNS),
    "mitigate": ("mitigate.csv", MITIGATE_COLUMNS),
    "bounds": ("bounds.csv", COST_COLUMNS),
    "parity": ("parity.csv", PARITY_COLUMNS),
}


def write_config(tmp_path, name, cfg):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(cfg))
    return p


@pytest.mark.parametrize("sub", sorted(SMALL))
def test_subcommand_writes_outputs_and_manifest(tmp_path, sub, capsys):
    cfg = write_config(tmp_path, sub, SMALL[sub])
    out = tmp_path / "out"
    assert main([sub, "--config", str(cfg), "--out", str(out)]) == 0
    name, cols = CSV[sub]
    header = (out / name).read_text().splitlines()[0]
    assert header == ",".join(cols)
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "ok" and man["subcommand"] == sub and man["seed"] == SMALL[sub]["seed"]
    for fname, digest in man["outputs"].items():
        assert hashlib.sha256((out / fname).read_bytes()).hexdigest() == digest
    assert "wrote" in capsys.readouterr().out


@pytest.mark.parametrize("sub", ["decay", "parity", "mitigate"])
def test_reruns_are_byte_identical(tmp_path, sub):
    cfg = write_config(tmp_path, sub, SMALL[sub])
    name = CSV[sub][0]
    assert main([sub, "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main([sub, "--config", str(cfg), "--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_override_changes_output(tmp_path):
    cfg = write_config(tmp_path, "decay", SMALL["decay"])
    main(["decay", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["decay", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "99"])
    assert (tmp_path / "a" / "decay.csv").read_bytes() != (tmp_path / "b" / "decay.csv").read_bytes()
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["seed"] == 99


def test_toml_config(tmp_path):
    p = tmp_path / "parity.toml"
    p.write_text('seed = 2\nn = 4\ntau = 0.1\nbudget = 2\nreps = 10\nsampling_reps = 5\n')
    assert main(["parity", "--config", str(p), "--out", str(tmp_path)]) == 0
    assert len(read_csv(tmp_path / "parity.csv")) == 15


def test_validate_default_passes(tmp_path, capsys):
    assert main(["validate", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "validate.csv")
    assert list(rows[0]) == list(VALIDATE_COLUMNS)
    assert all(r["passed"] == "true" for r in rows) and len(rows) >= 10
    assert "pass" in capsys.readouterr().out


@pytest.mark.parametrize(
    "sub, cfg",
    [
        ("decay", {"family": "mixing", "ns": [2], "Ds": [1], "noise": {"kind": "depolarizing-local", "p": 0.9}}),
        ("decay", {"seed": 1, "family": "spiral", "ns": [2], "Ds": [1], "noise": {"kind": "depolarizing-local", "p": 0.9}}),
        ("decay", {"seed": 1, "family": "mixing", "ns": [2], "Ds": [1], "noise": {"kind": "dephasing"}}),
        ("decay", {"seed": 1, "family": "mixing", "ns": [2], "Ds": [1], "noise": {"kind": "depolarizing-local", "p": 0.9}, "colour": 3}),
        ("parity", {"seed": 1, "n": 4, "tau": 0.1, "budget": 17}),
        ("mitigate", {"seed": 1, "circuit": {"family": "mixing", "n": 2, "D": 1}, "noise": {"kind": "depolarizing-local", "p": 0.9},
                      "observables": ["ZZZ"], "protocols": [{"protocol": "pec", "epsilon": 0.1, "delta": 0.1}]}),
        ("bounds", {"seed": 1}),
    ],
)
def test_invalid_configs_exit_2(tmp_path, sub, cfg):
    p = write_config(tmp_path, sub, cfg)
    assert main([sub, "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_malformed_file_exits_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{ not json")
    assert main(["decay", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert main(["decay", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2


def test_bad_worker_settings_exit_2(tmp_path, monkeypatch):
    p = write_config(tmp_path, "parity", SMALL["parity"])
    assert main(["parity", "--config", str(p), "--out", str(tmp_path), "--workers", "0"]) == 2
    monkeypatch.setenv("EMLAB_WORKERS", "0")
    assert main(["parity", "--config", str(p), "--out", str(tmp_path)]) == 2


def test_runtime_failure_exits_1_with_manifest(tmp_path):
    cfg = dict(SMALL["mitigate"], noise={"kind": "amplitude-damping", "gamma": 0.1},
               protocols=[{"protocol": "pec", "epsilon": 0.1, "delta": 0.1}])
    p = write_config(tmp_path, "m", cfg)
    assert main(["mitigate", "--config", str(p), "--out", str(tmp_path / "o")]) == 1
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["status"] == "failed" and "PEC" in man["error"]


def test_parse_config_directly():
    cfg = parse_config("parity", SMALL["parity"], None)
    assert cfg.seed == 5 and cfg.params["n"] == 5
    with pytest.raises(ConfigError):
        parse_config("parity", {"n": 4, "tau": 0.1, "budget": 2}, None)
    with pytest.raises(ConfigError):
        load_config("/nonexistent/emlab.json")


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "emlab.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("emlab ")
