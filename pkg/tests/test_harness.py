import json
import os
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tightwave.errors import ConfigError
from tightwave.harness import RunArtifact, load_config, run, write_artifact
from tightwave.harness.artifact import MANIFEST
from tightwave.harness.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = {"command": "iterate", "system": {"kernel": {"family": "two_point"}},
           "grid": {"step": 1.0, "lattice": True}, "iterations": 3}


def cli(tmp_path, doc, *flags):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return main([doc["command"], "--config", str(p), "--out", str(tmp_path / "out"), *flags])


def test_round_trip():
    cfg = load_config(MINIMAL)
    again = load_config(cfg.to_json())
    assert again.to_dict() == cfg.to_dict()


@settings(max_examples=30)
@given(st.sampled_from(["gaussian", "exponential", "two_point", "cover", "pareto"]),
       st.floats(0.001, 1.0), st.integers(0, 500), st.integers(0, 2 ** 64 - 1),
       st.sampled_from(["move-first", "branch-first"]))
def test_round_trip_property(fam, h, iters, seed, mode):
    doc = {"command": "iterate", "system": {"kernel": {"family": fam}, "mode": mode},
           "grid": {"step": h}, "iterations": iters, "mc": {"seed": seed}}
    cfg = load_config(doc)
    assert load_config(cfg.to_json()).to_dict() == cfg.to_dict()


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="kernell"):
        load_config({"command": "iterate", "system": {"kernell": {}}})
    with pytest.raises(ConfigError, match="sigmaa"):
        load_config({"command": "iterate", "system": {"kernel": {"family": "gaussian",
                                                                 "sigmaa": 1}}})


@pytest.mark.parametrize("bad", [
    "{not json", {"command": "fly"}, {"command": "iterate", "iterations": -1},
    {"command": "iterate", "grid": {"step": 0}}, {"command": "iterate", "mc": {"seed": -1}},
    {"command": "iterate", "system": {"q": {"type": "offspring", "p": {"1": 0.5}}}},
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        load_config(bad if isinstance(bad, dict) else bad)


def test_every_checked_in_config_loads():
    files = sorted(CONFIGS.glob("*.json"))
    assert len(files) >= 11
    for f in files:
        load_config(f)


def test_iterate_zero_iterations(tmp_path):
    art = run(load_config({**MINIMAL, "iterations": 0}))
    assert art.status == "success"
    assert art.tables["trace.csv"].count("\n") == 2


def test_cli_exit_codes(tmp_path):
    assert cli(tmp_path, MINIMAL) == 0
    assert (tmp_path / "out" / MANIFEST).exists()
    bad = tmp_path / "bad.json"
    bad.write_text('{"command": "iterate", "kernell": 1}')
    assert main(["iterate", "--config", str(bad)]) == 3
    degenerate = {"command": "validate", "system": {"q": {"type": "offspring", "p": {"1": 1.0}}},
                  "validate": {"conditions": ["q"]}}
    assert cli(tmp_path, degenerate) == 1
    overflow = {**MINIMAL, "system": {"kernel": {"family": "gaussian"}},
                "grid": {"step": 0.01, "half_width": 10.0, "clip_budget": 0.0}, "iterations": 30}
    assert cli(tmp_path, overflow) == 2
    err = json.loads((tmp_path / "out" / "error.json").read_text())
    assert err["iteration"] >= 1


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(MINIMAL))
    assert main(["iterate", "--config", str(p), "--out", str(blocker / "sub")]) == 4


def test_flags_override(tmp_path):
    assert cli(tmp_path, MINIMAL, "--iterations", "5", "--seed", "99", "--reps", "7") == 0
    man = json.loads((tmp_path / "out" / MANIFEST).read_text())
    assert man["config"]["iterations"] == 5
    assert man["seed"] == 99 and man["config"]["mc"]["reps"] == 7
    trace = (tmp_path / "out" / "trace.csv").read_text()
    assert trace.count("\n") == 7


def test_pareto_auto_lyapunov_fails_validation(tmp_path):
    doc = json.loads((CONFIGS / "pareto_lyapunov_auto.json").read_text())
    cfg = load_config(doc)  # accepted at load time
    assert cfg.lyapunov == "auto"
    assert cli(tmp_path, doc) == 1


def test_gaussian_validate_all_pass(tmp_path):
    doc = json.loads((CONFIGS / "gaussian_validate.json").read_text())
    assert cli(tmp_path, doc) == 0
    rep = json.loads((tmp_path / "out" / "assumption_report.json").read_text())
    assert rep["pass"] is True and all(r["pass"] for r in rep["records"])


def test_rerun_is_byte_identical(tmp_path):
    doc = {"command": "simulate", "simulate": {"target": "brw", "n": 4},
           "system": {"kernel": {"family": "gaussian"}}, "mc": {"reps": 500, "seed": 5,
                                                                 "dump": True}}
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(doc))
        assert main(["simulate", "--config", str(p), "--out", str(d)]) == 0
    for name in ("samples.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma, mb = (json.loads((d / MANIFEST).read_text()) for d in (a, b))
    assert ma["input_hash"] == mb["input_hash"] and ma["tables"] == mb["tables"]


def test_missing_directory_created(tmp_path):
    art = RunArtifact({"command": "x"}, {"t.csv": "a\n"})
    target = tmp_path / "deep" / "er"
    write_artifact(art, target)
    assert (target / "t.csv").read_text() == "a\n" and (target / MANIFEST).exists()


def test_partial_failure_leaves_no_manifest(tmp_path, monkeypatch):
    write_artifact(RunArtifact({}, {"t.csv": "old\n"}), tmp_path)
    assert (tmp_path / MANIFEST).exists()
    real = os.replace
    calls = {"n": 0}

    def flaky(src, dst):
        calls["n"] += 1
        if calls["n"] == 2:
            raise OSError("disk full")
        return real(src, dst)

    monkeypatch.setattr(os, "replace", flaky)
    with pytest.raises(OSError):
        write_artifact(RunArtifact({}, {"a.csv": "1\n", "b.csv": "2\n"}), tmp_path)
    assert not (tmp_path / MANIFEST).exists()
    assert not list(tmp_path.glob(".*.tmp"))


def test_table_kernel_hash_covers_file(tmp_path):
    tab = tmp_path / "k.csv"
    tab.write_text("x,tail\n-1,1\n1,0\n")
    doc = {"command": "iterate", "system": {"kernel": {"family": "table", "path": "k.csv"}},
           "grid": {"step": 0.05}, "iterations": 2}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    h1 = run(load_config(p)).manifest["input_hash"]
    tab.write_text("x,tail\n-2,1\n1,0\n")
    h2 = run(load_config(p)).manifest["input_hash"]
    assert h1 != h2
