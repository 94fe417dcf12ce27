import json

import numpy as np
import pytest

from conspde.harness import ConfigError, ExperimentConfig, load_config, main, replay, run
from conspde.harness import io
from conspde.harness.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE


def small(tmp_path, **kw):
    base = dict(command="simulate", preset="dean_kawasaki", n=32, dt=1e-3, T=0.05, epsilon=0.01,
                seeds=[3, 4], out=str(tmp_path / "run"))
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def test_config_round_trip():
    cfg = ExperimentConfig.from_dict({"preset": "sine_gordon", "n": 64, "dt": 1e-4, "T": 0.01,
                                      "params": {"s": 0.002}, "seeds": [1, 2, 3]})
    again = ExperimentConfig.from_dict(json.loads(cfg.to_json()))
    assert again == cfg
    assert again.manifest_hash() == cfg.manifest_hash()


def test_manifest_hash_ignores_out_and_workers_only():
    a = ExperimentConfig.from_dict({"dt": 1e-4, "T": 0.01})
    b = ExperimentConfig.from_dict({"dt": 1e-4, "T": 0.01, "out": "elsewhere", "workers": 3})
    c = ExperimentConfig.from_dict({"dt": 1e-4, "T": 0.01, "seeds": [1]})
    assert a.manifest_hash() == b.manifest_hash() != c.manifest_hash()


def test_validation_lists_every_problem():
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict({"command": "fly", "n": 7, "epsilon": 2.0, "seeds": [-1], "workers": 0})
    msg = "\n".join(exc.value.problems)
    for key in ("command", "n:", "epsilon", "seeds", "workers"):
        assert key in msg


def test_validation_unknown_field_and_alignment():
    with pytest.raises(ConfigError, match="unknown field"):
        ExperimentConfig.from_dict({"colour": 1})
    with pytest.raises(ConfigError, match="not a multiple of dt"):
        ExperimentConfig.from_dict({"dt": 1e-3, "T": 0.1, "params": {"shift": 0.00225}})


def test_validation_refuses_cfl_violation():
    with pytest.raises(ConfigError, match="explicit diffusion bound"):
        ExperimentConfig.from_dict({"preset": "custom", "coefficients": {"phi": {"kind": "cubic"}},
                                   "n": 128, "dt": 1e-3, "T": 0.01})


def test_toml_config(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('preset = "heat"\nn = 32\ndt = 0.001\nT = 0.01\nseeds = [5]\n[initial]\nkind = "sine"\n')
    cfg = load_config(p, {"command": "simulate"})
    assert cfg.seeds == [5] and cfg.initial == {"kind": "sine"}


def test_simulate_heat_conserves_mass(tmp_path):
    cfg = ExperimentConfig.from_dict({"n": 32, "dt": 1e-3, "T": 0.02, "out": str(tmp_path)})
    assert run(cfg) == EXIT_OK
    resid = io.read_csv(tmp_path / "mass_residual.csv")["mass_minus_initial"]
    assert np.max(np.abs(resid)) < 1e-12
    for f in ("series.csv", "series.png", "final_profiles.png", "report.json", "manifest.json"):
        assert (tmp_path / f).exists()


def test_couple_deterministic_and_worker_invariant(tmp_path, capsys):
    a = small(tmp_path, command="couple", out=str(tmp_path / "a"))
    b = small(tmp_path, command="couple", out=str(tmp_path / "b"), workers=2)
    assert run(a) == EXIT_OK and run(b) == EXIT_OK
    ra, rb = io.read_report(tmp_path / "a/report.json"), io.read_report(tmp_path / "b/report.json")
    assert ra["report_hash"] == rb["report_hash"]
    assert ra["digests"] == rb["digests"]
    assert (tmp_path / "a/coupling.csv").exists()


def test_replay_fresh_and_tampered(tmp_path):
    cfg = small(tmp_path, command="couple")
    assert run(cfg) == EXIT_OK
    rep = tmp_path / "run/report.json"
    assert replay(rep) == EXIT_OK
    data = io.read_report(rep)
    data["manifest"]["seeds"] = [99]
    bad = tmp_path / "tampered.json"
    io.write_report(bad, data)
    assert replay(bad) == EXIT_FAIL
    assert replay(tmp_path / "absent.json") == EXIT_USAGE


def test_replay_reports_missing_path_file(tmp_path, capsys):
    cfg = small(tmp_path, params={"save_paths": True})
    assert run(cfg) == EXIT_OK
    pdir = tmp_path / "run/paths"
    assert replay(tmp_path / "run/report.json") == EXIT_OK
    follow = small(tmp_path, out=str(tmp_path / "use"), params={"path_dir": str(pdir)})
    assert run(follow) == EXIT_OK
    (pdir / "path_4.bin").unlink()
    capsys.readouterr()
    assert replay(tmp_path / "use/report.json") == EXIT_USAGE
    assert "regenerate" in capsys.readouterr().out


def test_paths_from_files_match_in_memory(tmp_path):
    cfg = small(tmp_path, params={"save_paths": True})
    run(cfg)
    follow = small(tmp_path, out=str(tmp_path / "use"), params={"path_dir": str(tmp_path / "run/paths")})
    run(follow)
    a, b = io.read_report(tmp_path / "run/report.json"), io.read_report(tmp_path / "use/report.json")
    assert a["digests"]["final"] == b["digests"]["final"]


def test_flowcheck_misaligned_is_usage_error(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"preset": "heat", "n": 32, "dt": 1e-3, "T": 0.01, "params": {"shift": 0.00225}}))
    assert main(["flowcheck", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_USAGE
    assert "not a multiple of dt" in capsys.readouterr().out
    assert not (tmp_path / "o").exists()


def test_flowcheck_passes(tmp_path):
    cfg = small(tmp_path, command="flowcheck", T=0.04, params={"n_configs": 3})
    assert run(cfg) == EXIT_OK
    assert (tmp_path / "run/flowcheck.csv").exists()


def test_check_assumptions_exit_codes(tmp_path):
    ok = ExperimentConfig.from_dict({"command": "check-assumptions", "preset": "dean_kawasaki", "epsilon": 0.01,
                                     "n": 32, "dt": 1e-3, "T": 0.01, "out": str(tmp_path / "ok")})
    assert run(ok) == EXIT_OK
    bad = ExperimentConfig.from_dict({"command": "check-assumptions", "preset": "custom", "epsilon": 1.0,
                                      "coefficients": {"phi": "identity", "sigma": "identity"},
                                      "n": 32, "dt": 1e-3, "T": 0.01, "out": str(tmp_path / "bad")})
    assert run(bad) == EXIT_FAIL


def test_main_with_config_and_seed(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"preset": "heat", "n": 32, "dt": 1e-3, "T": 0.01, "seeds": [1, 2]}))
    assert main(["simulate", "--config", str(p), "--seed", "7", "--out", str(tmp_path / "o")]) == EXIT_OK
    rep = io.read_report(tmp_path / "o/report.json")
    assert rep["manifest"]["seeds"] == [7] and rep["manifest"]["command"] == "simulate"


def test_snapshots_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    t, s = np.linspace(0, 1, 5), rng.random((5, 8, 8))
    io.write_snapshots(tmp_path / "s.bin", t, s)
    t2, s2 = io.read_snapshots(tmp_path / "s.bin")
    assert np.array_equal(t, t2) and np.array_equal(s, s2)


def test_csv_round_trip_is_exact(tmp_path):
    cols = {"a": np.array([0.1, 1 / 3, 1e-300]), "b": np.array([np.pi, -0.0, 2.0**60])}
    io.write_csv(tmp_path / "x.csv", cols)
    back = io.read_csv(tmp_path / "x.csv")
    assert all(np.array_equal(cols[k], back[k]) for k in cols)


def test_digest_depends_on_bits():
    assert io.digest([1.0, 2.0]) == io.digest(np.array([1.0, 2.0]))
    assert io.digest([1.0, 2.0]) != io.digest([1.0, np.nextafter(2.0, 3.0)])


@pytest.mark.slow
def test_selftest_passes(tmp_path):
    assert main(["selftest", "--out", str(tmp_path)]) == EXIT_OK
