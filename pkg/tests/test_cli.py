import csv
import io
import json
import shutil
import subprocess
import sys

import jsonschema
import pytest

from hyperpurify.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from hyperpurify.config import BUILTIN_CONFIGS, ConfigError, builtin_fixture_path, load_config, parse_config
from hyperpurify.purify import predict_fidelity
from hyperpurify.qmath import save_matrix
from hyperpurify.runner import REPORT_SCHEMA, SUMMARY_COLUMNS, NumericalFailure, run, summary_row, sweep
from hyperpurify.states import mixture


def _cfg(**overrides):
    raw = json.loads(json.dumps(BUILTIN_CONFIGS["paper-20bf"]))
    raw.update(overrides)
    return raw


def _write(tmp_path, raw, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("name", list(BUILTIN_CONFIGS))
def test_builtin_reports_validate(name):
    report = run(load_config(name))
    jsonschema.validate(report, REPORT_SCHEMA)
    assert report["config"]["name"] == name
    assert report["provenance"]["timestamp"] is None


def test_identity_config_is_perfect():
    r = run(load_config("identity"))
    assert r["fidelities"]["after"] == pytest.approx(1.0, abs=1e-12)
    assert r["purification"]["success_probability"] == pytest.approx(1.0, abs=1e-12)
    assert r["qkd"]["after"]["effective_rate"] == pytest.approx(1.0, abs=1e-12)


def test_list_configs(capsys):
    assert main(["list-configs"]) == EXIT_OK
    assert capsys.readouterr().out.split() == list(BUILTIN_CONFIGS)


def test_run_json_round_trip(tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", "--config", "paper-20bf", "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    jsonschema.validate(report, REPORT_SCHEMA)
    assert report == json.loads(json.dumps(run(load_config("paper-20bf"))))


def test_run_is_byte_reproducible(tmp_path):
    raw = _cfg(counting={"pair_rate": 600, "integration_time": 60})
    path = _write(tmp_path, raw)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run", "--config", path, "--out", str(a)]) == EXIT_OK
    assert main(["run", "--config", path, "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.json"
    assert main(["run", "--config", path, "--out", str(c), "--seed", "5"]) == EXIT_OK
    assert a.read_bytes() != c.read_bytes()


def test_timestamp_is_opt_in(capsys):
    assert main(["run", "--config", "identity", "--timestamp"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["provenance"]["timestamp"]


def test_tomography_block(tmp_path):
    raw = _cfg(counting={"pair_rate": 600, "integration_time": 60}, seed=3)
    report = run(parse_config(raw, tmp_path))
    tomo = report["tomography"]
    assert tomo["analysis_states"] == "reconstructed"
    for key in ("polarization_before", "spatial_before", "after"):
        assert tomo[key]["fidelity_to_truth"] > 0.99


def test_run_csv(capsys):
    assert main(["run", "--config", "paper-20bf", "--format", "csv"]) == EXIT_OK
    rows = _csv(capsys.readouterr().out)
    assert len(rows) == 1
    assert tuple(rows[0]) == SUMMARY_COLUMNS
    assert float(rows[0]["F_after"]) == run(load_config("paper-20bf"))["fidelities"]["after"]


def test_config_errors_exit_1(tmp_path, capsys):
    assert main(["run", "--config", "no-such-config"]) == EXIT_CONFIG
    bad = _write(tmp_path, _cfg(noise={"flavor": "XF"}))
    assert main(["run", "--config", bad]) == EXIT_CONFIG
    (tmp_path / "broken.json").write_text("{")
    assert main(["run", "--config", str(tmp_path / "broken.json")]) == EXIT_CONFIG
    assert main(["sweep", "--config", "paper-20bf"]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_config_validation_messages(tmp_path):
    with pytest.raises(ConfigError, match="noise/f_pol"):
        parse_config(_cfg(noise={"f_pol": 2}))
    with pytest.raises(ConfigError, match="not found"):
        parse_config(_cfg(source={"kind": "fixtures", "pol": "a.json", "spa": "b.json"}), tmp_path)
    with pytest.raises(ConfigError):
        parse_config(_cfg(source={"kind": "fixtures", "pol": "builtin:rho_pol_bf20.json"}))
    with pytest.raises(ConfigError):
        parse_config(_cfg(noise={"mode": "schedule"}))
    with pytest.raises(ConfigError):
        parse_config(_cfg(sweep={"parameter": "noise_fraction", "values": [0.5, 1.5]}))
    with pytest.raises(ConfigError):
        parse_config(_cfg(extra=1))


def test_always_discard_exits_2(tmp_path, capsys):
    # spatial pair fully flipped, polarization clean: every event is rejected
    raw = _cfg(noise={"flavor": "BF", "f_pol": 0.0, "f_spa": 1.0})
    assert main(["run", "--config", _write(tmp_path, raw)]) == EXIT_NUMERICAL
    assert "always discards" in capsys.readouterr().err
    with pytest.raises(NumericalFailure):
        run(parse_config(raw))


def test_unphysical_fixture_exits_2(tmp_path):
    save_matrix(mixture(0.9) * 1.5, tmp_path / "bad.json")
    raw = _cfg(source={"kind": "fixtures", "pol": "bad.json", "spa": "builtin:rho_spa_bf20.json", "tol": 0.02})
    assert main(["run", "--config", _write(tmp_path, raw)]) == EXIT_NUMERICAL


def test_validate_fixture(capsys, tmp_path):
    path = str(builtin_fixture_path("rho_spa_bf20.json"))
    assert main(["validate-fixture", path]) == EXIT_OK
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["valid"]
    # the printed matrix is Hermitian only to about 2e-3
    assert main(["validate-fixture", path, "--tol", "1e-3"]) == EXIT_NUMERICAL
    assert main(["validate-fixture", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_fixture_paths_resolve_relative_to_config(tmp_path):
    shutil.copy(builtin_fixture_path("rho_pol_bf20.json"), tmp_path / "p.json")
    shutil.copy(builtin_fixture_path("rho_spa_bf20.json"), tmp_path / "s.json")
    raw = json.loads(json.dumps(BUILTIN_CONFIGS["fixtures-s2s3"]))
    raw["source"].update(pol="p.json", spa="s.json")
    path = _write(tmp_path, raw)
    a = run(load_config(path))
    b = run(load_config("fixtures-s2s3"))
    assert a["fidelities"] == b["fidelities"]


def test_noise_fraction_sweep_follows_closed_form(tmp_path, capsys):
    raw = _cfg(sweep={"parameter": "noise_fraction", "values": [0.0, 0.1, 0.2, 0.3]})
    # bit-flip-only noise keeps both marginals in the rank-two family
    raw["noise"]["intrinsic"] = {"bf": 0.011, "pf": 0.0}
    assert main(["sweep", "--config", _write(tmp_path, raw)]) == EXIT_OK
    rows = _csv(capsys.readouterr().out)
    assert [float(r["value"]) for r in rows] == [0.0, 0.1, 0.2, 0.3]
    for r in rows:
        expected = predict_fidelity(float(r["F_P_before"]), float(r["F_S_before"]))
        assert float(r["F_after"]) == pytest.approx(expected, abs=1e-9)
        assert float(r["F_predicted"]) == pytest.approx(expected, abs=1e-12)
    f_after = [float(r["F_after"]) for r in rows]
    assert f_after == sorted(f_after, reverse=True)


def test_fiber_length_sweep_eta_column(tmp_path, capsys):
    raw = _cfg(sweep={"parameter": "fiber_length", "values": [0, 11, 50]})
    assert main(["sweep", "--config", _write(tmp_path, raw)]) == EXIT_OK
    eta = [float(r["eta"]) for r in _csv(capsys.readouterr().out)]
    assert eta == pytest.approx([1.0, 0.6025595860743578, 0.1], abs=1e-12)


def test_single_point_sweep_equals_run(tmp_path):
    raw = _cfg(sweep={"parameter": "noise_fraction", "values": [0.2]})
    (report,) = sweep(load_config(_write(tmp_path, raw)))
    direct = run(load_config("paper-20bf"))
    assert report["fidelities"] == direct["fidelities"]
    assert summary_row(report)["F_after"] == summary_row(direct)["F_after"]


def test_sweep_json_format(tmp_path, capsys):
    raw = _cfg(sweep={"parameter": "noise_fraction", "values": [0.1, 0.2]})
    assert main(["sweep", "--config", _write(tmp_path, raw), "--format", "json"]) == EXIT_OK
    reports = json.loads(capsys.readouterr().out)
    assert len(reports) == 2
    for r in reports:
        jsonschema.validate(r, REPORT_SCHEMA)


def test_figures_written(tmp_path):
    raw = _cfg(sweep={"parameter": "noise_fraction", "values": [0.0, 0.2]})
    figs = tmp_path / "figs"
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", _write(tmp_path, raw, "s.json"), "--out", str(out), "--figures", str(figs)]) == 0
    assert out.is_file()
    names = sorted(p.name for p in figs.iterdir())
    assert names == [f"paper-20bf_{k}.png" for k in ("chsh", "fidelity", "key_rate", "success")]
    assert main(["run", "--config", "paper-20bf", "--out", str(tmp_path / "r.json"), "--figures", str(figs)]) == 0
    png = figs / "paper-20bf_density.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hyperpurify.cli", "list-configs"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "paper-20bf" in proc.stdout
