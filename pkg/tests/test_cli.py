import json

import pytest

from nestedba import cli

SL2_L2 = {"algebra": "A1", "remove": 1, "sites": [{"rep": "defining", "shift": 0}] * 2, "hbar": 1}
SL2_TW = dict(SL2_L2, twist=[1, "3/2"])


@pytest.fixture
def cfg(tmp_path):
    def write(data, name="chain.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return write


def run(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = cli.main(argv + ["--json", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_gauss_example_has_five_witnesses(tmp_path):
    code, rep = run(["gauss", "--algebra", "A2", "--remove", "1", "--check", "reconstruct",
                     "--samples", "5", "--seed", "7"], tmp_path)
    assert code == 0 and rep["pass"]
    (check,) = rep["checks"]
    assert check["name"] == "reconstruct" and len(check["witness"]) == 5 == len(check["points"])
    assert rep["results"]["block_dims"] and rep["results"]["r_matrix"]
    for key in ("tool", "version", "config", "timing", "exit_status"):
        assert key in rep
    assert rep["config"]["seed"] == 7


def test_gauss_all_checks(tmp_path):
    code, rep = run(["gauss", "--algebra", "B2", "--remove", "1", "--samples", "3", "--seed", "1"], tmp_path)
    assert code == 0
    assert {c["name"] for c in rep["checks"]} >= {"reconstruct", "identities", "nested-ybe", "conjecture"}


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("NESTEDBA_SEED", "3")
    code, rep = run(["gauss", "--algebra", "A1", "--check", "reconstruct", "--samples", "2"], tmp_path)
    assert code == 0 and rep["config"]["seed"] == 3


def test_missing_seed_is_usage_error(tmp_path, monkeypatch):
    monkeypatch.delenv("NESTEDBA_SEED", raising=False)
    assert cli.main(["gauss", "--algebra", "A1", "--check", "reconstruct"]) == 2


@pytest.mark.parametrize("argv", [
    ["gauss", "--algebra", "A2", "--check", "nonsense", "--seed", "1"],
    ["gauss", "--algebra", "Z9", "--seed", "1"],
    ["gauss", "--algebra", "A1", "--remove", "4", "--seed", "1"],
    ["roots", "D4", "--remove", "2"],
    ["rmatrix", "--algebra", "A2", "--check", "bogus", "--seed", "1"],
    ["bogus-command"],
])
def test_usage_errors_exit_two(argv):
    assert cli.main(argv) == 2


def test_bad_config_exit_two(cfg):
    path = cfg({"algebra": "A1", "sites": []})
    assert cli.main(["chain", "verify", "--config", path, "--seed", "1"]) == 2
    assert cli.main(["chain", "verify", "--config", path + ".missing", "--seed", "1"]) == 2


def test_roots_and_rep(tmp_path):
    code, rep = run(["roots", "B2", "--remove", "1"], tmp_path)
    assert code == 0
    code, rep = run(["rep", "C3", "--remove", "3", "--decompose"], tmp_path)
    assert code == 0 and rep["pass"]


def test_rmatrix(tmp_path):
    code, rep = run(["rmatrix", "--algebra", "C2", "--samples", "3", "--seed", "2"], tmp_path)
    assert code == 0 and all(c["pass"] for c in rep["checks"])


def test_chain_verify(tmp_path, cfg):
    code, rep = run(["chain", "verify", "--config", cfg(SL2_L2), "--seed", "4", "--samples", "2"], tmp_path)
    assert code == 0 and rep["pass"]


def test_bethe_solve_and_verify(tmp_path, cfg):
    code, rep = run(["bethe", "solve", "--config", cfg(SL2_L2), "--m", "1", "--seeds", "16",
                     "--seed", "0"], tmp_path, "roots.json")
    assert code == 0 and rep["pass"]
    (sol,) = rep["results"]["solutions"]
    assert abs(complex(*sol["roots"]["1"][0])) < 1e-10
    code, ver = run(["bethe", "verify", "--roots", str(tmp_path / "roots.json")], tmp_path)
    assert code == 0 and ver["pass"]


def test_bethe_twisted_singular(tmp_path, cfg):
    code, rep = run(["bethe", "solve", "--config", cfg(SL2_TW), "--m", "2", "--seeds", "48",
                     "--allow-singular", "--seed", "0"], tmp_path)
    assert code == 0
    assert any(s["singular"] for s in rep["results"]["solutions"])


def test_reproduce_and_tamper(tmp_path):
    code, _ = run(["gauss", "--algebra", "A2", "--check", "reconstruct,nested-ybe",
                   "--samples", "3", "--seed", "11"], tmp_path, "r.json")
    assert code == 0
    path = tmp_path / "r.json"
    assert cli.main(["reproduce", str(path)]) == 0
    rep = json.loads(path.read_text())
    rep["config"]["seed"] = 12
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(rep))
    assert cli.main(["reproduce", str(bad)]) == 1


def test_compare_float_tolerance():
    assert cli.compare({"x": 1.0, "y": ["1/3"]}, {"x": 1.0 + 1e-14, "y": ["1/3"]}) is None
    assert cli.compare({"x": 1.0}, {"x": 1.0 + 1e-9})
    assert cli.compare({"y": ["1/3"]}, {"y": ["1/4"]})


def test_stdout_json(capsys):
    assert cli.main(["roots", "A2", "--json", "-"]) == 0
    assert json.loads(capsys.readouterr().out)["tool"] == "nestedba"
