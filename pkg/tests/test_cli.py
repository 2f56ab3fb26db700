import json
import os

import numpy as np
import pytest

from freebound.cli import main
from freebound.errors import DomainError
from freebound.scenarios import SCENARIOS, build_config, parse_config_text


def test_parse_config_text():
    cfg = parse_config_text("# comment\nproblem = od1d\nn=64  # trailing\n\nk = 1e-3\n")
    assert cfg == {"problem": "od1d", "n": 64, "k": 1e-3}
    with pytest.raises(DomainError):
        parse_config_text("nonsense")
    with pytest.raises(DomainError):
        parse_config_text("colour = red")
    with pytest.raises(DomainError):
        parse_config_text("n = many")


@pytest.mark.parametrize("bad", [
    {"method": "mapped", "problem": "od2d"},
    {"problem": "od3d"},
    {"ic": "square"},
    {"problem": "bih1d", "ic": "quadratic"},
    {"k": -1.0},
])
def test_invalid_configs(bad):
    with pytest.raises(DomainError):
        build_config(None, bad)


def test_presets_validate():
    for name in SCENARIOS:
        build_config(name)


def test_run_fig1_left(tmp_path):
    assert main(["run", "--preset", "fig1-left", "--output-dir", str(tmp_path), "--dumps", "4"]) == 0
    d = tmp_path / "fig1-left"
    fields = np.genfromtxt(d / "od1d_fields.csv", delimiter=",", names=True)
    assert fields.dtype.names == ("t", "x", "u")
    assert len(np.unique(fields["t"])) == 5
    front = np.genfromtxt(d / "od1d_front.csv", delimiter=",", names=True)
    assert front.dtype.names == ("t", "s", "census_boundary", "census_components")
    s = front["s"][front["census_components"] > 0]
    assert s[0] == pytest.approx(1.0) and s[-1] < 0.5
    man = json.loads((d / "manifest.json").read_text())
    assert man["config"]["ic"] == "quadratic" and all(man["results"]["checks"].values())


def test_run_is_deterministic(tmp_path):
    args = ["run", "--preset", "fig1-right", "--t-end", "0.05", "--dumps", "3"]
    assert main(args + ["--output-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--output-dir", str(tmp_path / "b")]) == 0
    for f in ("od1d_fields.csv", "od1d_front.csv", "manifest.json"):
        a = (tmp_path / "a" / "fig1-right" / f).read_bytes()
        b = (tmp_path / "b" / "fig1-right" / f).read_bytes()
        if f == "manifest.json":
            a, b = (json.loads(x) for x in (a, b))
            a["config"].pop("output_dir")
            b["config"].pop("output_dir")
        assert a == b


def test_run_2d_and_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"problem = od2d\nic = twoarcs\nn = 16\nk = 1e-3\nt_end = 0.004\n"
                   f"dumps = 2\noutput_dir = {tmp_path}\n")
    assert main(["run", "--config", str(cfg)]) == 0
    d = tmp_path / "od2d-gradient"
    files = sorted(os.listdir(d))
    assert "od2d_front.csv" in files and sum(f.startswith("od2d_fields_") for f in files) == 3
    with open(d / "od2d_fields_000000.csv") as fh:
        assert fh.readline().strip() == "t,x,y,u"


def test_run_mapped_and_regularized(tmp_path):
    out = str(tmp_path)
    assert main(["run", "--method", "mapped", "--n", "32", "--t-end", "0.05",
                 "--output-dir", out]) == 0
    front = np.genfromtxt(tmp_path / "od1d-mapped" / "od1d_front.csv", delimiter=",", names=True)
    assert np.all(np.diff(front["s"]) <= 1e-12)
    assert main(["run", "--method", "regularized", "--set", "c=1000", "--n", "32",
                 "--t-end", "0.05", "--output-dir", out]) == 0
    man = json.loads((tmp_path / "od1d-regularized" / "manifest.json").read_text())
    assert man["config"]["c"] == 1000.0


def test_run_biharmonic(tmp_path):
    assert main(["run", "--preset", "fig6", "--t-end", "1.0", "--n", "96",
                 "--output-dir", str(tmp_path)]) == 0
    front = np.genfromtxt(tmp_path / "fig6" / "bih1d_front.csv", delimiter=",", names=True)
    assert 1.5 < front["s"][-1] < 3.0


@pytest.mark.parametrize("argv", [
    ["run", "--problem", "od2d", "--method", "mapped"],
    ["run", "--preset", "nope"],
    ["run", "--set", "n"],
    ["run", "--n", "ten"],
    ["verify", "--suite", "99"],
    ["study", "--convergence", "gradient"],
    ["frobnicate"],
    [],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 64
    assert "usage error" in capsys.readouterr().err


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    from freebound import cli
    from freebound.errors import NoConvergence

    def boom(cfg):
        raise NoConvergence("forced")

    monkeypatch.setattr(cli, "run", boom)
    assert main(["run", "--output-dir", str(tmp_path)]) == 1


def test_verify_exit_codes(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["verify", "--suite", "1,8", "--json", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("[PASS]  1.") and lines[-1] == "2/2 passed"
    assert [r["number"] for r in json.loads(out.read_text())] == [1, 8]


def test_verify_reports_failure(monkeypatch, capsys):
    from freebound import suites

    monkeypatch.setitem(suites.CHECKS, 1, lambda: suites.Criterion(1, "forced", False, "x"))
    assert main(["verify", "--suite", "1"]) == 2
    assert "[FAIL]" in capsys.readouterr().out


def test_study_prints_orders(capsys, monkeypatch):
    monkeypatch.setenv("FREEBOUND_THREADS", "1")
    assert main(["study", "--convergence", "mapped", "--n-list", "16", "32", "64",
                 "--k-fixed", "1e-4", "--k-list", "4e-3", "2e-3", "1e-3", "--n-fixed", "128"]) == 0
    out = capsys.readouterr().out
    p_h = float(out.split("p_h = ")[1].split()[0])
    p_k = float(out.split("p_k = ")[1].split()[0])
    assert 1.5 < p_h < 2.5 and 0.7 < p_k < 1.3
