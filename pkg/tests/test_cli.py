import json

import pytest

from specreg import index_fn, synthetic
from specreg.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_fit(tmp_path, capsys):
    model = synthetic.build_model(2.0, 3, index_fn.holder(0.5, s=5.0), noise_sd=0.0)
    path = tmp_path / "s.csv"
    synthetic.draw_sample(model, 50, 0).to_csv(path)
    code, out = run(capsys, "fit", str(path), "--filter", "cutoff", "--lam", "1e-6",
                    "--spectrum", str(tmp_path / "spec.csv"))
    assert code == 0
    coords = json.loads(out)["coordinates"]
    assert coords == pytest.approx([1.0, 0.0, 0.0], abs=1e-9)
    assert (tmp_path / "spec.csv").read_text().startswith("index,eigenvalue")


def test_fit_gaussian(tmp_path, capsys):
    model = synthetic.build_model(2.0, 3, index_fn.holder(0.5, s=5.0), noise_sd=0.1)
    path = tmp_path / "s.csv"
    synthetic.draw_sample(model, 20, 0).to_csv(path)
    code, out = run(capsys, "fit", str(path), "--kernel", "gaussian", "--lam", "0.1")
    assert code == 0
    assert "coordinates" not in json.loads(out)


def test_rates(tmp_path, capsys):
    cfg = {"model": {"b": 2, "d": 20, "phi": {"kind": "holder", "r": 0.5},
                     "source": {"kind": "power_decay", "R": 1, "exponent": 0.5}, "noise_sd": 0.1},
           "filter": {"filter": "cutoff"}, "n_grid": [64, 128], "replicates": 2, "gates": []}
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    code, out = run(capsys, "rates", str(p), "--out", str(tmp_path / "o"), "--jobs", "2")
    assert code == 0
    assert json.loads(out)["all_pass"] is True
    assert (tmp_path / "o" / "errors.csv").exists()


def test_audit(capsys):
    code, out = run(capsys, "audit-filter", "tikhonov", "--nu", "1", "2")
    assert code == 0
    d = json.loads(out)
    assert d["supported"] == {"1.0": True, "2.0": False}


def test_audit_flags(capsys):
    assert main(["audit-filter", '{"filter": "landweber", "step": 0.5}']) == 0
    capsys.readouterr()


def test_theory_checks(tmp_path, capsys):
    code, out = run(capsys, "theory-checks", "--out", str(tmp_path / "t.json"))
    assert code == 0
    assert all(r["pass"] for r in json.loads(out))


@pytest.mark.parametrize("phi,nu,code", [('{"kind": "holder", "r": 2}', "1", 1),
                                         ('{"kind": "holder", "r": 1}', "1", 0)])
def test_covering(capsys, phi, nu, code):
    got, out = run(capsys, "covering", phi, "--nu", nu)
    assert got == code
    assert json.loads(out)["covered"] is (code == 0)


def test_error_exit(capsys, tmp_path):
    assert main(["fit", str(tmp_path / "missing.csv"), "--lam", "1"]) == 2
    assert main(["audit-filter", "nope"]) == 2
