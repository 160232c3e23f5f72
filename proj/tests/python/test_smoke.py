import os
import subprocess

import pytest

import mimo_recal as mr


def test_special_functions():
    assert mr.erfc(1.0) == pytest.approx(0.15729920705028513066, rel=1e-14)
    assert mr.bussgang_mu(1.0) == pytest.approx(0.62106392192934394698, rel=1e-13)
    assert mr.bussgang_lambda(1.0, 1.0) == pytest.approx(0.017932242554547692459, rel=1e-12)
    assert mr.orth_poly_psi(1, 0.25) == pytest.approx(-3.0)
    assert mr.rate_from_sindr(1.0) == pytest.approx(1.0)


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        mr.orth_poly_psi(21, 0.5)
    with pytest.raises(ValueError, match="bogus"):
        mr.run({"scenario": "rate_vs_snr", "bogus": 1})


def test_selftest():
    results = mr.selftest()
    assert results
    assert all(ok for _, ok, _ in results)


def test_run_is_deterministic():
    cfg = {
        "scenario": "rate_vs_snr",
        "M": 16,
        "K": 2,
        "methods": ["ideal", "closed_form"],
        "mc": {"n_hardware": 3},
        "sweep": {"rho_t_db": [0, 20]},
    }
    a = mr.run(cfg, threads=1)
    b = mr.run(cfg, threads=2)
    assert a == b
    assert len(a) == 4
    assert a[0]["method"] == "ideal"
    assert a[0]["n_trials"] == 3
    assert a[2]["rate_mean"] > a[0]["rate_mean"]
    c = mr.run(cfg, sets=["seed=9"], threads=1)
    assert c[1]["rate_mean"] != a[1]["rate_mean"]


def test_cli_matches_module(tmp_path):
    cli = os.environ.get("MIMO_RECAL_CLI")
    if not cli:
        pytest.skip("CLI path not provided")
    cfg = tmp_path / "c.json"
    cfg.write_text('{"scenario": "rate_vs_snr", "M": 16, "K": 2, "methods": ["closed_form"],'
                   ' "mc": {"n_hardware": 2}, "sweep": {"rho_t_db": 10}}')
    out = subprocess.run([cli, "run", "--config", str(cfg), "--seed", "4"],
                         check=True, capture_output=True, text=True).stdout
    assert out == mr.run_csv(cfg.read_text(), ["seed=4"], False, 0)
    assert "\r" not in out
