import math

import numpy as np
import pytest

import dce_workbench as dw


SMALL = {
    "channel": {"kind": "kronecker", "rho": 0.5},
    "grid": {"m": 2, "n_f": 16, "n": 16},
    "noise": {"snr_db": [0, 10]},
    "estimators": [{"id": "ls", "preset": "ls"}, {"id": "genie", "preset": "mmse_genie"}],
    "run": {"trials": 2, "seed": 3},
}


def test_weight_counts():
    assert [dw.weight_count(6, k, 2) for k in (8, 16, 32, 64)] == [496, 1760, 6592, 25472]
    assert [dw.weight_count(6, k, 128) for k in (8, 16, 32, 64)] == [1504, 3776, 10624, 33536]


def test_gradcheck():
    code, text = dw.gradcheck("small")
    assert code == 0, text


def test_run_experiment_records():
    records = dw.run_experiment(SMALL)
    assert len(records) == 8
    assert [r["estimator"] for r in records[:4]] == ["ls"] * 4
    assert all(r["metric"] == "nmse" and r["value"] >= 0 for r in records)
    assert records == dw.run_experiment(SMALL)
    csv = dw.results_csv(SMALL)
    assert csv.splitlines()[0] == "estimator,snr_db,sir_db,trial,metric,value"
    assert len(csv.splitlines()) == 9


def test_config_errors_name_the_key():
    bad = dict(SMALL, channel={"rho": 0.5})
    with pytest.raises(dw.ConfigError, match="channel.kind"):
        dw.run_experiment(bad)
    assert "fig6" in dw.preset_names()
    assert len(dw.preset("fig6")["estimators"]) == 4
    assert dw.resolve_config(SMALL)["grid"]["k_users"] == 1


def test_estimators_on_arrays():
    h = dw.draw_channel("kronecker", 4, 8, 1, rho=0.5, seed=1)[:, :, 0]
    assert h.shape == (4, 8) and h.dtype == np.complex128
    assert dw.nmse(h, dw.ls_estimate(h, 1.0, 1)) == 0.0
    y = np.array([[0.8 - 1.4j]])
    one = np.eye(1, dtype=complex)
    assert np.allclose(dw.mmse_estimate(y, 1.0, 1, one, one, 1.0), y / 2)
    r_sp, r_f = dw.genie_covariance("kronecker", 4, 8, rho=0.5)
    assert np.allclose(r_sp, r_sp.conj().T) and np.allclose(np.diag(r_f).real, 1.0)
    assert dw.analytic_mmse_error([1.0], 1.0) == 0.5
    assert math.isclose(dw.analytic_ls_error(2, 10.0), 0.2)


def test_fit_decoder_reduces_loss():
    rng = np.random.default_rng(0)
    target = rng.standard_normal((2, 8, 8))
    out, trace = dw.fit_decoder(target, layers=3, width=4, epochs=50, seed=1)
    assert out.shape == target.shape
    assert len(trace) == 50 and trace[-1] < trace[0]
