import json
import math

import numpy as np
import pytest

from fftn_otfs.adapt import DEFAULT_LUT, Lut, PassConfig
from fftn_otfs.core import ConfigurationError, FrameConfig
from fftn_otfs.harness import (PASS_COLUMNS, SWEEP_COLUMNS, Scenario, ber_sweep, calibrate_lut, csv_body,
                               format_csv, load_scenario, parse_alpha_policy, pass_csv, pass_sim, read_csv,
                               robustness_sweep, scenario_from_dict, simulate, throughput_sweep, validate,
                               wilson_interval)

SMALL = Scenario(frame=FrameConfig(M=8, N=8, mod_order=4), model="tdl-a", snr=(0.0, 20.0, 5.0), trials=40,
                 theory_draws=5, seed=3)


def test_snr_points():
    assert Scenario(snr=(0, 30, 5)).snr_points == (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    assert Scenario(snr=(0, 1, 0.3)).snr_points == (0.0, 0.3, 0.6, 0.9)


@pytest.mark.parametrize("kwargs", [dict(trials=0), dict(snr=(10, 0, 1)), dict(snr=(0, 10, 0)),
                                    dict(mode="orbit"), dict(alpha="1.5"), dict(alpha="lut:nope"),
                                    dict(model="tdl-z"), dict(quantize="ceil")])
def test_invalid_scenarios(kwargs):
    with pytest.raises(ConfigurationError):
        Scenario(**kwargs)


def test_parse_alpha_policy():
    assert parse_alpha_policy("0.9") == 0.9
    assert parse_alpha_policy("lut:default") is DEFAULT_LUT
    with pytest.raises(ConfigurationError):
        parse_alpha_policy("fast")


def test_scenario_from_json(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"frame": {"M": 32, "N": 16, "mod_order": 4}, "model": "tdl-e",
                                "snr": "0:30:2", "alpha": "lut:default", "trials": 100}))
    s = load_scenario(path)
    assert s.frame.M == 32 and s.snr == (0.0, 30.0, 2.0) and s.trials == 100
    with pytest.raises(ConfigurationError):
        scenario_from_dict({"bogus": 1})


def test_metadata_echoes_config():
    meta = SMALL.metadata()
    assert meta["frame"]["M"] == 8 and meta["seed"] == 3
    assert "out" not in meta and meta["version"].startswith("fftn_otfs")


def test_wilson_interval():
    lo, hi = wilson_interval(10, 1000)
    assert lo < 0.01 < hi
    lo0, hi0 = wilson_interval(0, 1000)
    assert lo0 == 0.0 and 0 < hi0 < 0.005


def test_ber_sweep_rows():
    res = ber_sweep(SMALL)
    snr = res.column("snr_db")
    assert list(snr) == sorted(snr) == list(SMALL.snr_points)
    for r in res.rows:
        assert 0.0 <= r.ber_sim <= 1.0 and r.ber_ci95 >= 0.0
        assert r.ber_lo <= r.ber_sim <= r.ber_hi
        assert r.trials == 40 and r.errors_counted == round(r.ber_sim * 40 * 128)
        assert 0.0 <= r.fer_sim <= 1.0 and r.alpha == 1.0
    cols, data = read_csv(res.to_csv())
    assert tuple(cols) == SWEEP_COLUMNS and data.shape == (5, len(SWEEP_COLUMNS))


def test_ber_monotone_up_to_ci():
    res = ber_sweep(SMALL)
    ber = res.column("ber_sim")
    ci = np.array([r.ber_ci95 for r in res.rows])
    for i in range(len(ber) - 1):
        assert ber[i + 1] <= ber[i] + 2 * (ci[i] + ci[i + 1])


def test_throughput_sweep_policies():
    out = throughput_sweep(SMALL)
    assert set(out) == {"alpha_1", "alpha_0.9", "alpha_0.8", "fftn"}
    fftn = out["fftn"]
    for r in fftn.rows:
        if r.snr_db < 10:
            assert r.alpha == 1.0
    # the LUT policy is a per-point selection among the fixed tables
    np.testing.assert_array_equal(fftn.column("ber_sim")[:3], out["alpha_1"].column("ber_sim")[:3])
    assert fftn.rows[3].ber_sim == out["alpha_0.9"].rows[3].ber_sim


def test_robustness_zero_error_reproduces_fftn_sweep():
    s = Scenario(**{**SMALL.__dict__, "alpha": "lut:default"})
    plain = ber_sweep(s)
    rob = robustness_sweep(s, [0.0, 5.0])
    assert csv_body(rob[0.0].to_csv()) == csv_body(plain.to_csv())
    assert rob[5.0].metadata["sigma_e_applied"] == 5.0


def test_robustness_perturbs_selection():
    s = Scenario(**{**SMALL.__dict__, "alpha": "lut:default", "snr": (14.0, 14.0, 1.0)})
    rob = robustness_sweep(s, [0.0, 5.0])
    assert rob[0.0].rows[0].alpha == 0.9
    assert 0.8 < rob[5.0].rows[0].alpha < 1.0


def test_linkbudget_mode_adds_shadowing():
    s = Scenario(**{**SMALL.__dict__, "mode": "linkbudget", "trials": 10})
    st = simulate(s, (1.0,))
    assert st.offsets_db.std() > 0
    d = Scenario(**{**SMALL.__dict__, "trials": 10})
    assert np.all(simulate(d, (1.0,)).offsets_db == 0)


def test_pass_sim_csv():
    s = Scenario(frame=FrameConfig(M=4, N=4, mod_order=4), alpha="lut:default")
    pc = PassConfig(slots=5)
    recs = pass_sim(s, pc)
    cols, data = read_csv(pass_csv(recs, s, pc))
    assert tuple(cols) == PASS_COLUMNS and data.shape == (5, 8)


def test_format_csv_header_and_values():
    text = format_csv({"b": 1, "a": {"x": math.inf}}, ("u", "v"), [(1, 0.5), (2, 1e-12)])
    lines = text.splitlines()
    assert lines[0].startswith("# a:") and lines[1] == "# b: 1"
    assert lines[2] == "u,v" and lines[3] == "1,0.5" and lines[4] == "2,1e-12"
    assert csv_body(text) == "u,v\n1,0.5\n2,1e-12\n"


def test_validate_passes():
    checks = validate(seed=1)
    assert len(checks) >= 8
    assert all(c.passed for c in checks), [c.line() for c in checks if not c.passed]


def test_validate_catches_corrupted_ambiguity():
    checks = validate(seed=1, corrupt_ambiguity=True)
    failed = [c.name for c in checks if not c.passed]
    assert any("alpha=0.8" in name for name in failed)


def test_calibrate_lut_structure():
    s = Scenario(frame=FrameConfig(M=8, N=8, mod_order=4), model="tdl-e", snr=(0.0, 30.0, 2.0), theory_draws=8)
    lut, curves = calibrate_lut(s, 1e-3)
    assert isinstance(lut, Lut) and lut.modes[0] == (1.0, -math.inf)
    assert set(curves) == {1.0, 0.9, 0.8}
    for c in curves.values():
        assert np.all(np.diff(c) <= 1e-12)
