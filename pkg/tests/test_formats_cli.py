import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from brillouin_omit import cli, formats
from brillouin_omit.config import CONFIG_ENV, ConfigError, RunConfig, load_config, parse_quantity
from brillouin_omit.model import REFERENCE_PARAMS, drive_from_power
from brillouin_omit.synthesis import Spectrum, SpectrumMeta, detuning_map, find_dips

from conftest import langevin_oracle

W_M = REFERENCE_PARAMS.omega_m
finite = st.floats(allow_nan=False, allow_infinity=False)
positive = st.floats(min_value=5e-324, max_value=1e308, allow_nan=False)


def run(*argv):
    return cli.main([str(a) for a in argv])


# -- CSV formats -------------------------------------------------------------------

@settings(max_examples=100, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(st.tuples(finite, finite, positive), min_size=1, max_size=20),
       finite, finite, st.one_of(st.none(), finite), st.one_of(st.none(), st.integers(0, 2 ** 63 - 1)))
def test_spectrum_round_trip_bit_exact(tmp_path, rows, power, delta, temp, seed):
    w, r, s = (np.array(c) for c in zip(*rows))
    meta = SpectrumMeta(power_in=power, delta=delta, temperature=temp, seed=seed)
    path = tmp_path / "s.csv"
    formats.write_spectrum(path, Spectrum(w, r, s, meta))
    back = formats.read_spectrum(path)
    for a, b in ((w, back.omega), (r, back.r_values), (s, back.sigma)):
        assert a.tobytes() == b.tobytes()
    assert back.meta == meta


def test_spectrum_file_layout(tmp_path):
    spec = Spectrum([1.0, 2.0], [0.5, 0.25], [0.1, 0.1], SpectrumMeta(0.2778, 0.0, 23.5, 7))
    path = tmp_path / "s.csv"
    formats.write_spectrum(path, spec)
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.decode("utf-8").splitlines() == [
        "# power_w = 0.27779999999999999",
        "# delta_hz = 0",
        "# temperature_c = 23.5",
        "# seed = 7",
        "# model_version = 1",
        "omega_hz,reflectivity,sigma",
        "1,0.5,0.10000000000000001",
        "2,0.25,0.10000000000000001",
    ]


def test_map_round_trip(tmp_path, device):
    dmap = detuning_map(device, 0.0758, np.linspace(-5e6, 5e6, 7), W_M + np.linspace(-1e7, 1e7, 31), 0.01, seed=3)
    path = tmp_path / "m.csv"
    formats.write_map(path, dmap)
    back = formats.read_map(path)
    for name in ("delta_grid", "omega_grid", "r_matrix", "sigma"):
        assert getattr(back, name).tobytes() == getattr(dmap, name).tobytes()
    assert back.meta.power_in == dmap.meta.power_in
    assert back.meta.seed == dmap.meta.seed


def test_no_temp_files_left(tmp_path):
    formats.write_spectrum(tmp_path / "s.csv", Spectrum([1.0], [0.5], [0.1]))
    assert [p.name for p in tmp_path.iterdir()] == ["s.csv"]


GOOD = "# power_w = 0.1\nomega_hz,reflectivity,sigma\n1,0.5,0.1\n2,0.4,0.1\n"


@pytest.mark.parametrize("text,line", [
    (GOOD.replace("2,0.4,0.1", "2,abc,0.1"), 4),
    (GOOD.replace("2,0.4,0.1", "2,0.4"), 4),
    (GOOD.replace("2,0.4,0.1", "2,nan,0.1"), 4),
    (GOOD.replace("# power_w", "# colour"), 1),
    (GOOD.replace("omega_hz", "freq_hz"), 2),
    (GOOD + "# seed = 3\n", 5),
])
def test_malformed_file_names_line(tmp_path, text, line):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(formats.FormatError, match=f"bad.csv:{line}:"):
        formats.read_spectrum(path)


@pytest.mark.parametrize("text", ["", "# power_w = 1\n", "omega_hz,reflectivity,sigma\n",
                                  GOOD.replace("1,0.5,0.1", "1,0.5,0")])
def test_malformed_file_without_rows(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(formats.FormatError, match="bad.csv"):
        formats.read_spectrum(path)


def test_ragged_map_rejected(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("delta_hz,omega_hz,reflectivity,sigma\n0,1,0.5,0.1\n0,2,0.5,0.1\n1,1,0.5,0.1\n")
    with pytest.raises(formats.FormatError, match="rectangular"):
        formats.read_map(path)


# -- config -----------------------------------------------------------------------

def test_default_config_is_reference_device():
    cfg = load_config(None)
    assert cfg == RunConfig()
    assert cfg.system == REFERENCE_PARAMS


def test_config_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"system": {"kappa_s": 4e6}, "seed": 5, "omega_grid": {"span": 1e7, "points": 11}}))
    cfg = load_config(str(path))
    assert cfg.system.kappa_s == 4e6
    assert cfg.system.gamma_m == REFERENCE_PARAMS.gamma_m
    assert cfg.seed == 5
    assert cfg.omega_grid.around(0.0).size == 11


@pytest.mark.parametrize("doc", [
    {"colour": 1},
    {"system": {"kapa_s": 1e6}},
    {"system": {"kappa_s": -1.0}},
    {"system": {"kappa_s": "fast"}},
    {"noise_sigma": -0.1},
    {"omega_grid": {"span": 1e6, "points": 1}},
    [1, 2],
])
def test_invalid_config_rejected(tmp_path, doc):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_config_from_environment(tmp_path, monkeypatch):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"seed": 11}))
    monkeypatch.setenv(CONFIG_ENV, str(path))
    assert load_config(None).seed == 11
    assert load_config(None) == load_config(str(path))


@pytest.mark.parametrize("text,unit,value", [
    ("277.8mW", "W", 0.2778),
    ("5 MHz", "Hz", 5e6),
    ("-3.5kHz", "Hz", -3500.0),
    ("0.301", "W", 0.301),
    ("1e-3W", "W", 1e-3),
    ("12.43GHz", "Hz", 12.43e9),
])
def test_parse_quantity(text, unit, value):
    assert parse_quantity(text, unit) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["fast", "5 MW", "5 xHz", "", "1..2Hz"])
def test_parse_quantity_rejects(text):
    with pytest.raises(ConfigError):
        parse_quantity(text, "Hz")


# -- simulate ----------------------------------------------------------------------

def test_simulate_strong_two_dips(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert run("simulate", "--power", "277.8mW", "--delta", "0MHz", "--out", out) == 0
    spec = formats.read_spectrum(out)
    idx = find_dips(spec.r_values)
    assert idx.size == 2
    step = spec.omega[1] - spec.omega[0]
    # dense-grid linear-solve oracle: dips 10.7002 MHz apart; each grid minimum
    # lies within one step of its true dip
    assert spec.omega[idx[1]] - spec.omega[idx[0]] == pytest.approx(10.7002e6, abs=2 * step)
    assert spec.meta.power_in == 0.2778
    assert "wrote 601 points" in capsys.readouterr().out


def test_simulate_zero_power_is_bare_lorentzian(tmp_path, device):
    out = tmp_path / "s.csv"
    assert run("simulate", "--power", "0W", "--delta", "2MHz", "--out", out) == 0
    spec = formats.read_spectrum(out)
    _, _, ref = langevin_oracle(device.kappa_s, device.gamma_m, 0.0, 2e6, spec.omega - W_M, device.amp_a)
    assert np.allclose(spec.r_values, ref, rtol=0, atol=1e-12)
    assert find_dips(spec.r_values).size == 1


def test_simulate_temperature_matches_delta(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    t_ref = RunConfig().thermal.t_ref
    assert run("simulate", "--power", "0.1W", "--temperature", t_ref, "--seed", 4,
               "--noise", 0.01, "--out", a) == 0
    assert run("simulate", "--power", "0.1W", "--delta", "0Hz", "--seed", 4,
               "--noise", 0.01, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run("simulate", "--power", "0.1W", "--delta", "1MHz", "--seed", 9,
                   "--noise", 0.02, "--out", path) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("argv", [
    ("simulate", "--power", "0.1W"),
    ("simulate", "--power", "0.1W", "--delta", "0Hz", "--temperature", "23"),
    ("simulate", "--power", "fast", "--delta", "0Hz"),
    ("simulate", "--power=-1W", "--delta", "0Hz"),
])
def test_simulate_usage_errors(tmp_path, argv, capsys):
    assert run(*argv, "--out", tmp_path / "s.csv") == 2
    assert "error" in capsys.readouterr().err


def test_bad_config_exit_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"colour": 1}')
    assert run("--config", cfg, "classify", "--power", "0.1W") == 2
    assert "colour" in capsys.readouterr().err


def test_missing_config_exit_3(tmp_path, capsys):
    assert run("--config", tmp_path / "nope.json", "classify", "--power", "0.1W") == 3
    assert "I/O error" in capsys.readouterr().err


def test_unwritable_output_exit_3(tmp_path):
    assert run("simulate", "--power", "0.1W", "--delta", "0Hz", "--out", tmp_path / "missing" / "s.csv") == 3


# -- map ---------------------------------------------------------------------------

def test_map_row_equals_simulate(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"delta_grid": {"span": 4e6, "points": 5}}))
    m, s = tmp_path / "m.csv", tmp_path / "s.csv"
    assert run("--config", cfg, "map", "--power", "75.8mW", "--out", m) == 0
    assert run("--config", cfg, "simulate", "--power", "75.8mW", "--delta", "2MHz", "--out", s) == 0
    dmap, spec = formats.read_map(m), formats.read_spectrum(s)
    assert dmap.delta_grid.tolist() == [-4e6, -2e6, 0.0, 2e6, 4e6]
    assert dmap.r_matrix[3].tobytes() == spec.r_values.tobytes()
    assert dmap.omega_grid.tobytes() == spec.omega.tobytes()


# -- fit ---------------------------------------------------------------------------

def test_fit_single_noiseless_file(tmp_path, capsys):
    data, out = tmp_path / "s.csv", tmp_path / "fit.json"
    assert run("simulate", "--power", "277.8mW", "--delta", "1MHz", "--out", data) == 0
    capsys.readouterr()
    assert run("fit", data, "--out", out) == 0
    result = json.loads(out.read_text())
    p = result["parameters"]
    g = drive_from_power(REFERENCE_PARAMS, 0.2778).g_m
    expected = {"omega_m": REFERENCE_PARAMS.omega_m, "gamma_m": REFERENCE_PARAMS.gamma_m,
                "kappa_s": REFERENCE_PARAMS.kappa_s, "g_m[0]": g, "delta[0]": 1e6}
    for name, value in expected.items():
        assert p[name]["value"] == pytest.approx(value, rel=1e-6)
    assert result["success"]
    assert result["files"] == [str(data)]
    assert out.with_suffix(".txt").read_text() == capsys.readouterr().out


def test_fit_empty_file_list(capsys):
    assert run("fit") == 2
    assert "at least one" in capsys.readouterr().err


def test_fit_malformed_file(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text(GOOD.replace("2,0.4,0.1", "2,x,0.1"))
    assert run("fit", path) == 2
    assert "bad.csv:4" in capsys.readouterr().err


def test_fit_missing_file(tmp_path):
    assert run("fit", tmp_path / "nope.csv") == 3


# -- classify / report -----------------------------------------------------------------

def _classify(capsys, *argv):
    assert run("classify", *argv) == 0
    return dict(line.split(" = ") for line in capsys.readouterr().out.splitlines())


def test_classify_strong(capsys):
    out = _classify(capsys, "--power", "301mW")
    assert out["regime"] == "Strong"
    assert float(out["strong_threshold"].split()[0]) == pytest.approx(5.284e6, abs=1e3)
    assert out["quantum_coherent"] == "false"


def test_classify_split_unresolved(capsys):
    out = _classify(capsys, "--power", "100mW")
    assert out["regime"] == "SplitUnresolved"
    assert float(out["g_m"].split()[0]) == pytest.approx(3.49336e6, rel=1e-5)
    assert float(out["n_th"]) == pytest.approx(495.69, abs=0.01)


def test_classify_by_coupling(capsys):
    out = _classify(capsys, "--g-m", "0.5MHz")
    assert out["regime"] == "Weak"
    out = _classify(capsys, "--g-m", "1Hz", "--temperature", "0")
    assert out["quantum_coherent"] == "true"


def test_classify_needs_one_drive(capsys):
    assert run("classify") == 2
    assert run("classify", "--power", "1W", "--g-m", "1Hz") == 2


def test_report_table(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert run("report", "--out", out) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "power_w,photons,g_m_hz,splitting_hz,regime"
    assert len(rows) == 1 + len(cli.REPORT_POWERS)
    last = rows[-1].split(",")
    assert float(last[2]) == pytest.approx(6.06075375e6, rel=1e-9)
    assert last[4] == "Strong"
    assert "threshold_power_w = 0.228791" in capsys.readouterr().out
