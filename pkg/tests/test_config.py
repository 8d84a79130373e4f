import json

import pytest

from apcw.config import default_document, load_config, load_config_text, parse_quantity
from apcw.errors import ConfigError, DomainError
from apcw.mech import Boundary, Family


def test_defaults_resolve():
    cfg = load_config_text("{}")
    assert cfg.beam.length == pytest.approx(107e-6, rel=1e-12)
    assert cfg.beam.stress == pytest.approx(800e6, rel=1e-12)
    assert cfg.dispersion.band_edge_gap_slope == pytest.approx(3.4e19, rel=1e-12)
    assert cfg.probe.theta == pytest.approx(1.5707963267948966, rel=1e-15)
    assert cfg.modes_override[0]["family"] is Family.Y_A
    assert cfg.modes_override[0]["m_eff"] == pytest.approx(16.3e-15, rel=1e-12)


@pytest.mark.parametrize("text,unit,value", [
    ("370 nm", "m", 370e-9), ("800 MPa", "Pa", 8e8), ("0.034 THz/nm", "Hz/m", 3.4e19),
    ("16.3 pg", "kg", 16.3e-15), ("10 uW", "W", 1e-5), ("1.1e-14 rad^2/Hz", "1/Hz", 1.1e-14),
    ("107 µm", "m", 107e-6), (2.5, "m", 2.5),
])
def test_parse_quantity(text, unit, value):
    assert parse_quantity(text, unit) == pytest.approx(value, rel=1e-12)


@pytest.mark.parametrize("bad", ["370 kg", "banana", True])
def test_parse_quantity_rejects(bad):
    with pytest.raises(DomainError):
        parse_quantity(bad, "m")


def test_override_merges():
    cfg = load_config_text('{"beam": {"length": "120 um", "boundary_condition": "clamped"}, "temperature": "3 K"}')
    assert cfg.beam.length == pytest.approx(120e-6)
    assert cfg.beam.stress == pytest.approx(800e6)
    assert cfg.beam.boundary_condition is Boundary.CLAMPED
    assert cfg.temperature == 3.0


def test_unknown_key_rejected_with_line():
    text = '{\n  "beam": {\n    "length": "107 um",\n    "lenght": "1 um"\n  }\n}\n'
    with pytest.raises(ConfigError) as e:
        load_config_text(text)
    assert "lenght" in str(e.value)
    assert e.value.line == 2


def test_bad_unit_reports_line():
    text = '{\n  "dispersion": {\n    "lattice_a": "370 kg"\n  }\n}\n'
    with pytest.raises(ConfigError) as e:
        load_config_text(text)
    assert e.value.path == "dispersion/lattice_a"
    assert e.value.line == 3


def test_invariant_violation():
    with pytest.raises(ConfigError):
        load_config_text('{"dispersion": {"nu_BE2": "340 THz"}}')


@pytest.mark.parametrize("text", ["", "[1, 2]", '{"beam": '])
def test_malformed(text):
    with pytest.raises(ConfigError):
        load_config_text(text)


def test_cross_section_replaces_uniform():
    doc = {"beam": {"cross_section": [{"x_start": "0 um", "width": "280 nm", "thickness": "200 nm"},
                                      {"x_start": "50 um", "width": "300 nm", "thickness": "200 nm"}]}}
    cfg = load_config_text(json.dumps(doc))
    assert len(cfg.beam.cross_section) == 2


def test_phononic_section():
    doc = {"phononic": {"segments": [{"length": "185 nm", "linear_mass_density": "1.8e-10 kg/m"},
                                     {"length": "185 nm", "linear_mass_density": "1.3e-10 kg/m"}],
                        "tension": "45 uN", "f_max": "3 GHz", "n_q": 11}}
    cfg = load_config_text(json.dumps(doc))
    assert cfg.phononic.period == pytest.approx(370e-9)


def test_load_from_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(default_document()))
    assert load_config(p).dispersion.n_cells == 150
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
