import numpy as np
import pytest

from apcw.errors import DomainError
from apcw.series import (BINARY_MAGIC, SpectrumRecord, TimeSeries, read_spectrum_csv,
                         read_timeseries_binary, read_timeseries_csv, write_json, write_spectrum_csv,
                         write_timeseries_binary, write_timeseries_csv)


def test_csv_round_trip(tmp_path):
    ts = TimeSeries(np.random.default_rng(0).standard_normal(50), 1e6, units="m")
    write_timeseries_csv(ts, tmp_path / "a.csv")
    back = read_timeseries_csv(tmp_path / "a.csv")
    assert back.values.tobytes() == ts.values.tobytes()
    assert back.sample_rate == ts.sample_rate and back.units == "m"
    assert (tmp_path / "a.csv").read_text().splitlines()[1] == "t_s,value"


def test_binary_round_trip(tmp_path):
    ts = TimeSeries(np.linspace(-1, 1, 33), 2.5e7)
    p = tmp_path / "a.bin"
    write_timeseries_binary(ts, p)
    raw = p.read_bytes()
    assert raw[:4] == BINARY_MAGIC
    assert len(raw) == 24 + 8 * 33
    back = read_timeseries_binary(p)
    assert back.values.tobytes() == ts.values.tobytes() and back.sample_rate == 2.5e7


def test_binary_rejects_corruption(tmp_path):
    p = tmp_path / "a.bin"
    write_timeseries_binary(TimeSeries(np.zeros(4), 1.0), p)
    raw = bytearray(p.read_bytes())
    p.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(DomainError):
        read_timeseries_binary(p)
    p.write_bytes(raw[:-8])
    with pytest.raises(DomainError):
        read_timeseries_binary(p)


def test_spectrum_round_trip(tmp_path):
    rec = SpectrumRecord(np.arange(5) * 10.0, np.arange(5) * 1e-20, "m^2/Hz", 10.0, {"theta": 1.5})
    write_spectrum_csv(rec, tmp_path / "s.csv")
    text = (tmp_path / "s.csv").read_text()
    assert text.startswith("# units: m^2/Hz")
    back = read_spectrum_csv(tmp_path / "s.csv")
    assert back.units == "m^2/Hz" and back.resolution_bandwidth == 10.0
    assert np.array_equal(back.psd, rec.psd)


@pytest.mark.parametrize("freqs,psd,units", [
    ([0.0, 2.0, 1.0], [0, 0, 0], "m^2/Hz"),
    ([0.0, 1.0, 3.0], [0, 0, 0], "m^2/Hz"),
    ([0.0, 1.0, 2.0], [0, -1, 0], "m^2/Hz"),
    ([0.0, 1.0, 2.0], [0, 0, 0], "furlongs"),
])
def test_spectrum_invariants(freqs, psd, units):
    with pytest.raises(DomainError):
        SpectrumRecord(freqs, psd, units, 1.0)


def test_json_handles_numpy(tmp_path):
    write_json({"a": np.float64(1.5), "b": np.arange(3)}, tmp_path / "x.json")
    assert '"b": [' in (tmp_path / "x.json").read_text()
