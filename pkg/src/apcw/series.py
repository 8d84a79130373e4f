"""Sampled signals and spectra, plus their on-disk formats.

Time series
    CSV with header ``t_s,value`` or a compact binary file::

        offset  size  field
        0       4     magic b"APTS"
        4       4     version (uint32, currently 1)
        8       8     sample_rate (float64)
        16      8     length (uint64)
        24      8*n   samples (float64)

    Everything is little-endian.

Spectra
    CSV whose first comment line declares the units, e.g.
    ``# units: m^2/Hz; rbw_Hz: 1000``, then the header ``f_Hz,psd``.

All PSDs are one-sided unless ``metadata["sided"] == "two"``.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError

BINARY_MAGIC = b"APTS"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sIdQ")

PSD_UNITS = ("m^2/Hz", "rad^2/Hz", "N^2/Hz", "V^2/Hz", "W^2/Hz", "1/Hz")


@dataclass(eq=False)
class TimeSeries:
    values: np.ndarray
    sample_rate: float
    units: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if not self.sample_rate > 0:
            raise DomainError("sample_rate must be positive")

    def __len__(self):
        return len(self.values)

    @property
    def dt(self):
        return 1.0 / self.sample_rate

    @property
    def duration(self):
        return len(self.values) / self.sample_rate

    @property
    def t(self):
        return np.arange(len(self.values)) / self.sample_rate


@dataclass(eq=False)
class SpectrumRecord:
    freqs: np.ndarray
    psd: np.ndarray
    units: str
    resolution_bandwidth: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.psd = np.asarray(self.psd, dtype=float)
        if self.freqs.shape != self.psd.shape or self.freqs.ndim != 1:
            raise DomainError("freqs and psd must be 1-D arrays of equal length")
        if self.units not in PSD_UNITS:
            raise DomainError(f"unknown PSD units {self.units!r}")
        if len(self.freqs) > 1:
            df = np.diff(self.freqs)
            if np.any(df <= 0):
                raise DomainError("freqs must be strictly ascending")
            if not np.allclose(df, df[0], rtol=1e-6, atol=0):
                raise DomainError("freqs must be uniformly spaced")
        if np.any(self.psd < 0):
            raise DomainError("psd must be non-negative")

    @property
    def df(self):
        return float(self.freqs[1] - self.freqs[0])

    def band_power(self, f_lo, f_hi):
        """Integrated PSD over [f_lo, f_hi] (rectangle rule on the bins)."""
        sel = (self.freqs >= f_lo) & (self.freqs <= f_hi)
        return float(self.psd[sel].sum() * self.df)


def _fmt(v):
    return repr(float(v))


def write_timeseries_csv(ts: TimeSeries, path):
    with open(path, "w", newline="") as fh:
        fh.write(f"# sample_rate_Hz: {_fmt(ts.sample_rate)}; units: {ts.units}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_s", "value"])
        for t, v in zip(ts.t, ts.values):
            w.writerow([_fmt(t), _fmt(v)])


def read_timeseries_csv(path):
    text = Path(path).read_text()
    comment = [ln for ln in text.splitlines() if ln.startswith("#")]
    meta = _parse_comment(comment[0]) if comment else {}
    rows = np.loadtxt(io.StringIO(text), delimiter=",", comments="#", skiprows=len(comment) + 1, ndmin=2)
    t, v = rows[:, 0], rows[:, 1]
    if "sample_rate_Hz" in meta:
        fs = float(meta["sample_rate_Hz"])
    elif len(t) > 1:
        fs = 1.0 / (t[1] - t[0])
    else:
        raise DomainError("cannot infer sample rate from a single-sample CSV")
    return TimeSeries(v, fs, units=meta.get("units", ""))


def write_timeseries_binary(ts: TimeSeries, path):
    data = np.ascontiguousarray(ts.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, float(ts.sample_rate), len(data)))
        fh.write(data.tobytes())


def read_timeseries_binary(path):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DomainError("file too short for a time-series header")
    magic, version, fs, n = _HEADER.unpack_from(raw)
    if magic != BINARY_MAGIC:
        raise DomainError(f"bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise DomainError(f"unsupported version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n:
        raise DomainError(f"expected {n} samples, found {len(body) // 8}")
    return TimeSeries(np.frombuffer(body, dtype="<f8").copy(), fs)


def write_spectrum_csv(rec: SpectrumRecord, path):
    meta = {"units": rec.units, "rbw_Hz": _fmt(rec.resolution_bandwidth)}
    for k, v in sorted(rec.metadata.items()):
        if isinstance(v, (int, float, str, bool)):
            meta[k] = v
    with open(path, "w", newline="") as fh:
        fh.write("# " + "; ".join(f"{k}: {v}" for k, v in meta.items()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["f_Hz", "psd"])
        for f, p in zip(rec.freqs, rec.psd):
            w.writerow([_fmt(f), _fmt(p)])


def read_spectrum_csv(path):
    text = Path(path).read_text()
    first = text.splitlines()[0]
    if not first.startswith("#"):
        raise DomainError("spectrum CSV must start with a units comment")
    meta = _parse_comment(first)
    rows = np.loadtxt(io.StringIO(text), delimiter=",", comments="#", skiprows=2, ndmin=2)
    units = meta.pop("units", None)
    if units is None:
        raise DomainError("spectrum CSV comment lacks 'units'")
    rbw = float(meta.pop("rbw_Hz", rows[1, 0] - rows[0, 0]))
    return SpectrumRecord(rows[:, 0], rows[:, 1], units, rbw, metadata=meta)


def _parse_comment(line):
    out = {}
    for part in line.lstrip("#").split(";"):
        if ":" in part:
            k, v = part.split(":", 1)
            out[k.strip()] = v.strip()
    return out


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
