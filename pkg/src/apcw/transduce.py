"""Mechanical motion to optical phase, and balanced-homodyne readout.

Two transduction regimes are modeled.

dispersive
    Far from the band edge the probe picks up a phase
    ``Phi(t) = sum_p K_p alpha_p(t)`` with ``K_p = c_p * integral(xi u_p dx)``.
    For antisymmetric in-plane modes ``c_p = GAP_PER_ALPHA`` (the gap changes
    by twice the single-beam amplitude) and the overlap vanishes for even p.

band_edge
    Near the band edge the probe sits on a low-finesse resonance whose
    frequency follows the gap,
    ``nu_res = nu_1 + sum_p G_p alpha_p + G_q s^2 / 2`` with
    ``s = sum_p w_p alpha_p``; phase and amplitude follow the instantaneous
    Lorentzian response.  The quadratic term is the source of even harmonics
    and of f_p +/- f_q intermodulation.

The homodyne difference current is
``di = F |t| cos(theta + Phi) - F cos(theta) + noise`` with fringe amplitude
``F = 2 V sqrt(P_out P_LO)``, so at theta = pi/2 and small Phi, di ~ -F Phi.
Detection noise is white with one-sided PSD ``F^2 S_n`` where ``S_n`` is the
noise floor expressed in rad^2/Hz.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, signal

from .errors import DomainError
from .mech import Family, MechMode
from .noise import butterworth_bandpass
from .optics import GAP_PER_ALPHA
from .series import TimeSeries

__all__ = [
    "DEFAULT_LINEWIDTH",
    "ProbeConfig",
    "TransductionModel",
    "phase_overlap",
    "band_edge_response",
    "synth_homodyne_trace",
    "rms_phase_estimate",
    "power_frequency_shift",
    "find_spectral_peaks",
    "label_peaks",
]

#: Illustrative full linewidth (Hz) of the low-finesse band-edge resonances.
DEFAULT_LINEWIDTH = 100e9


@dataclass(frozen=True)
class ProbeConfig:
    optical_frequency: float
    probe_power: float = 10e-6
    lo_power: float = 0.5e-3
    theta: float = math.pi / 2
    visibility: float = 0.95
    noise_floor_psd: float = 0.0

    def __post_init__(self):
        if self.probe_power < 0 or self.lo_power < 0:
            raise DomainError("powers must be non-negative")
        if not 0 <= self.visibility <= 1:
            raise DomainError("visibility must lie in [0, 1]")
        if self.noise_floor_psd < 0:
            raise DomainError("noise_floor_psd must be non-negative")
        if not self.optical_frequency > 0:
            raise DomainError("optical_frequency must be positive")

    @property
    def fringe_amplitude(self):
        return 2 * self.visibility * math.sqrt(self.probe_power * self.lo_power)


def _sine_overlap_ok(mode):
    return len(mode.x) > 2 and mode.x[-1] > mode.x[0]


def phase_overlap(mode: MechMode, xi):
    """Integral of xi * u(x) over the beam, in rad per meter of amplitude.

    ``xi`` is a scalar or an array sampled on ``mode.x``.
    """
    if not _sine_overlap_ok(mode):
        raise DomainError("mode has no sampled shape to integrate")
    xi = np.broadcast_to(np.asarray(xi, dtype=float), mode.x.shape)
    return float(integrate.trapezoid(xi * mode.shape, mode.x))


def _shape_weight(mode):
    """Overlap integral(u dx) / L relative to the fundamental sine (2 / pi).

    Sine shapes give 1/p for odd p; even antisymmetric modes are exactly 0.
    """
    if Family(mode.family).antisymmetric and mode.index % 2 == 0:
        return 0.0
    if not _sine_overlap_ok(mode):
        return 1.0 / mode.index if mode.index % 2 else 0.0
    length = mode.x[-1] - mode.x[0]
    return float(integrate.trapezoid(mode.shape, mode.x) / length * (math.pi / 2))


@dataclass
class TransductionModel:
    """Per-mode gains keyed by :attr:`MechMode.key`.

    ``linear_gain`` is rad/m (dispersive) or Hz/m (band_edge);
    ``quadratic_gain`` is Hz/m^2 and only used in the band-edge regime.
    """

    regime: str
    linear_gain: dict
    quadratic_gain: float = 0.0
    mode_weights: dict = field(default_factory=dict)
    resonance_nu1: float | None = None
    linewidth: float = DEFAULT_LINEWIDTH

    def __post_init__(self):
        if self.regime not in ("dispersive", "band_edge"):
            raise DomainError(f"unknown regime {self.regime!r}")
        if self.regime == "band_edge" and self.resonance_nu1 is None:
            raise DomainError("band_edge regime needs resonance_nu1")
        if not self.linewidth > 0:
            raise DomainError("linewidth must be positive")

    @classmethod
    def dispersive(cls, modes: Sequence[MechMode], xi):
        """Gains from the xi overlap; even antisymmetric modes get exactly zero."""
        gains, weights = {}, {}
        for m in modes:
            w = _shape_weight(m)
            weights[m.key] = w
            if w == 0.0:
                gains[m.key] = 0.0
                continue
            factor = GAP_PER_ALPHA if Family(m.family).antisymmetric else 1.0
            gains[m.key] = factor * phase_overlap(m, xi)
        return cls("dispersive", gains, mode_weights=weights)

    @classmethod
    def band_edge(cls, modes: Sequence[MechMode], resonance_nu1, G_linear, G_quadratic=0.0,
                  linewidth=DEFAULT_LINEWIDTH):
        """Resonance-shift gains; G_linear (Hz/m) applies to the fundamental and is scaled by overlap."""
        weights = {m.key: _shape_weight(m) for m in modes}
        gains = {k: G_linear * w for k, w in weights.items()}
        return cls("band_edge", gains, G_quadratic, weights, resonance_nu1, linewidth)


def _check_grid(trajectories):
    if not trajectories:
        raise DomainError("at least one mode trajectory is required")
    fs = trajectories[0][1].sample_rate
    n = len(trajectories[0][1])
    for _, ts in trajectories:
        if ts.sample_rate != fs or len(ts) != n:
            raise DomainError("mode trajectories must share the sample grid")
    return fs, n


def band_edge_response(resonance_nu1, G_linear, G_quadratic, modes, probe: ProbeConfig,
                       linewidth=DEFAULT_LINEWIDTH, weights=None):
    """Adiabatic phase and amplitude of the probe on a moving resonance.

    ``modes`` is a sequence of ``(MechMode, TimeSeries)`` pairs.  ``G_linear``
    is a scalar or one value per mode.  Returns ``(phase, amplitude)`` series
    for the transmission ``t = 1 / (1 - 2i (nu_probe - nu_res) / kappa)``.
    """
    fs, n = _check_grid(modes)
    if not linewidth > 0:
        raise DomainError("linewidth must be positive")
    if abs(probe.optical_frequency - resonance_nu1) > 10 * linewidth:
        raise DomainError("probe is more than 10 linewidths from the resonance")
    f_max = max(m.frequency for m, _ in modes)
    if f_max > 0.01 * linewidth:
        warnings.warn("mechanical frequency not << optical linewidth; adiabatic response is inaccurate",
                      RuntimeWarning, stacklevel=2)
    G = np.broadcast_to(np.asarray(G_linear, dtype=float), (len(modes),))
    w = np.ones(len(modes)) if weights is None else np.asarray(weights, dtype=float)
    shift = np.zeros(n)
    s = np.zeros(n)
    for gp, wp, (_, ts) in zip(G, w, modes):
        shift += gp * ts.values
        s += wp * ts.values
    nu_res = resonance_nu1 + shift + 0.5 * G_quadratic * s**2
    u = 2 * (probe.optical_frequency - nu_res) / linewidth
    phase = np.arctan(u)
    amp = 1.0 / np.sqrt(1.0 + u**2)
    meta = {"resonance_nu1_Hz": resonance_nu1, "linewidth_Hz": linewidth}
    return (TimeSeries(phase, fs, units="rad", metadata=dict(meta)),
            TimeSeries(amp, fs, units="", metadata=dict(meta)))


def _modulation(modes, model: TransductionModel, probe):
    if model.regime == "dispersive":
        phi = np.zeros(len(modes[0][1]))
        for m, ts in modes:
            phi += model.linear_gain.get(m.key, 0.0) * ts.values
        return phi, None
    gains = [model.linear_gain.get(m.key, 0.0) for m, _ in modes]
    weights = [model.mode_weights.get(m.key, 1.0) for m, _ in modes]
    ph, amp = band_edge_response(model.resonance_nu1, gains, model.quadratic_gain, modes, probe,
                                 linewidth=model.linewidth, weights=weights)
    # phase relative to the static operating point
    static = math.atan(2 * (probe.optical_frequency - model.resonance_nu1) / model.linewidth)
    static_amp = 1.0 / math.sqrt(1 + (2 * (probe.optical_frequency - model.resonance_nu1) / model.linewidth) ** 2)
    return ph.values - static, amp.values / static_amp


def synth_homodyne_trace(modes, model: TransductionModel, probe: ProbeConfig, sample_rate=None,
                         duration=None, seed=0):
    """Balanced-homodyne difference current for the given mode trajectories.

    ``modes`` is a sequence of ``(MechMode, TimeSeries)`` pairs on a common
    grid; ``sample_rate``/``duration``, when given, must agree with it.  The
    result is in units of the fringe amplitude's watts; ``metadata`` carries
    ``fringe_amplitude`` for calibration and the injected ``phi_rms``.
    """
    fs, n = _check_grid(modes)
    if sample_rate is not None and not math.isclose(sample_rate, fs, rel_tol=1e-12):
        raise DomainError("sample_rate differs from the trajectory grid")
    if duration is not None and abs(duration * fs - n) > 1:
        raise DomainError("duration differs from the trajectory grid")
    phi, amp = _modulation(list(modes), model, probe)
    F = probe.fringe_amplitude
    th = probe.theta
    mag = 1.0 if amp is None else amp
    di = F * mag * np.cos(th + phi) - F * math.cos(th)
    if probe.noise_floor_psd > 0 and F > 0:
        rng = np.random.default_rng(seed)
        di = di + F * math.sqrt(probe.noise_floor_psd * fs / 2) * rng.standard_normal(n)
    meta = {"fringe_amplitude": F, "theta": th, "regime": model.regime, "seed": int(seed),
            "phi_rms": float(np.sqrt(np.mean(phi**2))), "noise_floor_psd": probe.noise_floor_psd}
    return TimeSeries(di, fs, units="W", metadata=meta)


def rms_phase_estimate(trace: TimeSeries, f_center, half_band, calibration=None, trim=0.05):
    """RMS phase in a band around ``f_center``.

    Zero-phase Butterworth band-pass f_center +/- half_band, RMS over the
    record with a fraction ``trim`` dropped at each end (filter start-up), then
    division by the fringe amplitude (``trace.metadata["fringe_amplitude"]`` by
    default).
    """
    if calibration is None:
        calibration = trace.metadata.get("fringe_amplitude", 0.0)
    if not calibration:
        raise DomainError("calibration (fringe amplitude) must be non-zero")
    if not (0 <= trim < 0.5):
        raise DomainError("trim must be in [0, 0.5)")
    y = butterworth_bandpass(trace, f_center - half_band, f_center + half_band).values
    k = int(trim * len(y))
    y = y[k:len(y) - k]
    return float(np.sqrt(np.mean(y**2)) / abs(calibration))


def power_frequency_shift(P_out, f1_0=2_385_812.0, beta=-1.31e6):
    """Linear optical-power dependence f_1 = f1_0 + beta * P_out (beta in Hz/W)."""
    P = np.asarray(P_out, dtype=float)
    if np.any(P < 0):
        raise DomainError("P_out must be non-negative")
    out = f1_0 + beta * P
    return float(out) if out.ndim == 0 else out


# --- spectrum annotation ----------------------------------------------------


def find_spectral_peaks(spectrum, threshold_db=20.0, f_min=None):
    """Local maxima standing ``threshold_db`` above the median PSD level.

    Returns ``[(f_Hz, psd), ...]`` sorted by frequency.
    """
    psd = spectrum.psd
    floor = np.median(psd[psd > 0]) if np.any(psd > 0) else 0.0
    height = floor * 10 ** (threshold_db / 10)
    idx, _ = signal.find_peaks(psd, height=height, distance=3)
    out = [(float(spectrum.freqs[i]), float(psd[i])) for i in idx]
    if f_min is not None:
        out = [p for p in out if p[0] >= f_min]
    return out


def label_peaks(peaks, mode_freqs, tolerance):
    """Attach harmonic and intermodulation labels to spectral peaks.

    ``mode_freqs`` maps p -> f_p for the quasi-harmonic ladder.  Each peak is
    matched within ``tolerance`` against f_p, integer multiples n*f_1, and
    f_p + f_q and f_q - f_p; ``harmonic_order`` is round(f / f_1).
    """
    f1 = mode_freqs[min(mode_freqs)]
    ps = sorted(mode_freqs)
    cands = [(f"f_{p}", mode_freqs[p], "mode") for p in ps]
    n_top = int(max(mode_freqs.values()) * 2 / f1) + 1
    cands += [(f"{n}*f_1", n * f1, "harmonic") for n in range(2, n_top + 1)]
    for i, p in enumerate(ps):
        for q in ps[i:]:
            cands.append((f"f_{p}+f_{q}", mode_freqs[p] + mode_freqs[q], "sum"))
            if q != p:
                cands.append((f"f_{q}-f_{p}", mode_freqs[q] - mode_freqs[p], "difference"))
    out = []
    for f, psd in peaks:
        labels = [(name, kind) for name, fc, kind in cands if abs(f - fc) <= tolerance]
        out.append({
            "f_Hz": f,
            "psd": psd,
            "harmonic_order": int(round(f / f1)),
            "labels": [name for name, _ in labels],
            "kinds": sorted({kind for _, kind in labels}),
        })
    return out
