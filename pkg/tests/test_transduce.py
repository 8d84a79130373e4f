import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apcw.errors import DomainError
from apcw.mech import Family, make_mode, sine_shape
from apcw.noise import LangevinParams, langevin_trajectory, welch_psd
from apcw.series import TimeSeries
from apcw.transduce import (ProbeConfig, TransductionModel, band_edge_response, find_spectral_peaks,
                            label_peaks, phase_overlap, power_frequency_shift, rms_phase_estimate,
                            synth_homodyne_trace)

from conftest import F_1, L_BEAM, sine_mode, tone

FS = 40e6
N = 2**18
NU1 = 343.8e12


def fine_mode(p, family=Family.Y_A):
    x, u = sine_shape(p, L_BEAM, 20001)
    return make_mode(p, p * F_1, 16.3e-15, family=family, x=x, shape=u)


def sinusoid(mode, amp, n=N, fs=FS, phase=0.0):
    return mode, TimeSeries(tone(mode.frequency, fs, n, amp, phase), fs, units="m")


def line_power(rec, f, half=3):
    return rec.band_power(f - half * rec.df, f + half * rec.df)


class TestPhaseOverlap:
    xi = 1e12

    def test_odd_sine(self):
        assert phase_overlap(fine_mode(1), self.xi) == pytest.approx(2 * L_BEAM * self.xi / math.pi, rel=1e-6)
        assert phase_overlap(fine_mode(3), self.xi) == pytest.approx(phase_overlap(fine_mode(1), self.xi) / 3, rel=1e-6)

    @pytest.mark.parametrize("p", [2, 4, 6])
    def test_even_sine_vanishes(self, p):
        odd = phase_overlap(fine_mode(1), self.xi)
        assert abs(phase_overlap(fine_mode(p), self.xi)) < 1e-10 * odd

    def test_calibrated_reference_phase(self):
        xi = 4e-3 * math.pi / (2 * L_BEAM * 64.4e-12)
        assert phase_overlap(fine_mode(1), xi) * 64.4e-12 == pytest.approx(4e-3, rel=1e-6)
        assert xi == pytest.approx(9.12e11, rel=0.01)

    def test_needs_shape(self):
        with pytest.raises(DomainError):
            phase_overlap(make_mode(1, F_1, 16.3e-15), 1.0)


class TestModel:
    def test_even_antisymmetric_weights_exactly_zero(self):
        modes = [fine_mode(p) for p in range(1, 7)]
        m = TransductionModel.dispersive(modes, 1e12)
        for mode in modes:
            if mode.index % 2 == 0:
                assert m.linear_gain[mode.key] == 0.0
                assert m.mode_weights[mode.key] == 0.0
            else:
                assert m.linear_gain[mode.key] != 0.0

    def test_antisymmetric_factor(self):
        a = TransductionModel.dispersive([fine_mode(1)], 1e12).linear_gain["Y_A:1"]
        g = TransductionModel.dispersive([fine_mode(1, Family.GENERIC)], 1e12).linear_gain["generic:1"]
        assert a == pytest.approx(2 * g, rel=1e-15)

    def test_band_edge_weights(self):
        modes = [fine_mode(p) for p in range(1, 4)]
        m = TransductionModel.band_edge(modes, NU1, 6e19, 1e29)
        assert m.linear_gain["Y_A:1"] == pytest.approx(6e19, rel=1e-6)
        assert m.linear_gain["Y_A:2"] == 0.0
        assert m.linear_gain["Y_A:3"] == pytest.approx(2e19, rel=1e-6)

    def test_validation(self):
        with pytest.raises(DomainError):
            TransductionModel("ballistic", {})
        with pytest.raises(DomainError):
            TransductionModel("band_edge", {})
        with pytest.raises(DomainError):
            ProbeConfig(3e14, visibility=1.5)
        with pytest.raises(DomainError):
            ProbeConfig(3e14, probe_power=-1.0)


def phase_model(mode, gain):
    return TransductionModel("dispersive", {mode.key: gain})


class TestHomodyne:
    mode = fine_mode(1)

    def test_phase_quadrature_linear(self):
        probe = ProbeConfig(3.35e14, theta=math.pi / 2)
        tr = synth_homodyne_trace([sinusoid(self.mode, 1.0)], phase_model(self.mode, 1e-3), probe)
        F = probe.fringe_amplitude
        expect = -F * np.sin(1e-3 * tone(self.mode.frequency, FS, N))
        assert np.allclose(tr.values, expect, rtol=0, atol=1e-12 * F)
        assert tr.metadata["fringe_amplitude"] == F

    def test_amplitude_quadrature_second_order(self):
        traj = sinusoid(self.mode, 1.0)
        model = phase_model(self.mode, 5e-3)
        on = welch_psd(synth_homodyne_trace([traj], model, ProbeConfig(3.35e14, theta=math.pi / 2)), 4096)
        off = welch_psd(synth_homodyne_trace([traj], model, ProbeConfig(3.35e14, theta=0.0)), 4096)
        f = self.mode.frequency
        assert 10 * math.log10(line_power(on, f) / line_power(off, f)) > 40
        # theta = 0 leaves only the second-order line at 2f
        assert line_power(off, 2 * f) > 1e6 * line_power(off, f)

    def test_zero_visibility(self):
        tr = synth_homodyne_trace([sinusoid(self.mode, 1.0)], phase_model(self.mode, 1e-3),
                                  ProbeConfig(3.35e14, visibility=0.0, noise_floor_psd=1e-12))
        assert not np.any(tr.values)

    def test_grid_mismatch(self):
        a = sinusoid(self.mode, 1.0)
        b = sinusoid(fine_mode(3), 1.0, n=N // 2)
        with pytest.raises(DomainError):
            synth_homodyne_trace([a, b], TransductionModel.dispersive([a[0], b[0]], 1e12), ProbeConfig(3.35e14))
        with pytest.raises(DomainError):
            synth_homodyne_trace([a], phase_model(self.mode, 1.0), ProbeConfig(3.35e14), sample_rate=1e6)

    def test_noise_seed_determinism(self):
        args = ([sinusoid(self.mode, 1.0)], phase_model(self.mode, 1e-3), ProbeConfig(3.35e14, noise_floor_psd=1e-12))
        a = synth_homodyne_trace(*args, seed=5).values
        b = synth_homodyne_trace(*args, seed=5).values
        assert a.tobytes() == b.tobytes()


class TestRMSPhase:
    def test_round_trip_langevin(self):
        m = make_mode(1, F_1, 16.3e-15, Q=1e3, family=Family.Y_A)
        fs = 25e6
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ts = langevin_trajectory(LangevinParams(m, fs, 4e-3, rng_seed=2))
        gain = 4.5e-3 / np.sqrt(np.mean(ts.values**2))
        tr = synth_homodyne_trace([(m, ts)], phase_model(m, gain), ProbeConfig(3.35e14, noise_floor_psd=1e-14))
        assert tr.metadata["phi_rms"] == pytest.approx(4.5e-3, rel=1e-12)
        est = rms_phase_estimate(tr, m.frequency, 100e3)
        assert est == pytest.approx(4.5e-3, rel=0.05)

    def test_pure_noise_band_integral(self):
        S = 1e-10
        F = ProbeConfig(3.35e14).fringe_amplitude
        n = 2**21
        rng = np.random.default_rng(3)
        tr = TimeSeries(F * math.sqrt(S * FS / 2) * rng.standard_normal(n), FS, metadata={"fringe_amplitude": F})
        est = rms_phase_estimate(tr, F_1, 100e3)
        assert est == pytest.approx(math.sqrt(S * 2 * 100e3), rel=0.10)

    def test_calibration_scaling(self):
        tr = TimeSeries(tone(F_1, FS, N), FS, metadata={"fringe_amplitude": 1.0})
        a = rms_phase_estimate(tr, F_1, 100e3)
        assert rms_phase_estimate(tr, F_1, 100e3, calibration=2.0) == pytest.approx(a / 2, rel=1e-14)
        with pytest.raises(DomainError):
            rms_phase_estimate(tr, F_1, 100e3, calibration=0.0)

    def test_small_signal_linearity(self):
        mode = fine_mode(1)
        ests = []
        for amp in (1.0, 2.0):
            tr = synth_homodyne_trace([sinusoid(mode, amp)], phase_model(mode, 1e-2), ProbeConfig(3.35e14))
            ests.append(rms_phase_estimate(tr, mode.frequency, 100e3))
        assert ests[1] / ests[0] == pytest.approx(2.0, rel=0.01)


class TestBandEdge:
    probe = ProbeConfig(NU1)

    def test_linear_only_gives_fundamental(self):
        m = fine_mode(1)
        ph, amp = band_edge_response(NU1, 6e19, 0.0, [sinusoid(m, 33e-12)], self.probe)
        sp = welch_psd(ph, 4096)
        f = m.frequency
        assert line_power(sp, 2 * f) < 1e-12 * line_power(sp, f)
        assert np.all(amp.values <= 1.0)

    def test_intermodulation_amplitude(self):
        m1, m2 = fine_mode(1), make_mode(2, 1.37 * F_1, 16.3e-15, family=Family.GENERIC)
        A1, A2, Gq, kappa = 30e-12, 20e-12, 4e29, 100e9
        ph, _ = band_edge_response(NU1, [0.0, 0.0], Gq, [sinusoid(m1, A1), sinusoid(m2, A2)], self.probe,
                                   linewidth=kappa)
        sp = welch_psd(ph, 4096)
        amp = Gq * A1 * A2 / kappa  # product-to-sum term of 2 Gq s^2 / (2 kappa)
        for f in (m1.frequency + m2.frequency, m2.frequency - m1.frequency):
            assert line_power(sp, f) == pytest.approx(amp**2 / 2, rel=0.01)

    def test_adiabatic_warning(self):
        with pytest.warns(RuntimeWarning, match="adiabatic"):
            band_edge_response(NU1, 6e19, 0.0, [sinusoid(fine_mode(1), 1e-12)], self.probe, linewidth=1e8)

    def test_far_detuning_rejected(self):
        with pytest.raises(DomainError):
            band_edge_response(NU1, 6e19, 0.0, [sinusoid(fine_mode(1), 1e-12)], ProbeConfig(NU1 + 5e12))


class TestPowerShift:
    def test_values(self):
        assert power_frequency_shift(0.0) == 2385812.0
        assert power_frequency_shift(10e-6) == pytest.approx(2385812.0 - 13.1, abs=1e-6)
        assert power_frequency_shift(1e-3, beta=0.0) == 2385812.0

    def test_negative_power(self):
        with pytest.raises(DomainError):
            power_frequency_shift(-1e-6)

    @settings(max_examples=30, deadline=None)
    @given(P=st.floats(0.0, 1e-3), beta=st.floats(-1e7, 1e7))
    def test_linear(self, P, beta):
        assert power_frequency_shift(P, beta=beta) == pytest.approx(2385812.0 + beta * P, rel=1e-12, abs=1e-9)


class TestPeaks:
    def test_labels(self):
        mf = {1: 1.0e6, 2: 2.01e6, 3: 3.03e6}
        out = label_peaks([(1.0e6, 1.0), (2.0e6, 0.1), (4.03e6, 0.01)], mf, 2e3)
        assert out[0]["labels"] == ["f_1"] and out[0]["harmonic_order"] == 1
        assert "2*f_1" in out[1]["labels"] and "f_1+f_1" in out[1]["labels"]
        assert "f_1+f_3" in out[2]["labels"] and out[2]["harmonic_order"] == 4

    def test_find_peaks_threshold(self):
        fs = 1e6
        rng = np.random.default_rng(0)
        x = tone(100e3, fs, 2**16) + 1e-3 * rng.standard_normal(2**16)
        peaks = find_spectral_peaks(welch_psd(x, 1000, sample_rate=fs))
        assert [round(f) for f, _ in peaks] == [100000]
