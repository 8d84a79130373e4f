"""Command-line front end: ``apcw modes|spectrum|report|coupling``.

Each command loads a scenario (bundled defaults when ``--config`` is
omitted), runs one experiment and writes CSV/JSON files plus a gnuplot stub
into the output directory (``--out`` > ``$APCW_OUT`` > ``outputs.directory``).

Exit status is 0 on success, 2 for invalid input and 3 for numerical
failures; errors are also printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, load_config, load_config_text
from .errors import ApcwError, ConfigError, DomainError, NumericalError
from .mech import (Boundary, Family, analytic_frequencies, dispersion_deviation, fem_eigenmodes,
                   make_mode, phononic_bands, sine_shape)
from .noise import (LangevinParams, langevin_trajectory, rbw_to_segment_length, sql_report,
                    welch_psd)
from .optics import (GAP_PER_ALPHA, coupling_from_slope, coupling_sweep, delta_kx, dnu_dgap,
                     resonance_ladder, xi_dispersive)
from .series import write_json, write_spectrum_csv
from .transduce import (TransductionModel, find_spectral_peaks, label_peaks,
                        synth_homodyne_trace)

COMMANDS = ("modes", "spectrum", "report", "coupling")


# --- shared helpers ---------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _write_gnuplot(path, data_file, xcol, ycols, xlabel, ylabel, logy=False):
    lines = [
        f"# gnuplot script for {data_file}",
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logy:
        lines.append("set logscale y")
    plots = ", ".join(f"'{data_file}' using {xcol}:{c} with lines" for c in ycols)
    lines.append(f"plot {plots}")
    Path(path).write_text("\n".join(lines) + "\n")


def reference_mode(cfg: ScenarioConfig, modes):
    """The Y_A fundamental when present, else the lowest mode."""
    for m in modes:
        if m.family == Family.Y_A and m.index == 1:
            return m
    return modes[0]


def scenario_modes(cfg: ScenarioConfig, p_max):
    """Quasi-harmonic mode ladder for the scenario.

    Frequency ratios f_p / f_1 come from the beam model (closed form when the
    beam is uniform and hinged, FEM otherwise).  A p = 1 override rescales the
    ladder of its family to the given frequency; overrides with p > 1 replace
    individual rungs.
    """
    beam = cfg.beam
    if beam.is_uniform and beam.boundary_condition == Boundary.HINGED:
        base = analytic_frequencies(beam, p_max, cfg.temperature)
    else:
        n_el = max(cfg.mech.get("n_elements", 200), 10 * p_max)
        base = fem_eigenmodes(beam, p_max, n_el, cfg.temperature)
    T = cfg.temperature
    if not cfg.modes_override:
        return [make_mode(m.index, m.frequency, m.m_eff, beam.quality_factor, T, Family.GENERIC,
                          m.x, m.shape) for m in base]
    out = []
    f_ref = base[0].frequency
    for ov in cfg.modes_override:
        if ov["p"] != 1:
            continue
        scale = ov["f"] / f_ref
        for m in base:
            m_eff = ov["m_eff"] if ov["m_eff"] is not None else m.m_eff
            out.append(make_mode(m.index, m.frequency * scale, m_eff, ov["Q"], T, ov["family"], m.x, m.shape))
    for ov in cfg.modes_override:
        if ov["p"] == 1 or ov["p"] > p_max:
            continue
        out = [m for m in out if not (m.family == ov["family"] and m.index == ov["p"])]
        x, u = sine_shape(ov["p"], beam.length)
        m_eff = ov["m_eff"] if ov["m_eff"] is not None else base[ov["p"] - 1].m_eff
        out.append(make_mode(ov["p"], ov["f"], m_eff, ov["Q"], T, ov["family"], x, u))
    if not out:
        raise ConfigError("modes_override needs a p = 1 entry to anchor the ladder")
    return sorted(out, key=lambda m: (m.frequency, m.key))


def dispersive_xi(cfg: ScenarioConfig):
    if cfg.transduction.get("xi") is not None:
        return cfg.transduction["xi"]
    return xi_dispersive(cfg.dispersion, cfg.probe.optical_frequency)


def _mode_row(m):
    return [m.index, m.family.value, m.frequency, m.m_eff, m.alpha_zp, m.alpha_th, m.Q]


MODE_HEADER = ["p", "family", "f_Hz", "m_eff_kg", "alpha_zp_m", "alpha_th_m", "Q"]


# --- experiments ------------------------------------------------------------


def run_modes(cfg: ScenarioConfig, boundary=None, n_elements=None):
    beam = cfg.beam
    if boundary is not None:
        beam = dataclasses.replace(beam, boundary_condition=Boundary.parse(boundary))
    p_max = cfg.mech.get("p_max", 5)
    n_el = n_elements or cfg.mech.get("n_elements", 200)
    fem = fem_eigenmodes(beam, p_max, n_el, cfg.temperature)
    analytic = None
    if beam.is_uniform:
        hinged = dataclasses.replace(beam, boundary_condition=Boundary.HINGED)
        analytic = analytic_frequencies(hinged, p_max, cfg.temperature)
    rows = []
    dfem = dict(dispersion_deviation(fem)) if len(fem) > 1 else {}
    dan = dict(dispersion_deviation(analytic)) if analytic and len(analytic) > 1 else {}
    for i, m in enumerate(fem):
        fa = analytic[i].frequency if analytic else math.nan
        rows.append([m.index, fa, m.frequency, (m.frequency - fa) / fa if analytic else math.nan,
                     dan.get(m.index, math.nan), dfem.get(m.index, math.nan)])
    bands = None
    if cfg.phononic is not None:
        bands = phononic_bands(cfg.phononic, cfg.phononic_grid["f_max"], cfg.phononic_grid["n_q"])
    return {"beam": beam, "analytic": analytic, "fem": fem, "comparison": rows, "n_elements": n_el,
            "bands": bands, "overrides": scenario_modes(cfg, p_max) if cfg.modes_override else []}


def run_spectrum(cfg: ScenarioConfig, regime=None, seed=None):
    sim = cfg.simulation
    regime = regime or cfg.transduction.get("regime", "dispersive")
    seed = sim.get("seed", 0) if seed is None else seed
    modes = scenario_modes(cfg, sim.get("p_max", 5))
    fs, duration = sim["sample_rate"], sim["duration"]
    seeds = np.random.SeedSequence(seed).generate_state(len(modes) + 1)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        trajs = [(m, langevin_trajectory(LangevinParams(m, fs, duration, int(s))))
                 for m, s in zip(modes, seeds[:-1])]
        if regime == "dispersive":
            model = TransductionModel.dispersive(modes, dispersive_xi(cfg))
            probe = cfg.probe
        else:
            nu1 = resonance_ladder(cfg.dispersion, 1)[0][1]
            ref = reference_mode(cfg, modes)
            factor = GAP_PER_ALPHA if ref.family.antisymmetric else 1.0
            G_lin = factor * dnu_dgap(cfg.dispersion, nu1)
            model = TransductionModel.band_edge(modes, nu1, G_lin, cfg.transduction.get("quadratic_gain", 0.0),
                                                cfg.transduction.get("linewidth", 100e9))
            probe = dataclasses.replace(cfg.probe,
                                        optical_frequency=nu1 + cfg.transduction.get("band_edge_detuning", 0.0))
        trace = synth_homodyne_trace(trajs, model, probe, seed=int(seeds[-1]))
    seg = rbw_to_segment_length(fs, sim["rbw"])
    spec = welch_psd(trace, seg)
    spec.metadata.update({"probe_power_W": probe.probe_power, "theta_rad": probe.theta,
                          "noise_floor_psd": probe.noise_floor_psd, "regime": regime, "seed": int(seed)})
    f1 = reference_mode(cfg, modes).frequency
    ladder = {}
    for m in modes:
        if m.family == reference_mode(cfg, modes).family:
            ladder[m.index] = m.frequency
    peaks = find_spectral_peaks(spec, sim.get("peak_threshold_db", 20.0), f_min=0.5 * f1)
    labeled = label_peaks(peaks, ladder, 3 * spec.resolution_bandwidth)
    return {"regime": regime, "seed": int(seed), "modes": modes, "trajectories": trajs, "model": model,
            "probe": probe, "trace": trace, "spectrum": spec, "peaks": labeled, "ladder": ladder,
            "warnings": [str(w.message) for w in caught]}


def run_report(cfg: ScenarioConfig):
    modes = scenario_modes(cfg, 1)
    m = reference_mode(cfg, modes)
    phase_per_m = None
    try:
        model = TransductionModel.dispersive([m], dispersive_xi(cfg))
        phase_per_m = abs(model.linear_gain[m.key])
    except DomainError:
        pass
    rep = sql_report(m, cfg.probe.probe_power, cfg.temperature, phase_per_meter=phase_per_m,
                     optical_frequency=cfg.probe.optical_frequency)
    return {"mode": m, "report": rep}


def run_coupling(cfg: ScenarioConfig):
    disp = cfg.dispersion
    c = cfg.coupling
    nus = np.linspace(c["nu_start"], c["nu_stop"], c["n_points"])
    keep = nus < disp.nu_BE
    notes = []
    if not np.all(keep):
        notes.append(f"sweep truncated: {int((~keep).sum())} points at or above the band edge "
                     f"{disp.nu_BE!r} Hz removed")
    nus = nus[keep]
    if len(nus) == 0:
        raise DomainError("coupling sweep lies entirely at or above the band edge")
    modes = scenario_modes(cfg, 1)
    m = reference_mode(cfg, modes)
    anti = c.get("antisymmetric", True)
    sweep = coupling_sweep(disp, nus, m, anti)
    L = disp.crystal_length
    ladder = []
    for n, nu in resonance_ladder(disp, c.get("ladder_n_max", 10)):
        dk = delta_kx(disp, nu)
        target = n * math.pi / L
        slope = dnu_dgap(disp, nu)
        ladder.append([n, nu, disp.nu_BE - nu, dk, target, (dk - target) / target, slope,
                       coupling_from_slope(slope, m, anti)])
    i = int(np.argmax(sweep["G_Hz"]))
    nu1 = ladder[0][1]
    summary = {
        "mode": m.key,
        "alpha_zp_m": m.alpha_zp,
        "antisymmetric": anti,
        "band_edge_gap_slope_Hz_per_m": disp.band_edge_gap_slope,
        "G_max_Hz": float(sweep["G_Hz"][i]),
        "nu_at_G_max_Hz": float(nus[i]),
        "nu_1_Hz": nu1,
        "G_at_nu_1_Hz": ladder[0][7],
        "n_points": int(len(nus)),
        "notes": notes,
    }
    return {"sweep": sweep, "ladder": ladder, "summary": summary, "warnings": notes}


# --- writers ----------------------------------------------------------------


def _formats(cfg):
    return set(cfg.outputs.get("formats", ["csv", "json", "gnuplot"]))


def write_modes(res, cfg, out: Path):
    fmts = _formats(cfg)
    primary = res["analytic"] if (res["analytic"] and res["beam"].boundary_condition == Boundary.HINGED) else res["fem"]
    if "csv" in fmts:
        _write_csv(out / "modes.csv", MODE_HEADER, [_mode_row(m) for m in primary])
        _write_csv(out / "modes_fem.csv", MODE_HEADER, [_mode_row(m) for m in res["fem"]])
        _write_csv(out / "modes_comparison.csv",
                   ["p", "f_analytic_Hz", "f_fem_Hz", "rel_diff", "delta_f_analytic_Hz", "delta_f_fem_Hz"],
                   res["comparison"])
        if res["overrides"]:
            _write_csv(out / "modes_scenario.csv", MODE_HEADER, [_mode_row(m) for m in res["overrides"]])
        if res["bands"] is not None:
            b = res["bands"]
            _write_csv(out / "phononic_bands.csv", ["q_rad_per_m"] + [f"band_{j + 1}_Hz" for j in range(b.freqs.shape[1])],
                       [[q, *row] for q, row in zip(b.q, b.freqs)])
    if "json" in fmts:
        rel = [abs(r[3]) for r in res["comparison"] if not math.isnan(r[3])]
        summary = {
            "boundary_condition": res["beam"].boundary_condition.value,
            "n_elements": res["n_elements"],
            "f1_analytic_Hz": res["analytic"][0].frequency if res["analytic"] else None,
            "f1_fem_Hz": res["fem"][0].frequency,
            "max_rel_diff_fem_vs_analytic": max(rel) if rel else None,
            "m_eff_fem_kg": [m.m_eff for m in res["fem"]],
            "scenario_modes": [dict(zip(MODE_HEADER, _mode_row(m))) for m in res["overrides"]],
        }
        if res["bands"] is not None:
            summary["phononic_gaps_Hz"] = [list(g) for g in res["bands"].gaps]
        write_json(summary, out / "modes.json")
    if "gnuplot" in fmts and "csv" in fmts:
        _write_gnuplot(out / "modes.gp", "modes_comparison.csv", 1, [5, 6], "p", "delta f (Hz)")


def write_spectrum(res, cfg, out: Path):
    fmts = _formats(cfg)
    if "csv" in fmts:
        write_spectrum_csv(res["spectrum"], out / "spectrum.csv")
        _write_csv(out / "spectrum_modes.csv", MODE_HEADER, [_mode_row(m) for m in res["modes"]])
    if "json" in fmts:
        write_json({
            "regime": res["regime"],
            "seed": res["seed"],
            "resolution_bandwidth_Hz": res["spectrum"].resolution_bandwidth,
            "ladder_Hz": {str(k): v for k, v in sorted(res["ladder"].items())},
            "phi_rms_rad": res["trace"].metadata["phi_rms"],
            "peaks": res["peaks"],
            "warnings": res["warnings"],
        }, out / "peaks.json")
    if "gnuplot" in fmts and "csv" in fmts:
        _write_gnuplot(out / "spectrum.gp", "spectrum.csv", 1, [2], "f (Hz)", "PSD", logy=True)


def report_text(rep):
    d = rep.to_dict()
    b = d["benchmarks"]
    lines = [
        f"mode f = {d['f_Hz']:.6g} Hz, Q = {d['Q']:.6g}, m_eff = {d['m_eff_kg']:.4g} kg, T = {d['temperature_K']:.4g} K",
        f"sqrt(S_FF)      {d['sqrt_S_FF_N_per_rtHz'] * 1e18:10.4g} aN/rtHz   (published {b['sqrt_S_FF_N_per_rtHz'] * 1e18:.4g})",
        f"sqrt(S_yy(f1))  {d['sqrt_S_yy_m_per_rtHz'] * 1e12:10.4g} pm/rtHz   (published {b['sqrt_S_yy_m_per_rtHz'] * 1e12:.4g})",
        f"gamma           {d['gamma_Hz']:10.4g} Hz        (published {b['gamma_Hz']:.4g})",
        f"alpha_zp        {d['alpha_zp_m'] * 1e15:10.4g} fm        (published {b['alpha_zp_m'] * 1e15:.4g})",
        f"alpha_th        {d['alpha_th_m'] * 1e12:10.4g} pm        (published {b['alpha_th_m'] * 1e12:.4g})",
        f"n_bar           {d['n_bar']:10.4g}           (published {b['n_bar']:.4g})",
        f"Q*f             {d['qf_product_Hz']:10.4g} Hz        threshold {d['qf_threshold_Hz']:.4g} Hz: "
        + ("PASS" if d["ground_state_ok"] else f"FAIL (Q short by x{d['q_shortfall']:.3g})"),
    ]
    if d.get("sql_probe_power_W") is not None:
        lines.append(f"SQL probe power {d['sql_probe_power_W'] * 1e6:10.4g} uW        (published {b['sql_probe_power_W'] * 1e6:.4g})")
    return "\n".join(lines) + "\n"


def write_report(res, cfg, out: Path):
    fmts = _formats(cfg)
    if "json" in fmts:
        write_json(res["report"].to_dict(), out / "report.json")
    (out / "report.txt").write_text(report_text(res["report"]))


def write_coupling(res, cfg, out: Path):
    fmts = _formats(cfg)
    s = res["sweep"]
    if "csv" in fmts:
        _write_csv(out / "coupling.csv", ["nu_Hz", "detuning_from_BE_Hz", "delta_kx_rad_per_m", "xi_rad_per_m2",
                                          "dnu_dg_Hz_per_m", "G_Hz"],
                   zip(s["nu_Hz"], cfg.dispersion.nu_BE - s["nu_Hz"], s["delta_kx"], s["xi"], s["dnu_dg"], s["G_Hz"]))
        _write_csv(out / "ladder.csv", ["n", "nu_Hz", "detuning_from_BE_Hz", "delta_kx_rad_per_m",
                                        "n_pi_over_L_rad_per_m", "rel_err", "dnu_dg_Hz_per_m", "G_Hz"],
                   res["ladder"])
    if "json" in fmts:
        write_json(res["summary"], out / "coupling.json")
    if "gnuplot" in fmts and "csv" in fmts:
        _write_gnuplot(out / "coupling.gp", "coupling.csv", 2, [6], "nu_BE - nu (Hz)", "G (Hz)")


RUNNERS = {
    "modes": (lambda cfg, a: run_modes(cfg, a.boundary, a.elements), write_modes),
    "spectrum": (lambda cfg, a: run_spectrum(cfg, a.regime, a.seed), write_spectrum),
    "report": (lambda cfg, a: run_report(cfg), write_report),
    "coupling": (lambda cfg, a: run_coupling(cfg), write_coupling),
}


# --- entry point ------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="apcw", description="Nanobeam optomechanics experiments.")
    p.add_argument("--version", action="version", version=f"apcw {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="scenario JSON (bundled defaults if omitted)")
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--out", default=None, help="output directory")
        s.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
        if name == "modes":
            s.add_argument("--boundary", choices=["hinged", "clamped", "hinged-hinged", "clamped-clamped"])
            s.add_argument("--elements", type=int, default=None)
        if name == "spectrum":
            s.add_argument("--regime", choices=["dispersive", "band_edge"], default=None)
    return p


def _emit_error(kind, exc, code):
    payload = {"error": kind, "message": str(exc)}
    if isinstance(exc, ConfigError):
        payload.update({"path": exc.path, "line": exc.line})
    if isinstance(exc, NumericalError):
        payload["diagnostics"] = {k: _fmt(v) for k, v in exc.diagnostics.items()}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def output_dir(args, cfg: ScenarioConfig):
    return Path(args.out or os.environ.get("APCW_OUT") or cfg.outputs.get("directory", "apcw_out"))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else load_config_text("{}")
        if args.print_config:
            print(json.dumps(cfg.document, indent=2, sort_keys=True))
            return 0
        run, write = RUNNERS[args.command]
        res = run(cfg, args)
        out = output_dir(args, cfg)
        out.mkdir(parents=True, exist_ok=True)
        write(res, cfg, out)
        for w in res.get("warnings", []):
            print(json.dumps({"warning": w}), file=sys.stderr)
        print(json.dumps({"command": args.command, "out": str(out)}))
        return 0
    except NumericalError as exc:
        return _emit_error("numerical", exc, 3)
    except (ConfigError, DomainError) as exc:
        return _emit_error("validation", exc, 2)
    except ApcwError as exc:
        return _emit_error("error", exc, 2)


if __name__ == "__main__":
    sys.exit(main())
