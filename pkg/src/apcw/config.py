"""Scenario configuration: strict JSON schema plus unit-suffixed quantities.

Dimensional fields accept either a bare number (SI) or a string with units
such as ``"370 nm"`` or ``"0.034 THz/nm"``; strings are converted to SI at
load time.  A user document is validated on its own (unknown keys are
rejected), then merged over the bundled defaults.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import jsonschema
import pint

from .errors import ConfigError, DomainError
from .mech import BeamSpec, Boundary, Family, PhononicCellSpec, Segment
from .optics import DispersionSpec
from .transduce import ProbeConfig

__all__ = ["ScenarioConfig", "load_config", "load_config_text", "default_document", "parse_quantity"]

# expected SI units per field path (last key; parents disambiguate where needed)
_UNITS = {
    "beam.length": "m",
    "beam.width": "m",
    "beam.thickness": "m",
    "beam.cross_section.x_start": "m",
    "beam.cross_section.width": "m",
    "beam.cross_section.thickness": "m",
    "beam.youngs_modulus": "Pa",
    "beam.density": "kg/m^3",
    "beam.stress": "Pa",
    "phononic.segments.length": "m",
    "phononic.segments.linear_mass_density": "kg/m",
    "phononic.tension": "N",
    "phononic.f_max": "Hz",
    "dispersion.nu_BE": "Hz",
    "dispersion.nu_BE2": "Hz",
    "dispersion.zeta": "Hz",
    "dispersion.lattice_a": "m",
    "dispersion.band_edge_gap_slope": "Hz/m",
    "probe.optical_frequency": "Hz",
    "probe.probe_power": "W",
    "probe.lo_power": "W",
    "probe.theta": "rad",
    "probe.noise_floor_psd": "1/Hz",
    "temperature": "K",
    "modes_override.f": "Hz",
    "modes_override.m_eff": "kg",
    "transduction.xi": "1/m^2",
    "transduction.quadratic_gain": "Hz/m^2",
    "transduction.linewidth": "Hz",
    "transduction.band_edge_detuning": "Hz",
    "simulation.sample_rate": "Hz",
    "simulation.duration": "s",
    "simulation.rbw": "Hz",
    "coupling.nu_start": "Hz",
    "coupling.nu_stop": "Hz",
}


@lru_cache(maxsize=1)
def _ureg():
    return pint.UnitRegistry()


@lru_cache(maxsize=1)
def _schema():
    return json.loads(resources.files("apcw.data").joinpath("scenario.schema.json").read_text())


def default_document():
    """The bundled default scenario as a raw (unit-string) dict."""
    return json.loads(resources.files("apcw.data").joinpath("default_scenario.json").read_text())


def parse_quantity(value, unit):
    """Convert a number (taken as SI) or a unit string to a float in ``unit``."""
    if isinstance(value, bool):
        raise DomainError(f"expected a quantity in {unit}, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    ureg = _ureg()
    try:
        q = ureg.Quantity(value)
        return float(q.to(unit).magnitude)
    except (pint.errors.PintError, ValueError, TypeError, AttributeError) as exc:
        raise DomainError(f"cannot read {value!r} as a quantity in {unit}: {exc}") from None


def _line_of(text, path):
    """Best-effort 1-based line number of a JSON path in ``text``."""
    pos = 0
    for part in path:
        if isinstance(part, int):
            continue
        m = re.compile(r'"%s"\s*:' % re.escape(str(part))).search(text, pos)
        if m is None:
            break
        pos = m.start()
    return text.count("\n", 0, pos) + 1 if text else None


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _walk_units(doc, text):
    """Replace every dimensional field by its SI float, reporting bad entries."""
    out = copy.deepcopy(doc)

    def visit(node, keys, path):
        if isinstance(node, dict):
            for k, v in node.items():
                dotted = ".".join(keys + [k])
                if dotted in _UNITS:
                    try:
                        node[k] = parse_quantity(v, _UNITS[dotted])
                    except DomainError as exc:
                        raise ConfigError(str(exc), path="/".join(map(str, path + [k])),
                                          line=_line_of(text, path + [k])) from None
                else:
                    visit(v, keys + [k], path + [k])
        elif isinstance(node, list):
            for i, v in enumerate(node):
                visit(v, keys, path + [i])

    visit(out, [], [])
    return out


@dataclass
class ScenarioConfig:
    beam: BeamSpec
    dispersion: DispersionSpec
    probe: ProbeConfig
    temperature: float
    modes_override: list
    mech: dict
    transduction: dict
    simulation: dict
    coupling: dict
    outputs: dict
    phononic: PhononicCellSpec | None
    phononic_grid: dict
    document: dict


def load_config(path):
    """Read, validate and resolve a scenario file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return load_config_text(text)


def load_config_text(text):
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(user, dict):
        raise ConfigError("top level must be a JSON object", line=1)
    _validate(user, text)
    base = default_document()
    if "beam" in user and "cross_section" in user["beam"]:
        base["beam"].pop("width", None)
        base["beam"].pop("thickness", None)
    doc = _merge(base, user)
    _validate(doc, "")
    return _build(doc, text)


def _validate(doc, text):
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        path = list(e.path)
        raise ConfigError(e.message, path="/".join(map(str, path)), line=_line_of(text, path) if text else None)


def _build(doc, text):
    si = _walk_units(doc, text)
    try:
        b = si["beam"]
        if "cross_section" in b:
            segs = tuple(Segment(s["x_start"], s["width"], s["thickness"]) for s in b["cross_section"])
        else:
            segs = (Segment(0.0, b["width"], b["thickness"]),)
        beam = BeamSpec(b["length"], b["youngs_modulus"], b["density"], b["stress"], segs,
                        Boundary.parse(b["boundary_condition"]), b["quality_factor"])
        d = si["dispersion"]
        disp = DispersionSpec(d["nu_BE"], d["nu_BE2"], d["zeta"], d["lattice_a"], d["n_cells"],
                              d["band_edge_gap_slope"])
        probe = ProbeConfig(**si["probe"])
        T = si["temperature"]
        if not T > 0:
            raise DomainError("temperature must be positive")
        overrides = []
        for m in si.get("modes_override", []):
            overrides.append({"family": Family(m["family"]), "p": m.get("p", 1), "f": m["f"],
                              "Q": m.get("Q", beam.quality_factor), "m_eff": m.get("m_eff")})
        phon, grid = None, {}
        if "phononic" in si:
            ph = si["phononic"]
            phon = PhononicCellSpec(tuple((s["length"], s["linear_mass_density"]) for s in ph["segments"]),
                                    ph["tension"])
            grid = {"f_max": ph.get("f_max", 10e9), "n_q": ph.get("n_q", 51)}
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    except KeyError as exc:
        raise ConfigError(f"missing required entry {exc}") from None
    return ScenarioConfig(beam, disp, probe, T, overrides, si["mech"], si["transduction"],
                          si["simulation"], si["coupling"], si["outputs"], phon, grid, doc)
