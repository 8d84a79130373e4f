"""Band-edge optics of the photonic crystal waveguide.

Near the dielectric band edge the guided-mode wavevector offset from the
zone edge is

    dk(nu) = (2 pi / a) * sqrt((nu_BE2 - nu)(nu_BE - nu) / (4 zeta^2 - (nu_BE2 - nu_BE)^2)),

and a finite crystal of N cells (length L = (N - 1) a) supports cavity-like
resonances where dk(nu_n) = n pi / L.

Gap-to-frequency transduction is parameterized by a user-supplied slope
dnu_BE/dg.  Perturbing the band edge holds nu_BE2 and zeta fixed.

Amplitude conventions for antisymmetric in-plane motion: with the generalized
coordinate alpha = max |u| of the two-beam mode, the gap changes by
``GAP_PER_ALPHA`` * alpha.  :func:`coupling_from_slope` applies that factor
when ``antisymmetric`` is set; the simple string model instead quotes the
full gap change Y_0 directly and needs no factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize
from scipy.constants import c as C_LIGHT, epsilon_0

from .errors import BandGapError, DomainError, NumericalError
from .mech import MechMode

__all__ = [
    "GAP_PER_ALPHA",
    "DispersionSpec",
    "MovingBoundaryInput",
    "MovingBoundaryResult",
    "HelmholtzResult",
    "delta_kx",
    "resonance_ladder",
    "xi_dispersive",
    "dnu_dgap",
    "coupling_from_slope",
    "coupling_sweep",
    "moving_boundary_shift",
    "helmholtz_oracle",
    "slab_field",
]

GAP_PER_ALPHA = 2.0


@dataclass(frozen=True)
class DispersionSpec:
    nu_BE: float
    nu_BE2: float
    zeta: float
    lattice_a: float
    n_cells: int
    band_edge_gap_slope: float = 0.034e12 / 1e-9

    def __post_init__(self):
        if not self.nu_BE < self.nu_BE2:
            raise DomainError("need nu_BE < nu_BE2")
        if not 4 * self.zeta**2 > (self.nu_BE2 - self.nu_BE) ** 2:
            raise DomainError("need 4 zeta^2 > (nu_BE2 - nu_BE)^2")
        if not self.lattice_a > 0:
            raise DomainError("lattice_a must be positive")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise DomainError("n_cells must be an integer >= 2")

    @property
    def denominator(self):
        return 4 * self.zeta**2 - (self.nu_BE2 - self.nu_BE) ** 2

    @property
    def crystal_length(self):
        return (self.n_cells - 1) * self.lattice_a

    @property
    def k_BE(self):
        return math.pi / self.lattice_a


def _check_propagating(spec, nu):
    nu = np.asarray(nu, dtype=float)
    inside = (nu > spec.nu_BE) & (nu < spec.nu_BE2)
    if np.any(inside):
        bad = nu[inside].ravel()[0]
        raise BandGapError(f"nu = {bad:.9g} Hz lies in the band gap ({spec.nu_BE:.9g}, {spec.nu_BE2:.9g})")
    return nu


def delta_kx(spec: DispersionSpec, nu):
    """Wavevector offset from the zone edge (rad/m); zero at nu_BE."""
    nu = _check_propagating(spec, nu)
    radicand = (spec.nu_BE2 - nu) * (spec.nu_BE - nu) / spec.denominator
    out = 2 * math.pi / spec.lattice_a * np.sqrt(np.maximum(radicand, 0.0))
    return float(out) if out.ndim == 0 else out


def resonance_ladder(spec: DispersionSpec, n_max: int):
    """Cavity resonances ``[(n, nu_n), ...]`` on the dielectric side of the gap.

    Solves dk(nu_n) = n pi / ((N - 1) a) in closed form; nu_n decreases with n.
    """
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    gap = spec.nu_BE2 - spec.nu_BE
    out = []
    for n in range(1, n_max + 1):
        c = spec.denominator * n**2 / (4 * (spec.n_cells - 1) ** 2)
        disc = gap**2 + 4 * c
        if not (c > 0 and disc >= 0):
            raise DomainError(f"no real resonance below nu_BE for n = {n}")
        x = 2 * c / (gap + math.sqrt(disc))  # nu_BE - nu_n, stable form of the lower root
        out.append((n, spec.nu_BE - x))
    return out


def _below_edge(spec, nu):
    nu = _check_propagating(spec, nu)
    if np.any(nu >= spec.nu_BE):
        raise DomainError("transduction slope diverges at and above the band edge; need nu < nu_BE")
    return nu


def xi_dispersive(spec: DispersionSpec, nu):
    """d(dk)/dg = (d dk / d nu_BE) * dnu_BE/dg, in rad/m per meter of gap."""
    nu = _below_edge(spec, nu)
    x = spec.nu_BE - nu
    gap = spec.nu_BE2 - spec.nu_BE
    dk = 2 * math.pi / spec.lattice_a * np.sqrt((gap + x) * x / spec.denominator)
    ddk = 0.5 * dk * (1.0 / x - 2 * gap / spec.denominator)
    out = ddk * spec.band_edge_gap_slope
    return float(out) if np.ndim(out) == 0 else out


def dnu_dgap(spec: DispersionSpec, nu):
    """Frequency shift per meter of gap for the state with fixed dk(nu).

    Implicit differentiation of dk(nu, nu_BE) = const; tends to the bare slope
    dnu_BE/dg at the band edge.
    """
    nu = _below_edge(spec, nu)
    x = spec.nu_BE - nu
    gap = spec.nu_BE2 - spec.nu_BE
    tuning = (1.0 / x - 2 * gap / spec.denominator) / (1.0 / x + 1.0 / (gap + x))
    out = tuning * spec.band_edge_gap_slope
    return float(out) if np.ndim(out) == 0 else out


def coupling_from_slope(dnudy, mode, antisymmetric=True):
    """Optomechanical coupling G = factor * alpha_zp * |dnu/dy| in Hz.

    ``mode`` is a :class:`MechMode` or a zero-point amplitude in meters;
    ``factor`` is ``GAP_PER_ALPHA`` for antisymmetric motion, else 1.
    """
    a_zp = mode.alpha_zp if isinstance(mode, MechMode) else float(mode)
    factor = GAP_PER_ALPHA if antisymmetric else 1.0
    return factor * a_zp * abs(dnudy)


def coupling_sweep(spec: DispersionSpec, nus, mode, antisymmetric=True):
    """Tabulate dk, xi, dnu/dg and G over optical frequencies below nu_BE."""
    nus = np.asarray(nus, dtype=float)
    slope = np.atleast_1d(dnu_dgap(spec, nus))
    return {
        "nu_Hz": nus,
        "delta_kx": np.atleast_1d(delta_kx(spec, nus)),
        "xi": np.atleast_1d(xi_dispersive(spec, nus)),
        "dnu_dg": slope,
        "G_Hz": np.array([coupling_from_slope(s, mode, antisymmetric) for s in slope]),
    }


# --- moving-boundary perturbation theory -----------------------------------


@dataclass(frozen=True)
class MovingBoundaryInput:
    """Unperturbed fields sampled on the dielectric surface.

    Per sample: area weight dS (m^2), normal displacement u.n of the
    unit-normalized mode (n points out of the dielectric), |E_par|^2 and
    |D_perp|^2.  ``energy_norm`` is integral(eps |E|^2 dV) with absolute
    permittivity.
    """

    nu0: float
    area_weight: np.ndarray
    u_normal: np.ndarray
    E_parallel_sq: np.ndarray
    D_perp_sq: np.ndarray
    delta_eps: float
    delta_eps_inv: float
    energy_norm: float
    u_max: float = 1.0

    def __post_init__(self):
        for name in ("area_weight", "u_normal", "E_parallel_sq", "D_perp_sq"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        n = len(self.area_weight)
        if any(len(getattr(self, k)) != n for k in ("u_normal", "E_parallel_sq", "D_perp_sq")):
            raise DomainError("surface sample arrays must have equal length")
        if not self.energy_norm > 0:
            raise DomainError("energy_norm must be positive")
        if np.any(self.area_weight < 0):
            raise DomainError("area weights must be non-negative")
        if np.any(np.abs(self.u_normal) > self.u_max * (1 + 1e-12)):
            raise DomainError("|u.n| exceeds max |u|")


class MovingBoundaryResult(NamedTuple):
    dnu_dalpha: float
    G_nu: float | None


def moving_boundary_shift(inp: MovingBoundaryInput, alpha_zp=None):
    """First-order eigenfrequency shift from displaced dielectric boundaries.

    dnu/dalpha = -(nu0/2) * sum dS (u.n)(d_eps |E_par|^2 - d_eps_inv |D_perp|^2)
                 / (max|u| * integral(eps |E|^2 dV))

    A boundary moved into the vacuum (u.n > 0) enlarges the dielectric and
    lowers the frequency.  With ``alpha_zp`` the coupling rate
    G = dnu/dalpha * alpha_zp is returned as well.
    """
    surface = np.sum(inp.area_weight * inp.u_normal
                     * (inp.delta_eps * inp.E_parallel_sq - inp.delta_eps_inv * inp.D_perp_sq))
    d = -0.5 * inp.nu0 * surface / (inp.u_max * inp.energy_norm)
    return MovingBoundaryResult(float(d), None if alpha_zp is None else float(d * alpha_zp))


# --- 1D layered-cavity oracle ----------------------------------------------


class HelmholtzResult(NamedTuple):
    nu_unperturbed: float
    nu_shifted: float
    boundary: MovingBoundaryInput


def _layers(cavity_length, slab_start, slab_thickness, eps):
    out = []
    if slab_start > 0:
        out.append((slab_start, 1.0))
    out.append((slab_thickness, eps))
    rest = cavity_length - slab_start - slab_thickness
    if rest > 0:
        out.append((rest, 1.0))
    return out


def _propagate(layers, nu):
    """(E, E') at the far wall for E(0) = 0, E'(0) = 1; also per-layer entry states."""
    k0 = 2 * math.pi * nu / C_LIGHT
    E, dE = 0.0, 1.0
    states = []
    for d, eps in layers:
        states.append((E, dE))
        k = k0 * math.sqrt(eps)
        c, s = math.cos(k * d), math.sin(k * d)
        E, dE = E * c + dE * s / k, -E * k * s + dE * c
    return E, dE, states


def slab_field(layers, nu, x):
    """Field profile E(x) for the layered cavity (E'(0) = 1 normalization)."""
    x = np.asarray(x, dtype=float)
    _, _, states = _propagate(layers, nu)
    k0 = 2 * math.pi * nu / C_LIGHT
    out = np.zeros_like(x)
    x0 = 0.0
    for (d, eps), (E, dE) in zip(layers, states):
        k = k0 * math.sqrt(eps)
        sel = (x >= x0) & (x <= x0 + d)
        s = x[sel] - x0
        out[sel] = E * np.cos(k * s) + dE / k * np.sin(k * s)
        x0 += d
    return out


def _energy(layers, nu):
    k0 = 2 * math.pi * nu / C_LIGHT
    _, _, states = _propagate(layers, nu)
    total = 0.0
    for (d, eps), (E, dE) in zip(layers, states):
        k = k0 * math.sqrt(eps)
        b = dE / k
        s2 = math.sin(2 * k * d) / (4 * k)
        integral = E * E * (d / 2 + s2) + b * b * (d / 2 - s2) + E * b * math.sin(k * d) ** 2 / k
        total += epsilon_0 * eps * integral
    return total


def _nth_root(layers, n, cavity_length):
    eps_max = max(e for _, e in layers)
    nu_top = (n + 1.5) * C_LIGHT / (2 * cavity_length)
    n_scan = int(200 * (n + 2) * math.sqrt(eps_max))
    grid = np.linspace(0.0, nu_top, n_scan + 1)[1:]
    vals = np.array([_propagate(layers, v)[0] for v in grid])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if len(idx) < n:
        raise NumericalError("could not bracket the requested cavity mode", mode_index=n,
                             roots_found=len(idx), scan_top_Hz=nu_top)
    i = idx[n - 1]
    return optimize.brentq(lambda v: _propagate(layers, v)[0], grid[i], grid[i + 1],
                           xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def helmholtz_oracle(cavity_length, slab_thickness, slab_eps_rel, mode_index, boundary_shift,
                     slab_start=0.0):
    """Exact modes of a 1D cavity with perfectly reflecting walls and one slab.

    The slab occupies [slab_start, slab_start + slab_thickness]; its right face
    is moved by ``boundary_shift`` for the perturbed geometry.  Returns both
    eigenfrequencies plus the unperturbed surface fields at the moving face in
    :class:`MovingBoundaryInput` form (per unit transverse area).
    """
    if not (cavity_length > 0 and slab_thickness > 0 and slab_eps_rel > 0):
        raise DomainError("cavity_length, slab_thickness and slab_eps_rel must be positive")
    if mode_index < 1:
        raise DomainError("mode_index must be >= 1")
    if slab_start < 0 or slab_start + slab_thickness > cavity_length * (1 + 1e-15):
        raise DomainError("slab must lie inside the cavity")
    face = slab_start + slab_thickness
    if slab_thickness + boundary_shift <= 0 or face + boundary_shift > cavity_length * (1 + 1e-15):
        raise DomainError("shifted slab face must stay inside the cavity")
    base = _layers(cavity_length, slab_start, slab_thickness, slab_eps_rel)
    moved = _layers(cavity_length, slab_start, slab_thickness + boundary_shift, slab_eps_rel)
    nu0 = _nth_root(base, mode_index, cavity_length)
    nu1 = nu0 if boundary_shift == 0 else _nth_root(moved, mode_index, cavity_length)
    e_face = float(slab_field(base, nu0, np.array([face]))[0])
    boundary = MovingBoundaryInput(
        nu0=nu0,
        area_weight=np.array([1.0]),
        u_normal=np.array([1.0]),
        E_parallel_sq=np.array([e_face**2]),
        D_perp_sq=np.array([0.0]),
        delta_eps=epsilon_0 * (slab_eps_rel - 1.0),
        delta_eps_inv=1.0 / (epsilon_0 * slab_eps_rel) - 1.0 / epsilon_0,
        energy_norm=_energy(base, nu0),
    )
    return HelmholtzResult(nu0, nu1, boundary)
