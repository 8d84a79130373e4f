"""Mechanical eigenmodes of tensioned nanobeams.

All quantities are SI.  Two solvers are provided for transverse modes of a
beam under axial tension:

* :func:`analytic_frequencies` evaluates the closed-form hinged-hinged
  spectrum of a uniform beam,

      f_p = (p^2 pi / 2 L^2) * sqrt(E I / (rho A) + sigma L^2 / (rho pi^2 p^2)),

  which reduces to the string ladder f_p = (p / 2L) sqrt(sigma / rho) when the
  bending term is negligible.
* :func:`fem_eigenmodes` solves ``E I w'''' - N w'' = rho A omega^2 w`` with
  cubic Hermite elements for uniform or piecewise-constant cross sections and
  hinged or clamped ends.

Mode amplitudes use the generalized coordinate alpha = max |u|, so the
effective mass is ``integral(rho A u^2 dx) / max(u)^2``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg
from scipy import integrate, optimize
from scipy.constants import hbar, k as k_B

from .errors import DomainError, NumericalError, UnsupportedGeometryError

__all__ = [
    "Boundary",
    "Family",
    "Segment",
    "BeamSpec",
    "MechMode",
    "PhononicCellSpec",
    "PhononicBands",
    "ThermalAmplitude",
    "analytic_frequencies",
    "dispersion_deviation",
    "fem_eigenmodes",
    "effective_mass",
    "zero_point_amplitude",
    "thermal_amplitude",
    "make_mode",
    "sine_shape",
    "cell_transfer_matrix",
    "cell_half_trace",
    "phononic_bands",
]

SAMPLES_PER_ELEMENT = 10


class Boundary(str, enum.Enum):
    HINGED = "hinged-hinged"
    CLAMPED = "clamped-clamped"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"hinged": cls.HINGED, "clamped": cls.CLAMPED}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise DomainError(f"unknown boundary condition {value!r}") from None


class Family(str, enum.Enum):
    """Mode-family label.  Attached by the caller; the 1D solvers emit GENERIC."""

    Y_A = "Y_A"
    Y_S = "Y_S"
    Z_A = "Z_A"
    Z_S = "Z_S"
    GENERIC = "generic"

    @property
    def antisymmetric(self):
        return self in (Family.Y_A, Family.Z_A)


@dataclass(frozen=True)
class Segment:
    x_start: float
    width: float
    thickness: float

    @property
    def area(self):
        return self.width * self.thickness

    @property
    def moment(self):
        # bending about the width axis (out-of-plane convention)
        return self.width * self.thickness**3 / 12.0


@dataclass(frozen=True)
class BeamSpec:
    """Geometry and material of a tensioned beam.

    ``cross_section`` is a sequence of piecewise-constant segments; segment i
    spans ``[x_start_i, x_start_{i+1})`` and the last one ends at ``length``.
    ``stress`` is the axial stress referred to the length-averaged area, so the
    (constant) axial force is ``stress * mean_area``.
    """

    length: float
    youngs_modulus: float
    density: float
    stress: float
    cross_section: tuple[Segment, ...]
    boundary_condition: Boundary = Boundary.HINGED
    quality_factor: float = 1e5

    def __post_init__(self):
        object.__setattr__(self, "cross_section", tuple(self.cross_section))
        object.__setattr__(self, "boundary_condition", Boundary.parse(self.boundary_condition))
        if not self.length > 0:
            raise DomainError("length must be positive")
        if not self.youngs_modulus > 0:
            raise DomainError("youngs_modulus must be positive")
        if not self.density > 0:
            raise DomainError("density must be positive")
        if not self.stress >= 0:
            raise DomainError("stress must be non-negative")
        if not self.quality_factor > 0:
            raise DomainError("quality_factor must be positive")
        segs = self.cross_section
        if not segs:
            raise DomainError("cross_section needs at least one segment")
        if segs[0].x_start != 0.0:
            raise DomainError("first cross-section segment must start at x = 0")
        for a, b in zip(segs, segs[1:]):
            if not b.x_start > a.x_start:
                raise DomainError("cross-section segments must be strictly ordered without overlap")
        if not segs[-1].x_start < self.length:
            raise DomainError("last cross-section segment starts beyond the beam end")
        for s in segs:
            if not (s.width > 0 and s.thickness > 0):
                raise DomainError("segment widths and thicknesses must be positive")

    @classmethod
    def uniform(cls, length, width, thickness, youngs_modulus, density, stress, **kw):
        return cls(length, youngs_modulus, density, stress, (Segment(0.0, width, thickness),), **kw)

    @property
    def is_uniform(self):
        return len(self.cross_section) == 1

    @property
    def segment_edges(self):
        return np.array([s.x_start for s in self.cross_section] + [self.length])

    def _segment_index(self, x):
        starts = np.array([s.x_start for s in self.cross_section])
        return np.clip(np.searchsorted(starts, np.asarray(x, dtype=float), side="right") - 1, 0, len(starts) - 1)

    def area(self, x):
        areas = np.array([s.area for s in self.cross_section])
        return areas[self._segment_index(x)]

    def moment(self, x):
        moments = np.array([s.moment for s in self.cross_section])
        return moments[self._segment_index(x)]

    @property
    def mean_area(self):
        lengths = np.diff(self.segment_edges)
        return float(np.dot(lengths, [s.area for s in self.cross_section]) / self.length)

    @property
    def tension(self):
        return self.stress * self.mean_area

    @property
    def mass(self):
        return self.density * self.mean_area * self.length


@dataclass(eq=False)
class MechMode:
    """One mechanical eigenmode.

    ``x``/``shape`` sample the unit-normalized displacement (max |u| = 1).
    ``alpha_th`` is the rms thermal amplitude at ``temperature``.
    """

    index: int
    family: Family
    frequency: float
    x: np.ndarray
    shape: np.ndarray
    m_eff: float
    alpha_zp: float
    alpha_th: float
    temperature: float
    Q: float

    @property
    def gamma(self):
        """Full linewidth f/Q in Hz."""
        return self.frequency / self.Q

    @property
    def omega(self):
        return 2 * math.pi * self.frequency

    @property
    def key(self):
        return f"{Family(self.family).value}:{self.index}"


def make_mode(index, frequency, m_eff, Q=1e5, temperature=300.0, family=Family.GENERIC,
              x=None, shape=None):
    """Build a :class:`MechMode` from its frequency and effective mass."""
    if x is None:
        x = np.linspace(0.0, 1.0, 2)
        shape = np.ones(2)
    alpha_zp = zero_point_amplitude(m_eff, frequency)
    alpha_th = thermal_amplitude(m_eff, frequency, temperature).alpha_th if temperature > 0 else 0.0
    return MechMode(int(index), Family(family), float(frequency), np.asarray(x, float),
                    np.asarray(shape, float), float(m_eff), alpha_zp, alpha_th, float(temperature), float(Q))


def sine_shape(p, length, n_samples=None):
    """Hinged-hinged shape sin(p pi x / L), sampled with endpoints included."""
    if n_samples is None:
        n_samples = max(201, 40 * p + 1)
    x = np.linspace(0.0, length, n_samples)
    u = np.sin(p * np.pi * x / length)
    return x, _normalize(u)


def _norm_scale(u):
    """Factor giving max |u| = 1 with the first antinode from x = 0 positive."""
    peak = np.max(np.abs(u))
    i = int(np.argmax(np.abs(u) >= peak * (1 - 1e-6)))
    return 1.0 / (peak * np.sign(u[i]))


def _normalize(u):
    u = np.asarray(u, dtype=float)
    return u * _norm_scale(u)


def analytic_frequencies(spec: BeamSpec, p_max: int, temperature=300.0):
    """Closed-form spectrum of a uniform hinged-hinged tensioned beam.

    Returns modes p = 1..p_max with sine shapes and the sine-shape effective
    mass rho*A*L/2.
    """
    if p_max < 1:
        raise DomainError("p_max must be >= 1")
    if not spec.is_uniform:
        raise UnsupportedGeometryError("analytic spectrum requires a uniform cross section")
    if spec.boundary_condition is not Boundary.HINGED:
        raise UnsupportedGeometryError("analytic spectrum requires hinged-hinged ends")
    seg = spec.cross_section[0]
    L, rho = spec.length, spec.density
    bending = spec.youngs_modulus * seg.moment / (rho * seg.area)
    m_eff = rho * seg.area * L / 2.0
    modes = []
    for p in range(1, p_max + 1):
        f = p**2 * math.pi / (2 * L**2) * math.sqrt(bending + spec.stress * L**2 / (rho * math.pi**2 * p**2))
        x, u = sine_shape(p, L)
        modes.append(make_mode(p, f, m_eff, spec.quality_factor, temperature, x=x, shape=u))
    return modes


def dispersion_deviation(modes: Sequence[MechMode]):
    """Deviation from a linear ladder, ``[(p, f_p - p f_1), ...]``."""
    if len(modes) < 2:
        raise DomainError("need at least two modes")
    idx = [m.index for m in modes]
    if idx != list(range(1, len(modes) + 1)):
        raise DomainError("modes must be sorted by p starting at 1")
    f1 = modes[0].frequency
    return [(m.index, m.frequency - m.index * f1) for m in modes]


def _hermite_element(EI, N, rhoA, h):
    kb = EI / h**3 * np.array([
        [12, 6 * h, -12, 6 * h],
        [6 * h, 4 * h * h, -6 * h, 2 * h * h],
        [-12, -6 * h, 12, -6 * h],
        [6 * h, 2 * h * h, -6 * h, 4 * h * h],
    ])
    kg = N / (30 * h) * np.array([
        [36, 3 * h, -36, 3 * h],
        [3 * h, 4 * h * h, -3 * h, -h * h],
        [-36, -3 * h, 36, -3 * h],
        [3 * h, -h * h, -3 * h, 4 * h * h],
    ])
    m = rhoA * h / 420 * np.array([
        [156, 22 * h, 54, -13 * h],
        [22 * h, 4 * h * h, 13 * h, -3 * h * h],
        [54, 13 * h, 156, -22 * h],
        [-13 * h, -3 * h * h, -22 * h, 4 * h * h],
    ])
    return kb + kg, m


def _assemble(spec, n_elements):
    L = spec.length
    nodes = np.linspace(0.0, L, n_elements + 1)
    h = L / n_elements
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    EI = spec.youngs_modulus * spec.moment(mid)
    rhoA = spec.density * spec.area(mid)
    N = spec.tension
    ndof = 2 * (n_elements + 1)
    K = np.zeros((ndof, ndof))
    M = np.zeros((ndof, ndof))
    for e in range(n_elements):
        ke, me = _hermite_element(EI[e], N, rhoA[e], h)
        sl = slice(2 * e, 2 * e + 4)
        K[sl, sl] += ke
        M[sl, sl] += me
    return nodes, K, M


def _sample_shape(nodes, dofs, per_element=SAMPLES_PER_ELEMENT):
    h = nodes[1] - nodes[0]
    s = np.linspace(0.0, 1.0, per_element + 1)[:-1]
    N1 = 1 - 3 * s**2 + 2 * s**3
    N2 = h * (s - 2 * s**2 + s**3)
    N3 = 3 * s**2 - 2 * s**3
    N4 = h * (-(s**2) + s**3)
    w = dofs[0::2]
    t = dofs[1::2]
    u = (np.outer(w[:-1], N1) + np.outer(t[:-1], N2) + np.outer(w[1:], N3) + np.outer(t[1:], N4)).ravel()
    x = (nodes[:-1, None] + h * s[None, :]).ravel()
    return np.append(x, nodes[-1]), np.append(u, w[-1])


def fem_eigenmodes(spec: BeamSpec, p_max: int, n_elements: int, temperature=300.0):
    """Lowest transverse modes from a cubic-Hermite finite-element model.

    Bending stiffness, geometric (tension) stiffness and consistent mass
    matrices are assembled on a uniform mesh.  Cross-section properties are
    taken at element midpoints.  Eigenvalues are polished with one step of
    shifted inverse iteration followed by a Rayleigh quotient.
    """
    if p_max < 1:
        raise DomainError("p_max must be >= 1")
    if n_elements < 10 * p_max:
        raise DomainError(f"n_elements must be >= 10 * p_max (= {10 * p_max})")
    bc = Boundary.parse(spec.boundary_condition)
    nodes, K, M = _assemble(spec, n_elements)
    ndof = K.shape[0]
    fixed = [0, ndof - 2] if bc is Boundary.HINGED else [0, 1, ndof - 2, ndof - 1]
    free = np.setdiff1d(np.arange(ndof), fixed)
    Kf = K[np.ix_(free, free)]
    Mf = M[np.ix_(free, free)]
    # scale to O(1) entries so the Cholesky of M is well conditioned
    ks, ms = np.abs(np.diag(Kf)).max(), np.abs(np.diag(Mf)).max()
    Kn, Mn = Kf / ks, Mf / ms
    try:
        lam, vec = scipy.linalg.eigh(Kn, Mn, subset_by_index=[0, p_max - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError("generalized eigen-solve failed", n_dof=len(free), cause=str(exc)) from exc

    modes = []
    for j in range(p_max):
        phi = vec[:, j]
        lam_j = lam[j]
        try:
            with warnings.catch_warnings():
                # near-singular by design: this is shifted inverse iteration
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                y = scipy.linalg.solve(Kn - lam_j * (1 - 1e-9) * Mn, Mn @ phi, assume_a="sym")
        except (np.linalg.LinAlgError, ValueError):
            y = phi
        if np.all(np.isfinite(y)) and np.linalg.norm(y) > 0:
            phi = y / np.linalg.norm(y)
        lam_j = float(phi @ Kn @ phi / (phi @ Mn @ phi))
        if not lam_j > 0:
            raise NumericalError("non-positive eigenvalue", mode=j + 1, eigenvalue=lam_j)
        omega2 = lam_j * ks / ms
        full = np.zeros(ndof)
        full[free] = phi
        x, u = _sample_shape(nodes, full)
        scale = _norm_scale(u)
        full *= scale
        u = u * scale
        m_eff = float(full[free] @ Mf @ full[free])
        f = math.sqrt(omega2) / (2 * math.pi)
        alpha_zp = zero_point_amplitude(m_eff, f)
        alpha_th = thermal_amplitude(m_eff, f, temperature).alpha_th if temperature > 0 else 0.0
        modes.append(MechMode(j + 1, Family.GENERIC, f, x, u, m_eff, alpha_zp, alpha_th,
                              float(temperature), spec.quality_factor))

    freqs = np.array([m.frequency for m in modes])
    if np.any(np.diff(freqs) <= 0):
        raise NumericalError("eigenfrequencies are not strictly ascending", frequencies=freqs.tolist())
    return modes


def effective_mass(mode, spec: BeamSpec):
    """Effective mass for the coordinate alpha = max |u|.

    ``mode`` is a :class:`MechMode` or an ``(x, u)`` pair with max |u| = 1.
    Trapezoidal quadrature of rho A(x) u(x)^2 over the samples.
    """
    if isinstance(mode, MechMode):
        x, u = mode.x, mode.shape
    else:
        x, u = mode
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if abs(np.max(np.abs(u)) - 1.0) > 1e-12:
        raise DomainError("mode shape must be unit-normalized (max |u| = 1)")
    integrand = spec.density * spec.area(x) * u**2
    return float(integrate.trapezoid(integrand, x))


def zero_point_amplitude(m_eff, f):
    """sqrt(hbar / (2 m_eff omega))."""
    if not (m_eff > 0 and f > 0):
        raise DomainError("m_eff and f must be positive")
    return math.sqrt(hbar / (2 * m_eff * 2 * math.pi * f))


class ThermalAmplitude(NamedTuple):
    n_bar: float
    alpha_th: float
    """alpha_zp * sqrt(2 n_bar), valid at any temperature."""
    alpha_classical: float
    """Equipartition estimate sqrt(k_B T / (m_eff omega^2))."""


def thermal_amplitude(m_eff, f, T):
    """Bose occupation and rms thermal amplitude at temperature T."""
    if not (m_eff > 0 and f > 0 and T > 0):
        raise DomainError("m_eff, f and T must be positive")
    omega = 2 * math.pi * f
    x = hbar * omega / (k_B * T)
    n_bar = math.exp(-x) if x > 700 else 1.0 / math.expm1(x)
    a_zp = zero_point_amplitude(m_eff, f)
    return ThermalAmplitude(n_bar, a_zp * math.sqrt(2 * n_bar), math.sqrt(k_B * T / (m_eff * omega**2)))


# --- 1D phononic crystal (transverse string waves) -------------------------


@dataclass(frozen=True)
class PhononicCellSpec:
    """Unit cell of a periodic string: ``segments`` = ((length, mu), ...)."""

    segments: tuple[tuple[float, float], ...]
    tension: float

    def __post_init__(self):
        segs = tuple((float(a), float(b)) for a, b in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise DomainError("cell needs at least one segment")
        if any(not (d > 0 and mu > 0) for d, mu in segs):
            raise DomainError("segment lengths and linear densities must be positive")
        if not self.tension > 0:
            raise DomainError("tension must be positive")

    @property
    def period(self):
        return sum(d for d, _ in self.segments)


def cell_transfer_matrix(cell: PhononicCellSpec, f):
    """Transfer matrix of (w, T w') across one cell at frequency f (Hz).

    Vectorized over ``f``; returns shape ``f.shape + (2, 2)``.
    """
    omega = 2 * np.pi * np.asarray(f, dtype=float)
    out = np.broadcast_to(np.eye(2), omega.shape + (2, 2)).copy()
    for d, mu in cell.segments:
        k = omega * math.sqrt(mu / cell.tension)
        Z = cell.tension * k
        c, s = np.cos(k * d), np.sin(k * d)
        with np.errstate(divide="ignore", invalid="ignore"):
            s_over_z = np.where(Z > 0, s / np.where(Z > 0, Z, 1.0), d / cell.tension)
        seg = np.empty(omega.shape + (2, 2))
        seg[..., 0, 0] = c
        seg[..., 0, 1] = s_over_z
        seg[..., 1, 0] = -Z * s
        seg[..., 1, 1] = c
        out = seg @ out
    return out


def cell_half_trace(cell: PhononicCellSpec, f):
    m = cell_transfer_matrix(cell, f)
    return 0.5 * (m[..., 0, 0] + m[..., 1, 1])


@dataclass
class PhononicBands:
    """Band structure on ``q`` in [0, pi/a].

    ``freqs[i, n]`` is band n at ``q[i]`` (NaN where the band exceeds f_max).
    ``gaps`` lists (f_lo, f_hi) intervals below f_max with no real Bloch q.
    """

    q: np.ndarray
    freqs: np.ndarray
    gaps: list[tuple[float, float]] = field(default_factory=list)
    band_edges: list[tuple[float, float]] = field(default_factory=list)


def phononic_bands(cell: PhononicCellSpec, f_max: float, n_q: int, n_scan: int | None = None):
    if not f_max > 0:
        raise DomainError("f_max must be positive")
    if n_q < 2:
        raise DomainError("n_q must be >= 2")
    a = cell.period
    slowest = max(math.sqrt(mu / cell.tension) for _, mu in cell.segments)
    n_half_waves = 2 * f_max * slowest * a  # bands below f_max, roughly
    if n_scan is None:
        n_scan = int(max(4000, 400 * (n_half_waves + 1)))
    h = lambda fr: float(cell_half_trace(cell, fr))  # noqa: E731

    f = np.linspace(0.0, f_max, n_scan + 1)
    ht = cell_half_trace(cell, f)
    tol = 1e-12

    # band boundaries: crossings of |h| = 1 and tangential touches (extrema at |h| ~ 1)
    bounds = [0.0]
    for target in (1.0, -1.0):
        g = ht - target
        idx = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
        for i in idx:
            bounds.append(optimize.brentq(lambda fr: h(fr) - target, f[i], f[i + 1], xtol=1e-15 * f_max, rtol=1e-14))
    dh = np.diff(ht)
    ext = np.nonzero(np.sign(dh[:-1]) * np.sign(dh[1:]) < 0)[0] + 1
    for i in ext:
        sgn = 1.0 if ht[i] > 0 else -1.0
        res = optimize.minimize_scalar(lambda fr: -sgn * h(fr), bounds=(f[i - 1], f[i + 1]),
                                       method="bounded", options={"xatol": 1e-13 * f_max})
        if abs(abs(h(res.x)) - 1.0) < 1e-7:
            bounds.append(float(res.x))
    bounds.append(f_max)
    bounds = np.sort(np.array(bounds))
    bounds = bounds[np.concatenate(([True], np.diff(bounds) > 1e-12 * f_max))]

    gaps, bands = [], []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi - lo < 1e-9 * f_max:
            continue
        mid = abs(h(0.5 * (lo + hi)))
        (gaps if mid > 1.0 + tol else bands).append((float(lo), float(hi)))
    # merge adjacent gap intervals split by spurious extrema
    merged = []
    for g in gaps:
        if merged and abs(merged[-1][1] - g[0]) < 1e-9 * f_max:
            merged[-1] = (merged[-1][0], g[1])
        else:
            merged.append(g)
    # a gap ending at f_max is still a gap below f_max; keep it

    q = np.linspace(0.0, math.pi / a, n_q)
    freqs = np.full((n_q, len(bands)), np.nan)
    for n, (lo, hi) in enumerate(bands):
        hlo, hhi = h(lo), h(hi)
        for i, qi in enumerate(q):
            target = math.cos(qi * a)
            glo, ghi = hlo - target, hhi - target
            if abs(glo) < 1e-9:
                freqs[i, n] = lo
            elif abs(ghi) < 1e-9:
                freqs[i, n] = hi
            elif glo * ghi < 0:
                freqs[i, n] = optimize.brentq(lambda fr: h(fr) - target, lo, hi, xtol=1e-15 * f_max, rtol=1e-14)
    return PhononicBands(q=q, freqs=freqs, gaps=merged, band_edges=bands)
