"""Optomechanics of suspended double-nanobeam photonic crystal waveguides.

Modules
-------
mech       tensioned-beam eigenmodes, effective mass, thermal amplitudes, phononic bands
noise      Langevin motion, noise spectra, Butterworth and Welch DSP, sensitivity report
optics     band-edge dispersion, resonance ladder, coupling rates, moving-boundary shifts
transduce  motion-to-phase models, homodyne trace synthesis, RMS phase estimation
series     time-series and spectrum containers and file formats
config     scenario files with unit-suffixed quantities
cli        the ``apcw`` command
"""

__version__ = "0.1.0"

from .errors import (ApcwError, BandGapError, ConfigError, DomainError, NumericalError,
                     UnsupportedGeometryError)

__all__ = [
    "__version__",
    "ApcwError",
    "BandGapError",
    "ConfigError",
    "DomainError",
    "NumericalError",
    "UnsupportedGeometryError",
]
