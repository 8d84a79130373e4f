"""Exception hierarchy shared by all apcw modules."""


class ApcwError(Exception):
    """Base class for all library errors."""


class DomainError(ApcwError, ValueError):
    """An input lies outside the domain where an operation is defined."""


class UnsupportedGeometryError(DomainError):
    """The requested model cannot represent the given geometry."""


class BandGapError(DomainError):
    """Optical frequency inside the band gap, where the guided mode is evanescent."""


class NumericalError(ApcwError, RuntimeError):
    """A numerical procedure failed (root bracketing, eigen-solver, ...).

    ``diagnostics`` carries whatever context helps reproduce the failure.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class ConfigError(ApcwError):
    """Scenario configuration failed validation.

    ``path`` is the JSON path of the offending entry and ``line`` the 1-based
    line in the source document, when known.
    """

    def __init__(self, message, path=None, line=None):
        super().__init__(message)
        self.path = path
        self.line = line
