"""Exception types. Each carries the CLI exit code it maps to."""
from __future__ import annotations


class KPZError(Exception):
    exit_code = 1


class ConfigError(KPZError):
    exit_code = 2


class OrderingError(KPZError, ValueError):
    """Start time not strictly before end time."""
    exit_code = 2


class OutOfBoxError(KPZError, ValueError):
    """Query outside the region a backend can answer."""
    exit_code = 2


class UnsupportedBackendError(KPZError):
    exit_code = 2


class BoxTooLargeError(KPZError, MemoryError):
    exit_code = 2


class GateRejected(KPZError):
    """Weight function fails the finiteness condition."""
    exit_code = 3


class UndecidableTail(GateRejected):
    """Weight function has no declared tail and infinite support."""


class NumericalCertificateError(KPZError):
    """A truncation, stabilization or grid certificate could not be obtained."""
    exit_code = 4


class RadiusError(NumericalCertificateError):
    pass


class BudgetError(NumericalCertificateError):
    pass


class HorizonError(NumericalCertificateError):
    pass


class SweepError(NumericalCertificateError):
    pass


class DegenerateSliceError(NumericalCertificateError):
    pass


class AmbiguousColorError(NumericalCertificateError):
    pass


class VerificationFailure(KPZError):
    exit_code = 5
