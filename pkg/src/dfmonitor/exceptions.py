"""Exception hierarchy shared across the package."""


class DFMonitorError(Exception):
    """Base class for all errors raised by dfmonitor."""


class InvalidKernelError(DFMonitorError, ValueError):
    """A kernel produced a non-finite value or is not allowed in this context."""


class ParameterError(DFMonitorError, ValueError):
    """A model or configuration parameter is outside its admissible range."""


class StationarityError(ParameterError):
    """ARCH coefficients violate the stationarity condition."""


class ParseError(DFMonitorError, ValueError):
    """An input file row could not be parsed."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class InsufficientDataError(DFMonitorError, ValueError):
    """Not enough observations for the requested computation."""


class RangeError(DFMonitorError, IndexError):
    """A time index lies outside the monitoring window."""


class TruncationError(DFMonitorError, ValueError):
    """Newey-West lag truncation is not smaller than the sample size."""


class SimulationQualityError(DFMonitorError, RuntimeError):
    """Too many limit-functional replications had to be rejected."""


class CalibrationError(DFMonitorError, RuntimeError):
    """A calibrated control limit violates c < 0."""


class ConfigurationError(DFMonitorError, ValueError):
    """A chart or study was configured inconsistently."""


class AggregationError(DFMonitorError, ValueError):
    """Study metrics were requested for an empty set of runs."""
