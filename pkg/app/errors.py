"""Error types shared by services, the API routers and the cli."""


class SimulationError(ValueError):
    """Base class for every failure raised by the simulator"""


class ConfigError(SimulationError):
    """Invalid or incomplete experiment configuration"""


class NumericalError(SimulationError):
    """A computation has no defined result (zero normalization, empty post-selection, no root)"""


class ReportIOError(SimulationError):
    """A report could not be written"""
