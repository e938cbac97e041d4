"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid simulation, estimation or experiment parameters."""


class DataError(ValueError):
    """Ingested data could not be parsed or is inconsistent."""


class EstimateUnavailable(ArithmeticError):
    """An estimator has no defined value for the given sample.

    ``reason`` is a short machine-readable tag such as ``"log of zero count"``.
    """

    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


class InsufficientData(EstimateUnavailable):
    pass
