"""Exception types shared across the simulator."""


class InvalidArgument(ValueError):
    """An argument is outside the domain an operation accepts."""


class NoCapacityError(ValueError):
    """Every channel has zero gain, so no allocation can carry information."""


class PolicyRejected(ValueError):
    """A refarming policy would violate the coverage guard-rail."""


class InsufficientSamples(ValueError):
    """Too few samples to form a confidence interval."""


class ConfigError(ValueError):
    """A scenario configuration failed validation.

    ``field`` holds the dotted path of the offending key.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
