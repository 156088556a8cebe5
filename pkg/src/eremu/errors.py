"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An input broke a documented precondition (shape, finiteness, bounds)."""


class WeightValidationError(ValueError):
    """Multi-kernel combination weights are not a valid convex combination."""


class NegativeWeightError(WeightValidationError):
    pass


class NormalizationError(WeightValidationError):
    pass


class NumericFailure(ArithmeticError):
    """A computation produced non-finite values (e.g. a diverging gradient)."""


class ConfigError(ValueError):
    pass


class RunError(RuntimeError):
    """An update round failed; the message names the round."""
