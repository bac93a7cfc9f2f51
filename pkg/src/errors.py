"""Exception types shared across the toolkit.

All derive from built-in exceptions so callers may catch ValueError or
RuntimeError without importing this module.
"""


class InputError(ValueError):
    """Malformed input: shapes, non-finite values, bad attributes, bad CSV cells."""


class BudgetError(ValueError):
    """Invalid privacy parameters."""


class BudgetExhaustedError(BudgetError):
    """A ledger spend would overrun the total budget."""

    def __init__(self, label: str, message: str):
        super().__init__(f"{label}: {message}")
        self.label = label


class CalibrationError(RuntimeError):
    """No noise level reaches the requested privacy target."""


class ConvergenceError(RuntimeError):
    """An iterative numerical routine failed to converge."""


class PrivacyViolationError(RuntimeError):
    """Private training data was accessed after the fit completed."""


class ConfigError(ValueError):
    """Experiment configuration is invalid; message starts with the field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
