"""Exception types shared across the package."""


class ModelError(ValueError):
    """A model definition is invalid or self-contradictory."""


class AssumptionError(RuntimeError):
    """A standing assumption fails (e.g. the cumulant has no positive root)."""


class CapabilityError(RuntimeError):
    """The requested operation is not available for this model class."""


class ConfigError(ValueError):
    """Configuration file failed validation.

    Carries the full list of problems, not just the first one found.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
