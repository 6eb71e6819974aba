"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class RangeError(ValueError):
    """Argument outside the documented supported range."""


class BranchError(DomainError):
    """Complex argument on a branch cut where no principal value is chosen."""


class ContractError(ValueError):
    """Input violates a documented precondition (e.g. wrong ensemble)."""


class NumericError(ArithmeticError):
    """A numerical procedure did not reach its tolerance."""


class ConfigError(ValueError):
    """Invalid experiment configuration; carries the offending field."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
