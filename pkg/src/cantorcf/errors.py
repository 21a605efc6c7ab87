"""Exception hierarchy shared by all modules."""


class CantorError(Exception):
    """Base class for every error raised by this package."""


class BudgetExceeded(CantorError):
    """A digit, bit or iteration budget ran out before the answer was found."""


class ConstructionInvariantError(CantorError):
    """An internal postcondition of the construction failed (an implementation bug)."""


class FactorizationError(CantorError):
    pass


class PsiSyntaxError(CantorError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class PsiRangeError(CantorError):
    """Psi evaluated outside (0, 1] or to something not exactly representable."""


class CertificateError(CantorError):
    """A certificate document could not be parsed."""
