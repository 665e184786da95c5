"""Exception types shared across the package."""


class RankingFormatError(ValueError):
    """Raised when a rankings file cannot be parsed; message lists every
    offending line as path:lineno: problem."""


class NumericalError(RuntimeError):
    """Raised when a quadrature, optimization, or sampling step cannot
    reach its accuracy or acceptance target."""
