"""Exception types shared across the package."""


class SecureCodingError(Exception):
    """Base class for all package errors."""


class SpecError(SecureCodingError, ValueError):
    pass


class NormalizationError(SpecError):
    pass


class NegativeProbability(SpecError):
    pass


class ShapeMismatch(SpecError):
    pass


class EmptySupport(SecureCodingError, ValueError):
    pass


class UncodedSymbol(SecureCodingError, ValueError):
    """Symbol has zero probability and therefore no codeword."""


class Truncated(SecureCodingError):
    """Bitstream ended in the middle of a codeword.

    ``symbols`` holds everything decoded before the cut and ``residual``
    the number of dangling bits.
    """

    def __init__(self, message, symbols=(), residual=0):
        super().__init__(message)
        self.symbols = list(symbols)
        self.residual = residual


class NoStages(SecureCodingError, ValueError):
    pass


class TooLarge(SecureCodingError, ValueError):
    """Exact enumeration would exceed its size guard."""


class Infeasible(SecureCodingError, ValueError):
    """No reproduction function meets the distortion budget."""


class KeyMismatch(SecureCodingError):
    """Decoded symbols fail the integrity check, usually a wrong key seed."""


class FormatError(SecureCodingError, ValueError):
    pass
