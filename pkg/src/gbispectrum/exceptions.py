"""Exception hierarchy shared by all group/domain modules."""


class BispectrumError(Exception):
    """Base class for errors raised by gbispectrum."""


class InvalidParameterError(BispectrumError, ValueError):
    """An argument is outside the domain of the operation."""


class InvalidStateError(BispectrumError, RuntimeError):
    """A required precomputed table (e.g. a CG block) is missing."""


class NumericDegeneracyError(BispectrumError, ArithmeticError):
    """A numerical construction lost rank and could not be repaired."""


class GenericityError(BispectrumError, ValueError):
    """The input violates the genericity condition an inversion relies on.

    Inversion by frequency marching divides by Fourier coefficients, so every
    coefficient on the marching path must be bounded away from zero.
    """
