"""Exception types shared across the solver modules."""


class CMBBTError(Exception):
    """Base class for all errors raised by this package."""


class SingularSymbol(CMBBTError):
    """The (shifted) symbol has an identically vanishing determinant.

    Parameters
    ----------
    epsilon : complex, optional
        Spectral parameter at which the shifted symbol ``A - epsilon`` is singular.
    """

    def __init__(self, epsilon=None, message=None):
        self.epsilon = epsilon
        if message is None:
            if epsilon is None:
                message = "symbol is singular (determinant vanishes identically)"
            else:
                message = f"symbol minus epsilon={complex(epsilon)!r} is singular"
        super().__init__(message)


class NTooSmall(CMBBTError):
    """The number of block sites is too small for the structured algorithm."""


class SearchIncomplete(CMBBTError):
    """The eigenvalue search could not certify that every eigenvalue was found."""


class OracleCapExceeded(CMBBTError):
    """A dense oracle computation was requested above the configured size cap."""


class ProblemFormatError(CMBBTError, ValueError):
    """A problem document could not be parsed.

    Parameters
    ----------
    message : str
        What went wrong.
    path : str, optional
        Location inside the document, e.g. ``$.coefficients["1"][0][1]``.
    """

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
