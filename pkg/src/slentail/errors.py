"""Exception types shared across the package."""


class SlentailError(Exception):
    """Base class for errors raised by this package."""


class ParseError(SlentailError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}" if line else message)


class ResourceExceeded(SlentailError):
    """Quantifier elimination grew past the configured node budget."""


class MalformedDifference(SlentailError):
    """A subtraction term survived difference elimination."""


class FragmentError(SlentailError):
    """Input lies outside the fragment a procedure accepts."""
