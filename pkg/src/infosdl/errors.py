"""Exception types raised by infosdl."""


class SDLError(Exception):
    """Base class for all infosdl errors."""


class DimensionError(SDLError, ValueError):
    """Inputs have incompatible shapes (bin counts, matrix sizes, lengths)."""


class InvariantError(SDLError, ValueError):
    """A value violates the invariants of its type (not a density, not SPD, ...)."""


class ParameterError(SDLError, ValueError):
    """A tuning parameter is outside its admissible range."""


class DegenerateInputError(SDLError, ValueError):
    """Input is well-formed but carries no usable information (all-zero image, ...)."""


class NumericalError(SDLError, ArithmeticError):
    """A numerical routine could not produce a finite result."""


class DataFormatError(SDLError, ValueError):
    """A data, model or image file does not follow its documented format."""
