"""Exception and warning types shared across the package."""


class EpiposeError(Exception):
    """Base class for every error raised by this library."""


class InvalidRotation(EpiposeError):
    """A matrix fails the rotation orthonormality / determinant tolerance."""


class DegenerateMotion(EpiposeError):
    """Relative translation is (numerically) zero; no epipolar geometry exists."""


class DegenerateLine(EpiposeError):
    """Line coefficients describe the line at infinity or the zero line."""


class BadGrid(EpiposeError):
    """Sampling parameters out of range for the image size."""


class BadKernel(EpiposeError):
    """Gaussian kernel size must be an odd integer >= 3."""


class ImageTooSmall(EpiposeError):
    """Image is smaller than the filter window it must support."""


class ShapeMismatch(EpiposeError):
    """Two images that must share a shape do not."""


class DecodeError(EpiposeError):
    """Image file could not be decoded."""


class UnsupportedBitDepth(DecodeError):
    """Image uses a bit depth / pixel layout the reader does not support."""


class FormatError(EpiposeError):
    """Tensor file is malformed (magic, dims, truncation, metadata)."""


class ParseError(EpiposeError):
    """Text input is malformed; carries the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingField(EpiposeError):
    """A required key is absent from a config document; carries the field name."""

    def __init__(self, field, message=None):
        super().__init__(message or f"missing required field '{field}'")
        self.field = field


class EmptyEncodingWarning(UserWarning):
    """Every sampled pixel was background-skipped or every line missed the image."""
