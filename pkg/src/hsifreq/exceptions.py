"""Exception hierarchy shared by every hsifreq module."""


class HsiError(Exception):
    """Base class for all errors raised by hsifreq."""


class HsiFormatError(HsiError, ValueError):
    """A file does not follow the expected on-disk layout."""


class SizeMismatchError(HsiError, ValueError):
    """Payload size disagrees with the declared header shape."""


class InvariantError(HsiError, ValueError):
    """Data violates a type invariant (non-finite values, bad metadata)."""


class BoundsError(HsiError, IndexError):
    """An index or range lies outside the valid extent."""


class ParameterError(HsiError, ValueError):
    """A numeric parameter is outside its admissible range."""


class ShapeError(HsiError, ValueError):
    """Array shapes are inconsistent."""


class VocabularyError(HsiError, ValueError):
    """A prompt token is not part of the canonical vocabulary."""


class DegenerateBinError(HsiError, ValueError):
    """One or more radial frequency bins cannot support a fit.

    Attributes
    ----------
    bins : list of int
        Indices of the offending bins.
    """

    def __init__(self, bins, message=None):
        self.bins = list(bins)
        super().__init__(message or f"degenerate frequency bins: {self.bins}")
