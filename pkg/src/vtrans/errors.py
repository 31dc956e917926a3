"""Shared exception hierarchy.

Every operation-level failure raised by this package derives from
:class:`VtransError` so callers (and the CLI) can catch one base type.
"""


class VtransError(Exception):
    """Base class for all package errors."""


class EmptyIntersection(VtransError):
    """A box lies fully outside its image."""


class DimensionMismatch(VtransError):
    """Two buffers that must agree in size do not."""


class EmptyToken(VtransError):
    """classify_token received an empty string."""


class NoWords(VtransError):
    """Layout grouping requires at least one word."""


class DegenerateLine(VtransError):
    """A line has zero total width, nothing can be placed along it."""


class UniformHistogram(VtransError):
    """Otsu thresholding needs at least two occupied intensity classes."""


class AdapterUnavailable(VtransError):
    """An external adapter could not be reached (after one retry)."""


class MalformedResponse(VtransError):
    """An adapter reply violated the wire contract."""


class NoAnnotation(VtransError):
    """An oracle stub has no ground truth for the requested item."""


class EmptyText(VtransError):
    """Translation requires nonempty input text."""


class MissingGlyph(VtransError):
    """A font does not cover some codepoint of the text to render."""


class TextTooWide(VtransError):
    """Rendered text does not fit the requested canvas."""


class EmptyResource(VtransError):
    """Corpus generation was given no fonts, backgrounds or vocabulary."""


class NegativeInput(VtransError):
    """Scores must be nonnegative."""


class EmptyInput(VtransError):
    """Aggregation over an empty collection."""


class MissingInput(VtransError):
    """A batch manifest entry points at a file that does not exist."""


class InvalidScore(VtransError):
    """Ratings are integers 1..4."""


class UnknownTask(VtransError):
    """A rating referenced a task id that is not part of the study."""


class UnknownStudy(VtransError):
    """No study with the requested id is loaded."""


class DuplicateRating(VtransError):
    """(rater_id, task_id) pairs are unique."""


class NoRatings(VtransError):
    """Summary requires at least one rating."""
