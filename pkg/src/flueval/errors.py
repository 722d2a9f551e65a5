"""Exception types raised across the toolkit.

Everything derives from FluevalError so callers (and the CLI) can treat
input/contract violations uniformly.
"""


class FluevalError(Exception):
    """Base class for all toolkit errors."""


class EmptyInputError(FluevalError):
    """Nothing left to tokenize after trimming whitespace."""


class CorpusEmptyError(FluevalError):
    """A training corpus contained no usable sentences."""


class TargetTooSmallError(FluevalError):
    """Requested subword vocabulary size is below the character-alphabet floor."""


class ContainsUnkError(FluevalError):
    """A piece sequence with <unk> cannot be reconstructed losslessly."""


class InvalidDiscountError(FluevalError):
    """Kneser-Ney discount must lie strictly between 0 and 1."""


class FormatError(FluevalError):
    """A model, vocabulary, or score file is malformed."""


class ZeroLengthError(FluevalError):
    """Scored length must be at least 1."""


class MissingVocabularyError(FluevalError):
    """Wordpiece scoring requested without a subword vocabulary."""


class MissingExternalScoreError(FluevalError):
    """An id has no entry in the external score table."""


class NoReferencesError(FluevalError):
    """A reference-based metric was called with an empty reference list."""


class DegenerateVarianceError(FluevalError):
    """A variance needed by a statistic is zero."""


class DegenerateRError(FluevalError):
    """Fisher Z transform is undefined at |r| = 1."""


class LengthMismatchError(FluevalError):
    """Paired samples or rating lists differ in length."""


class OutOfRangeError(FluevalError):
    """A rating fell outside the allowed category range."""


class TooFewSamplesError(FluevalError):
    """Not enough data points for the requested computation."""


class ParseError(FluevalError):
    """A dataset line could not be parsed; message carries the line number."""


class DuplicateIdError(FluevalError):
    """Two dataset records share an id."""


class RatingOutOfRangeError(FluevalError):
    """A fluency rating fell outside [1, 3]."""


class MissingScoreError(FluevalError):
    """A dataset record has no metric score."""


class SizesExceedDatasetError(FluevalError):
    """Requested split sizes sum to more than the dataset size."""
