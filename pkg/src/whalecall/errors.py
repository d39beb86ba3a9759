"""Exception types raised across the whalecall package.

Errors are grouped by the pipeline stage that raises them so callers (and the
command-line front end, which maps them to exit codes) can tell configuration
problems, bad input data, training failures, and model-file corruption apart.
"""


class WhalecallError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(WhalecallError):
    """Invalid, unknown, or unparseable configuration key/value."""


# --- audio and annotation input ---------------------------------------------

class UnsupportedFormat(WhalecallError):
    """WAV file is valid RIFF but not PCM, mono, 16-bit."""


class CorruptHeader(WhalecallError):
    """WAV container is structurally broken (bad magic, inconsistent sizes)."""


class ParseError(WhalecallError):
    """Malformed row or header in a CSV input."""


class OverlapError(WhalecallError):
    """Annotation intervals overlap."""


class RangeError(WhalecallError):
    """Annotation interval falls outside the recording."""


# --- signal conditioning -----------------------------------------------------

class TooShort(WhalecallError):
    """Recording shorter than one analysis window."""


class NonIntegerHop(WhalecallError):
    """Window/hop geometry does not land on whole samples."""


class OutOfRange(WhalecallError):
    """Window extends past the annotated range."""


class EmptyInput(WhalecallError):
    """An operation that needs at least one window received none."""


class LengthMismatch(WhalecallError):
    """Vector lengths disagree (signal vs. noise floor, etc.)."""


class InvalidSpec(WhalecallError):
    """Filter band specification impossible at the given sample rate."""


class SampleRateMismatch(WhalecallError):
    """Recording sample rate differs from the configured pipeline rate."""


# --- label propagation -------------------------------------------------------

class NotNormalized(WhalecallError):
    """Similarity requested on windows that were never normalized."""


class DegenerateWindow(WhalecallError):
    """Similarity requested on a zero-variance (all-zero) window."""


class MixedRecordings(WhalecallError):
    """Propagation batch spans more than one recording."""


# --- network -----------------------------------------------------------------

class ShapeCollapse(WhalecallError):
    """Architecture shrinks an intermediate length to zero or below."""


class ShapeMismatch(WhalecallError):
    """Tensor shapes incompatible with the model configuration."""


class StaleCache(WhalecallError):
    """Backward pass invoked without a TRAIN-mode forward cache."""


class InvalidParams(WhalecallError):
    """Generator or model parameters violate their documented ranges."""


# --- datasets, evaluation, model files ---------------------------------------

class EmptyDataset(WhalecallError):
    """Dataset has no windows."""


class EmptyMatrix(WhalecallError):
    """Confusion matrix tallied zero windows."""


class Overcrowded(WhalecallError):
    """Requested calls cannot be placed without overlap."""


class BadMagic(WhalecallError):
    """Model file does not start with the expected magic bytes."""


class VersionMismatch(WhalecallError):
    """Model file format version not supported by this reader."""


class SizeMismatch(WhalecallError):
    """Model file payload size disagrees with its configuration."""


class SingleClassWarning(UserWarning):
    """Training set contains only one label; validation metrics degenerate."""
