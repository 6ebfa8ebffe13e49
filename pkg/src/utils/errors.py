"""
Errors - Exception hierarchy for the library and the experiment runner

Every error derives from DRError and from the closest built-in exception,
so callers can catch either.
"""


class DRError(Exception):
    """Base class for all library errors"""


class DimensionMismatchError(DRError, ValueError):
    """Array shapes or lengths do not agree"""


class NonFiniteError(DRError, ArithmeticError):
    """A computation produced NaN or infinity where a finite value is required"""


class DistributionError(DRError, ValueError):
    """Input is not a valid probability distribution or Bernoulli profile"""


class SideInfoError(DRError, ValueError):
    """Side information cannot be built or references invalid indices"""


class EnumerationLimitError(DRError, ValueError):
    """Exact enumeration requested on a model that is too large"""


class ConfigError(DRError, ValueError):
    """Experiment configuration failed validation"""


class DatasetFormatError(DRError, ValueError):
    """Dataset file does not follow its published binary format"""


class BadMagicError(DatasetFormatError):
    """IDX header carries an unexpected magic number"""


class TruncatedFileError(DatasetFormatError):
    """File ends before the declared payload"""


class CountMismatchError(DatasetFormatError):
    """Image and label files disagree on the number of items"""


class LabelRangeError(DatasetFormatError):
    """Label outside the declared class range"""


class CheckpointError(DRError, ValueError):
    """Checkpoint container is invalid"""


class CheckpointMagicError(CheckpointError):
    """Checkpoint does not start with the container magic"""


class CheckpointKindError(CheckpointError):
    """Checkpoint holds a different model kind than requested"""


class CheckpointDimensionError(CheckpointError):
    """Checkpoint array dimensions are inconsistent for its model kind"""


class CheckpointTruncatedError(CheckpointError):
    """Checkpoint payload is shorter or longer than its header declares"""
