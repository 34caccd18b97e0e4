"""Exception types for the training harness."""


class HarnessError(Exception):
    """Base class for harness failures."""


class CipherMismatchError(HarnessError):
    """The encryption tool did not reproduce the pinned reference vectors."""


class TrainingDivergedError(HarnessError):
    """A training run produced a non-finite loss."""


class IncompleteMatrixError(HarnessError):
    """A trend report was requested for a matrix with missing cells."""
