"""Exception types shared across the toolkit."""


class DataCollectiveError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(DataCollectiveError, ValueError):
    """Malformed or out-of-contract input (dimensions, ranges, empty sets)."""


class DegenerateProfileError(DataCollectiveError):
    """A weight profile whose total scenario weight is zero."""


class MissingParameterError(DataCollectiveError):
    """A valuation or operation was invoked without a required parameter."""


class InvalidWeightsError(DataCollectiveError, ValueError):
    """Cost weights outside the admissible region (alpha + beta must be <= 1)."""


class IncompletePortfolioError(DataCollectiveError):
    """A plan portfolio is missing one of the required conditions."""


class SingularDesignError(DataCollectiveError):
    """The regression design matrix is rank deficient or ill conditioned."""


class IngestError(DataCollectiveError):
    """Dataset ingestion failed structurally (unreadable file, unmapped column)."""


class PipelineError(DataCollectiveError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage
