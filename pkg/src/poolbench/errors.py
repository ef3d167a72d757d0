"""Exception hierarchy for the benchmark engine."""


class PoolbenchError(Exception):
    """Base class for all engine errors."""


class InvalidConfigError(PoolbenchError):
    """A configuration value violates its documented constraints."""


class EmptyPoolError(PoolbenchError):
    """An operation needs unlabeled instances but the pool is exhausted."""


class PoolConsistencyError(PoolbenchError):
    """A batch references indices outside the unlabeled pool."""


class FormatError(PoolbenchError):
    """A binary container is malformed.

    Carries the byte offset at which the problem was detected.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DataConsistencyError(PoolbenchError):
    """Paired dataset files disagree with each other or the manifest."""


class CannotTrainError(PoolbenchError):
    """Training was requested on an empty labeled set."""


class DivergenceError(PoolbenchError):
    """Training produced a non-finite loss; the message names the step."""


class InsufficientCandidatesError(PoolbenchError):
    """A strategy was asked for more instances than are available."""


class NeedsWarmStartError(PoolbenchError):
    """A strategy requires a non-empty labeled pool."""


class MissingStrategyInputError(PoolbenchError):
    """A strategy input field required by the selected strategy is absent."""


class UndefinedMetricError(PoolbenchError):
    """A metric was evaluated on inputs for which it is undefined."""


class IncompleteSuiteError(PoolbenchError):
    """Aggregation needs results (e.g. the random baseline) that are missing."""


class RecordParseError(PoolbenchError):
    """A run record file is malformed; carries the offending line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"{message} (line {line_no})"
        super().__init__(message)
        self.line_no = line_no


class ExperimentFailure(PoolbenchError):
    """A cycle of a running experiment failed; carries the cycle number."""

    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle
