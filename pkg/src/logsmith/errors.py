"""Exception types shared across the package."""


class LogsmithError(Exception):
    """Base class for all controlled failures."""


class ParseFailure(LogsmithError):
    """The Java-subset grammar could not produce a tree."""


class LineOutOfRange(LogsmithError):
    """A query line falls outside the method span."""


class EmptyCorpus(LogsmithError):
    """An operation requires at least one record/document."""


class EmptyIndex(LogsmithError):
    """Retrieval requested against an index with no documents."""


class DuplicateDocId(LogsmithError):
    """Two documents with the same id were offered to an index build."""


class IoFailure(LogsmithError):
    """A corpus/dataset sink could not be written."""


class UnparseableDecision(LogsmithError):
    """A judger response contains neither LOG nor NO_LOG as a token."""


class MalformedResponse(LogsmithError):
    """An agent response contains neither a command nor a code block."""


class NoCodeBlock(LogsmithError):
    """No fenced code block found in an agent response."""


class MissingTag(LogsmithError):
    """The <<need_logging>> placeholder is absent."""


class TurnBudgetExceeded(LogsmithError):
    """An agent loop hit its max_turns limit without a final answer."""


class GlobalTimeout(LogsmithError):
    """The pipeline's global time budget expired."""


class RetriesExhausted(LogsmithError):
    """Transient-failure retries ran out."""


class UnparseableScore(LogsmithError):
    """A judge response contains no integer score in range."""


class IdMismatch(LogsmithError):
    """Prediction and gold records do not align by method id."""


class BackendError(LogsmithError):
    """A model backend failed to produce a completion."""
