"""Exception hierarchy shared across the toolkit."""


class FactgraphError(Exception):
    """Base class for all toolkit errors."""


class EmptyGraph(FactgraphError):
    """Raised when an operation needs at least one triple and got none."""


class ContractViolation(FactgraphError):
    """A documented precondition was violated by the caller."""


class CyclicGraph(FactgraphError):
    """Raised when an acyclic graph was required but a cycle is present."""


class MissingSlot(FactgraphError):
    """A prompt template slot was not provided (or was empty)."""


class UnknownTemplate(FactgraphError):
    """No template registered under the requested id."""


class AllRejected(FactgraphError):
    """A parser rejected every line of a completion.

    Carries the partial parse so callers can inspect rejected lines.
    """

    def __init__(self, message, parsed=None):
        super().__init__(message)
        self.parsed = parsed


class EmptyCompletion(FactgraphError):
    """A completion was empty after stripping headers and whitespace."""


class BackendUnavailable(FactgraphError):
    """All retry attempts against the completion backend failed."""


class BackendError(FactgraphError):
    """The completion backend answered with a non-retryable error."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class CorruptionFailed(FactgraphError):
    """Document corruption returned the input unchanged."""


class EmptyDocument(FactgraphError):
    """A document had no sentences to work with."""


class ScoringFailed(FactgraphError):
    """The scorer failed on at least one chunk of a pair."""


class DegenerateClassBalance(FactgraphError):
    """A metric needed both classes but only one was present."""


class ConfigError(FactgraphError):
    """Pipeline configuration is missing, unparseable, or invalid.

    ``violations`` lists every individual problem found.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
