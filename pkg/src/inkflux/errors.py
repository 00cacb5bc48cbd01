"""Exception hierarchy shared across the package.

``DataError`` subclasses signal problems with user-supplied logs, configs
or analysis preconditions (CLI exit code 2). ``ProviderError`` subclasses
signal failures of suggestion/embedding backends (CLI exit code 3).
"""


class InkfluxError(Exception):
    """Base class for all package errors."""


class DataError(InkfluxError):
    """Invalid input data or violated analysis precondition."""


class MalformedRecord(DataError):
    """A log line that cannot be parsed or violates the record schema."""

    def __init__(self, line_no: int, message: str = "malformed record"):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class UnknownKind(DataError):
    """A log record with an unrecognised ``kind`` value."""

    def __init__(self, line_no: int, kind: str):
        self.line_no = line_no
        self.kind = kind
        super().__init__(f"line {line_no}: unknown record kind {kind!r}")


class NegativeCount(DataError):
    """A retain/delete component with a negative count."""

    def __init__(self, line_no: int, message: str = "negative count"):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class DanglingReference(DataError):
    """A lifecycle event referencing an unknown task or suggestion."""

    def __init__(self, ref_id: str, message: str = "unresolved reference"):
        self.ref_id = ref_id
        super().__init__(f"{message}: {ref_id!r}")


class SpanOverflow(DataError):
    """A delta consuming more text than the document contains."""


class UnknownDocument(DataError):
    """A document id that does not occur in the log."""

    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        super().__init__(f"unknown document {doc_id!r}")


class TooFewPoints(DataError):
    """Knee detection needs at least three sweep points."""


class EmptySamples(DataError):
    """A statistic was requested over an empty sample list."""


class TooFewSamples(DataError):
    """KDE needs at least two samples."""


class NoSessions(DataError):
    """Baseline simulation found no usable working session."""


class NoSuggestions(DataError):
    """Baseline simulation found no delivered suggestion to sample."""


class EmptySnippet(DataError):
    """A suggestion task was created over an empty snippet."""


class InvalidParams(DataError):
    """Task parameters inconsistent with the task type."""


class InvalidConfig(DataError):
    """A generator or simulation config that fails validation."""


class NoCurves(DataError):
    """SVG rendering was asked to plot zero curves."""


class ProviderError(InkfluxError):
    """Base class for suggestion/embedding backend failures."""


class NoProvider(ProviderError):
    """No provider registered for a task type."""

    def __init__(self, task_type: str):
        self.task_type = task_type
        super().__init__(f"no provider registered for task type {task_type!r}")


class ProviderFailure(ProviderError):
    """A provider call failed; carries the upstream cause as context."""
