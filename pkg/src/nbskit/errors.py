"""Exception types shared across the toolkit."""


class NbskitError(Exception):
    """Base class for all toolkit errors."""


class DataFormatError(NbskitError):
    """A bundled or user-supplied data file could not be parsed.

    Carries the offending file and, where known, the line or field.
    """

    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        detail = message
        if source is not None:
            detail = f"{source}: {detail}" if line is None else f"{source}:{line}: {detail}"
        super().__init__(detail)
        self.source = source
        self.line = line


class ValidationError(NbskitError):
    """A structural invariant of the catalogue or a derived dataset is violated."""


class UnknownIdError(NbskitError):
    """An NBS id, taxonomy code or facet id does not exist in the catalogue."""


class CrosswalkError(NbskitError):
    """A project facet label has no crosswalk rule to the common baseline."""


class ComputationError(NbskitError):
    """A statistical operation was called on input it is undefined for."""


class ArbitrationError(NbskitError):
    """The name-decision pipeline cannot proceed (missing stage data, all candidates vetoed, ties)."""


class QueryError(NbskitError):
    """A ranking or profile request is malformed or matches nothing."""
