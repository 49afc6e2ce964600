"""Exception hierarchy shared by all softtag modules."""


class SofttagError(Exception):
    """Base class for all errors raised by this package."""


class UnknownTag(SofttagError):
    """A tag identifier does not belong to the frame it is used with."""


class EmptyConstraint(SofttagError):
    """An empty set was offered as information under a closed world."""


class FrameMismatch(SofttagError):
    """Two values built over different frames were combined."""


class UnknownRank(SofttagError):
    """An ordinal rank is not defined by the plausibility scale."""


class InvalidRecord(SofttagError):
    """An annotation record failed validation; carries the diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        detail = "; ".join(d.code for d in self.diagnostics) or "invalid record"
        super().__init__(detail)


class ClosedWorldViolation(SofttagError):
    """A mutation that only an open tag set allows was attempted."""


class DuplicateTag(SofttagError):
    """A tag was registered twice in the same tag set."""


class ParseError(SofttagError):
    """A corpus file could not be parsed; carries the 1-based line number."""

    def __init__(self, message, line=0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class NonContiguousIndex(ParseError):
    """Token indices in a document file skip or repeat a position."""


class UnknownDocument(SofttagError):
    """An annotation references a document id that is not loaded."""


class TargetMismatch(SofttagError):
    """Records passed to an aggregation do not share target and layer."""


class EmptyInput(SofttagError):
    """An operation that needs at least one element got none."""


class NoData(SofttagError):
    """Training was requested on a corpus without usable sentences."""


class EmptyDocument(SofttagError):
    """Tagging was requested for a document without tokens."""


class AlignmentError(SofttagError):
    """Gold annotations do not line up with tagger outputs."""


class NoModelLoaded(SofttagError):
    """A suggestion/review endpoint was called before a model was loaded."""


class RevisionConflict(SofttagError):
    """Optimistic concurrency check failed: stale expected revision."""

    def __init__(self, expected, current):
        super().__init__(f"expected revision {expected}, store is at {current}")
        self.expected = expected
        self.current = current


class ValidationFailed(SofttagError):
    """A write was rejected because the record has diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.code for d in self.diagnostics))
