"""Tokens, tag sets, annotation records and the ground-truth case grid.

An annotation record captures one annotator's (possibly uncertain) labeling
of a token or span in one of four styles: a single precise tag, a set of
candidate tags, a numeric distribution, or ordinal plausibility ranks.
Together with the world assumption of the tag set and the annotator's
precise-vs-graded ground-truth bit, each record falls into one of ten
cases; `classify_case` computes that case id.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterator

from .errors import ClosedWorldViolation, DuplicateTag, InvalidRecord
from .uncertainty import (
    Frame,
    OrdinalScale,
    PossibilityDistribution,
    TagSubset,
    World,
    from_ordinal,
    from_set_constraint,
)

# Tab-separated file columns cannot carry these; there is no escape mechanism.
_BANNED = ("\t", "\n", "|")


def _check_text(value: str, what: str) -> None:
    if not value:
        raise ValueError(f"{what} must be non-empty")
    for ch in _BANNED:
        if ch in value:
            raise ValueError(f"{what} {value!r} contains forbidden character {ch!r}")


class Layer(enum.Enum):
    POS = "POS"
    CONSTRUCTION = "Construction"


class GtMode(enum.Enum):
    PRECISE = "precise"
    GRADED = "graded"
    UNKNOWN = "unknown"


class Style(enum.Enum):
    PRECISE = "precise"
    SET = "set"
    DIST = "dist"
    ORDINAL = "ordinal"


class UncertaintySource(enum.Enum):
    AMBIGUITY = "ambiguity"
    EPISTEMIC = "epistemic"
    UNCLEAR = "unclear"


@dataclass(frozen=True)
class TagEntry:
    tag: str
    description: str = ""
    version: int = 1
    date: str | None = None  # ISO date the tag entered the set, if recorded

    def __post_init__(self) -> None:
        _check_text(self.tag, "tag")
        if self.tag.startswith("#"):
            # tags are line-initial in tagset files, where '#' opens a header
            raise ValueError("tag may not start with '#'")
        for ch in ("\t", "\n"):
            if ch in self.description:
                raise ValueError("description may not contain tabs or newlines")


@dataclass(frozen=True)
class TagSet:
    """A layer's tag inventory with open-world versioning.

    Entries are append-only; `added` versions strictly increase with
    insertion order, so earlier annotations stay interpretable after the
    set grows.  Closed-world sets refuse growth entirely.
    """

    layer: Layer
    world: World
    entries: tuple[TagEntry, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.entries, tuple):
            object.__setattr__(self, "entries", tuple(self.entries))
        seen: set[str] = set()
        last_version = 0
        for entry in self.entries:
            if entry.tag in seen:
                raise DuplicateTag(entry.tag)
            seen.add(entry.tag)
            if entry.version <= last_version:
                raise ValueError("entry versions must strictly increase")
            last_version = entry.version

    @property
    def frame(self) -> Frame:
        return Frame(tuple(e.tag for e in self.entries), self.world)

    def __contains__(self, tag: str) -> bool:
        return any(e.tag == tag for e in self.entries)

    def __iter__(self) -> Iterator[TagEntry]:
        return iter(self.entries)


def register_tag(
    tagset: TagSet, tag: str, description: str = "", date: str | None = None
) -> TagSet:
    """Append a new tag to an open tag set, returning the grown set."""
    if tagset.world is not World.OPEN:
        raise ClosedWorldViolation(f"cannot add {tag!r} to a closed tag set")
    if tag in tagset:
        raise DuplicateTag(tag)
    next_version = tagset.entries[-1].version + 1 if tagset.entries else 1
    entry = TagEntry(tag=tag, description=description, version=next_version, date=date)
    return replace(tagset, entries=tagset.entries + (entry,))


@dataclass(frozen=True)
class Token:
    index: int
    form: str

    def __post_init__(self) -> None:
        _check_text(self.form, "token form")
        if self.index < 0:
            raise ValueError("token index must be >= 0")


@dataclass(frozen=True)
class Document:
    """A document as a list of sentences; token indices run document-wide."""

    doc_id: str
    sentences: tuple[tuple[Token, ...], ...]
    date: str | None = None

    def __post_init__(self) -> None:
        sentences = tuple(tuple(s) for s in self.sentences)
        object.__setattr__(self, "sentences", sentences)
        expected = 0
        for sentence in sentences:
            if not sentence:
                raise ValueError("sentences must contain at least one token")
            for token in sentence:
                if token.index != expected:
                    raise ValueError(
                        f"token indices must be contiguous; expected {expected}, "
                        f"got {token.index}"
                    )
                expected += 1

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def tokens(self) -> Iterator[Token]:
        for sentence in self.sentences:
            yield from sentence

    def token(self, index: int) -> Token:
        for sentence in self.sentences:
            for token in sentence:
                if token.index == index:
                    return token
        raise IndexError(index)

    def sentence_index_of(self, token_index: int) -> int:
        offset = 0
        for i, sentence in enumerate(self.sentences):
            offset += len(sentence)
            if token_index < offset:
                return i
        raise IndexError(token_index)


@dataclass(frozen=True)
class Target:
    """A token (start == end) or span (inclusive) inside one document."""

    doc_id: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"bad span [{self.start}, {self.end}]")


@dataclass(frozen=True)
class AnnotationEntry:
    """One tag inside a record; the payload depends on the record's style."""

    tag: str
    degree: float | None = None  # distributional styles
    rank: int | None = None  # ordinal style


@dataclass(frozen=True)
class AnnotationRecord:
    target: Target
    layer: Layer
    annotator: str
    style: Style
    entries: tuple[AnnotationEntry, ...]
    gt_mode: GtMode = GtMode.UNKNOWN
    uncertainty_source: UncertaintySource | None = None
    timestamp: str | None = None  # stamped by the store, not serialized

    def __post_init__(self) -> None:
        if not isinstance(self.entries, tuple):
            object.__setattr__(self, "entries", tuple(self.entries))

    def tags(self) -> tuple[str, ...]:
        return tuple(e.tag for e in self.entries)


@dataclass(frozen=True)
class Diagnostic:
    """Machine-readable validation finding; never an exception by itself."""

    code: str
    message: str
    target: Target

    def __str__(self) -> str:
        return (
            f"{self.target.doc_id}:{self.target.start}-{self.target.end}:"
            f"{self.code}: {self.message}"
        )


def _effective_entry_count(record: AnnotationRecord) -> int:
    """Entries that actually leave a tag in play (degree/rank above bottom)."""
    if record.style is Style.DIST:
        return sum(1 for e in record.entries if (e.degree or 0.0) > 0.0)
    if record.style is Style.ORDINAL:
        return sum(1 for e in record.entries if (e.rank or 1) > 1)
    return len(record.entries)


def validate_record(
    record: AnnotationRecord,
    tagset: TagSet,
    scale: OrdinalScale | None = None,
) -> list[Diagnostic]:
    """Check a record against a tag set and scale; returns diagnostics.

    An empty list means the record satisfies every invariant.  Diagnostics
    carry machine-readable codes so callers (CLI, service, UI) can act on
    them without string matching.
    """
    scale = scale or OrdinalScale.default()
    diags: list[Diagnostic] = []
    t = record.target

    def bad(code: str, message: str) -> None:
        diags.append(Diagnostic(code=code, message=message, target=t))

    if record.layer is not tagset.layer:
        bad("LayerMismatch", f"record layer {record.layer.value}, tag set "
            f"{tagset.layer.value}")
    if record.layer is Layer.POS and t.start != t.end:
        bad("PosSpanMultiToken", "POS annotations cover exactly one token")
    if not record.annotator:
        bad("MissingAnnotator", "annotator id is empty")

    seen: set[str] = set()
    for entry in record.entries:
        if entry.tag in seen:
            bad("DuplicateEntryTag", f"tag {entry.tag!r} listed twice")
        seen.add(entry.tag)
        if entry.tag not in tagset:
            code = (
                "UnknownTagClosedWorld"
                if tagset.world is World.CLOSED
                else "UnknownTagOpenWorld"
            )
            bad(code, f"tag {entry.tag!r} is not in the {tagset.layer.value} tag set")
        if record.style in (Style.PRECISE, Style.SET):
            if entry.degree is not None or entry.rank is not None:
                bad("UnexpectedPayload", f"{record.style.value} entries carry no payload")
        elif record.style is Style.DIST:
            if entry.degree is None:
                bad("MissingDegree", f"distributional entry {entry.tag!r} has no degree")
            elif not 0.0 <= entry.degree <= 1.0:
                bad("DegreeOutOfRange", f"degree {entry.degree} outside [0,1]")
            if entry.rank is not None:
                bad("UnexpectedPayload", "distributional entries carry no rank")
        elif record.style is Style.ORDINAL:
            if entry.rank is None:
                bad("MissingRank", f"ordinal entry {entry.tag!r} has no rank")
            elif entry.rank not in scale.numeric_map:
                bad("UnknownRank", f"rank {entry.rank} not on the scale")
            if entry.degree is not None:
                bad("UnexpectedPayload", "ordinal entries carry no degree")

    effective = _effective_entry_count(record)
    if record.style is Style.PRECISE:
        if record.gt_mode is GtMode.GRADED:
            if not record.entries:
                bad("PreciseCardinality", "a precise annotation names at least one tag")
        elif len(record.entries) != 1:
            bad("PreciseCardinality",
                "a precise annotation of a precise ground truth names exactly one tag")
    elif effective == 0 and tagset.world is World.CLOSED:
        bad("EmptySetClosedWorld",
            "every tag excluded, but a closed world guarantees one applies")
    return diags


def classify_case(
    record: AnnotationRecord,
    tagset: TagSet,
    scale: OrdinalScale | None = None,
) -> int:
    """Place a valid record on the ten-case ground-truth/annotation grid.

    Closed world: precise ground truth maps precise/set/weighted styles to
    cases 1/2/3 and graded ground truth to 4/5; an open world shifts the
    same grid to 6-8 and 9/10.  An unknown ground-truth bit is read
    conservatively as precise.
    """
    diagnostics = validate_record(record, tagset, scale)
    if diagnostics:
        raise InvalidRecord(diagnostics)
    graded = record.gt_mode is GtMode.GRADED
    closed = tagset.world is World.CLOSED
    if closed:
        if graded:
            return 4 if record.style is Style.PRECISE else 5
        if record.style is Style.PRECISE:
            return 1
        return 2 if record.style is Style.SET else 3
    if graded:
        return 9 if record.style is Style.PRECISE else 10
    if record.style is Style.PRECISE:
        return 6
    return 7 if record.style is Style.SET else 8


def to_possibility(
    record: AnnotationRecord,
    frame: Frame,
    scale: OrdinalScale | None = None,
) -> PossibilityDistribution:
    """Bridge any annotation style into a possibility distribution.

    Precise and set-valued records become 0/1 constraint distributions,
    ordinal records go through the scale's numeric map, distributional
    records pass through unchanged.  The record is assumed valid.
    """
    scale = scale or OrdinalScale.default()
    if record.style in (Style.PRECISE, Style.SET):
        return from_set_constraint(TagSubset(frame, frozenset(record.tags())))
    if record.style is Style.ORDINAL:
        entries = []
        for e in record.entries:
            if e.rank is None:
                raise InvalidRecord([Diagnostic("MissingRank", e.tag, record.target)])
            entries.append((e.tag, e.rank))
        return from_ordinal(frame, entries, scale)
    degrees = {}
    for e in record.entries:
        if e.degree is None:
            raise InvalidRecord([Diagnostic("MissingDegree", e.tag, record.target)])
        degrees[e.tag] = e.degree
    return PossibilityDistribution(frame, degrees)
