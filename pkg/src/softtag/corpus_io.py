"""Bit-exact parsing and serialization of corpus files.

All files are UTF-8, LF, tab-separated.  '|' separates entries inside a
column, '/' binds an ordinal rank and ':' binds a numeric degree (both
split from the right, so tags may contain those characters; only tab,
newline and '|' are banned outright, with no escape mechanism).

Serializers emit one canonical form so identical bundles produce
byte-identical files: floats use the shortest round-tripping decimal,
annotation rows are sorted by (doc, start, layer, annotator) and entries
inside a row are sorted by tag.

The corpus directory is plain files::

    corpus/
      documents/<doc_id>.tsv
      tagsets/<Layer>.tsv
      annotations/records.tsv   (append-only log; "#tombstone=<id>" lines)
      scale.tsv

One writer at a time, enforced by a lock file; readers never block.
"""

from __future__ import annotations

import datetime
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from filelock import FileLock

from .annotations import (
    AnnotationEntry,
    AnnotationRecord,
    Diagnostic,
    Document,
    GtMode,
    Layer,
    Style,
    TagEntry,
    TagSet,
    Target,
    Token,
    UncertaintySource,
    register_tag,
    validate_record,
)
from .errors import (
    DuplicateTag,
    NonContiguousIndex,
    ParseError,
    UnknownDocument,
    UnknownTag,
)
from .uncertainty import OrdinalScale, World

_DOC_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")


def format_float(value: float) -> str:
    """Shortest decimal that round-trips the 64-bit value (repr contract)."""
    return repr(float(value))


def _check_doc_id(doc_id: str, line: int = 0) -> None:
    if not _DOC_ID_RE.match(doc_id):
        raise ParseError(f"bad document id {doc_id!r}", line)


def _split_headers(text: str) -> tuple[dict[str, str], list[tuple[int, str]]]:
    """Pop '#key=value' header lines off the top of a file."""
    headers: dict[str, str] = {}
    body: list[tuple[int, str]] = []
    in_header = True
    for lineno, line in enumerate(text.splitlines(), start=1):
        if in_header and line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if not sep or not key:
                raise ParseError(f"malformed header {line!r}", lineno)
            if key in headers:
                raise ParseError(f"duplicate header {key!r}", lineno)
            headers[key] = value
            continue
        if line.strip() or not in_header:
            in_header = False
        body.append((lineno, line))
    return headers, body


# ---------------------------------------------------------------------------
# documents


def parse_document(text: str, default_doc_id: str = "") -> Document:
    """Parse "INDEX<TAB>FORM" lines; a blank line ends the sentence."""
    headers, body = _split_headers(text)
    doc_id = headers.pop("doc", default_doc_id)
    date = headers.pop("date", None)
    if headers:
        raise ParseError(f"unknown document header {next(iter(headers))!r}")
    if doc_id:
        _check_doc_id(doc_id)
    if date is not None:
        try:
            datetime.date.fromisoformat(date)
        except ValueError:
            raise ParseError(f"bad ISO date {date!r}") from None

    sentences: list[tuple[Token, ...]] = []
    current: list[Token] = []
    expected = 0
    for lineno, line in body:
        if not line.strip():
            if current:
                sentences.append(tuple(current))
                current = []
            continue
        cells = line.split("\t")
        if len(cells) != 2:
            raise ParseError("expected INDEX<TAB>FORM", lineno)
        try:
            index = int(cells[0])
        except ValueError:
            raise ParseError(f"bad token index {cells[0]!r}", lineno) from None
        if index != expected:
            raise NonContiguousIndex(
                f"token index {index}, expected {expected}", lineno
            )
        expected += 1
        try:
            current.append(Token(index=index, form=cells[1]))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    if current:
        sentences.append(tuple(current))
    return Document(doc_id=doc_id, sentences=tuple(sentences), date=date)


def serialize_document(doc: Document) -> str:
    lines: list[str] = []
    if doc.doc_id:
        lines.append(f"#doc={doc.doc_id}")
    if doc.date:
        lines.append(f"#date={doc.date}")
    for i, sentence in enumerate(doc.sentences):
        if i:
            lines.append("")
        lines.extend(f"{tok.index}\t{tok.form}" for tok in sentence)
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# tag sets and scales


def parse_tagset(text: str) -> TagSet:
    headers, body = _split_headers(text)
    try:
        layer = Layer(headers.pop("layer"))
    except KeyError:
        raise ParseError("missing #layer header") from None
    except ValueError:
        raise ParseError(f"unknown layer {headers['layer']!r}") from None
    try:
        world = World(headers.pop("world"))
    except KeyError:
        raise ParseError("missing #world header") from None
    except ValueError:
        raise ParseError(f"unknown world {headers['world']!r}") from None
    if headers:
        raise ParseError(f"unknown tagset header {next(iter(headers))!r}")

    entries: list[TagEntry] = []
    seen: set[str] = set()
    for lineno, line in body:
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) not in (2, 3):
            raise ParseError("expected TAG<TAB>DESCRIPTION[<TAB>DATE]", lineno)
        tag, description = cells[0], cells[1]
        date = cells[2] if len(cells) == 3 else None
        if tag in seen:
            raise DuplicateTag(f"line {lineno}: duplicate tag {tag!r}")
        seen.add(tag)
        try:
            entries.append(
                TagEntry(tag=tag, description=description,
                         version=len(entries) + 1, date=date)
            )
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return TagSet(layer=layer, world=world, entries=tuple(entries))


def serialize_tagset(tagset: TagSet) -> str:
    lines = [f"#layer={tagset.layer.value}", f"#world={tagset.world.value}"]
    for entry in tagset.entries:
        cells = [entry.tag, entry.description]
        if entry.date is not None:
            cells.append(entry.date)
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def parse_scale(text: str) -> OrdinalScale:
    levels: list[tuple[int, str]] = []
    numeric: dict[int, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != 3:
            raise ParseError("expected RANK<TAB>LABEL<TAB>DEGREE", lineno)
        try:
            rank = int(cells[0])
            degree = float(cells[2])
        except ValueError:
            raise ParseError(f"bad rank or degree in {line!r}", lineno) from None
        levels.append((rank, cells[1]))
        numeric[rank] = degree
    try:
        return OrdinalScale(levels=tuple(levels), numeric_map=numeric)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def serialize_scale(scale: OrdinalScale) -> str:
    lines = [
        f"{rank}\t{label}\t{format_float(scale.numeric_map[rank])}"
        for rank, label in scale.levels
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# annotations

_TOMBSTONE_PREFIX = "#tombstone="


def _format_entries(record: AnnotationRecord) -> str:
    def cell(entry: AnnotationEntry) -> str:
        if record.style is Style.DIST:
            return f"{entry.tag}:{format_float(entry.degree)}"
        if record.style is Style.ORDINAL:
            return f"{entry.tag}/{entry.rank}"
        return entry.tag

    return "|".join(cell(e) for e in sorted(record.entries, key=lambda e: e.tag))


def _parse_entries(text: str, style: Style, lineno: int) -> tuple[AnnotationEntry, ...]:
    if text == "":
        return ()
    entries = []
    for chunk in text.split("|"):
        if not chunk:
            raise ParseError("empty entry in entries column", lineno)
        if style is Style.DIST:
            tag, sep, raw = chunk.rpartition(":")
            if not sep or not tag:
                raise ParseError(f"expected TAG:DEGREE, got {chunk!r}", lineno)
            try:
                entries.append(AnnotationEntry(tag=tag, degree=float(raw)))
            except ValueError:
                raise ParseError(f"bad degree {raw!r}", lineno) from None
        elif style is Style.ORDINAL:
            tag, sep, raw = chunk.rpartition("/")
            if not sep or not tag:
                raise ParseError(f"expected TAG/RANK, got {chunk!r}", lineno)
            try:
                entries.append(AnnotationEntry(tag=tag, rank=int(raw)))
            except ValueError:
                raise ParseError(f"bad rank {raw!r}", lineno) from None
        else:
            entries.append(AnnotationEntry(tag=chunk))
    return tuple(entries)


def format_annotation_row(record: AnnotationRecord) -> str:
    """One canonical annotation-file row, without trailing newline."""
    cells = [
        record.target.doc_id,
        record.layer.value,
        str(record.target.start),
        str(record.target.end),
        record.annotator,
        record.gt_mode.value,
        record.style.value,
        _format_entries(record),
    ]
    if record.uncertainty_source is not None:
        cells.append(record.uncertainty_source.value)
    return "\t".join(cells)


def parse_annotation_row(line: str, lineno: int = 0) -> tuple[AnnotationRecord, list[str]]:
    """Parse one row; returns the record plus any '#'-prefixed extensions."""
    cells = line.split("\t")
    if len(cells) < 8:
        raise ParseError("expected at least 8 annotation columns", lineno)
    doc_id, layer_s, start_s, end_s, annotator = cells[:5]
    gt_s, style_s, entries_s = cells[5:8]
    _check_doc_id(doc_id, lineno)
    try:
        layer = Layer(layer_s)
    except ValueError:
        raise ParseError(f"unknown layer {layer_s!r}", lineno) from None
    try:
        start, end = int(start_s), int(end_s)
    except ValueError:
        raise ParseError("START and END must be integers", lineno) from None
    try:
        gt_mode = GtMode(gt_s)
    except ValueError:
        raise ParseError(f"unknown gt_mode {gt_s!r}", lineno) from None
    try:
        style = Style(style_s)
    except ValueError:
        raise ParseError(f"unknown style {style_s!r}", lineno) from None
    source: UncertaintySource | None = None
    extensions: list[str] = []
    for extra in cells[8:]:
        if extra.startswith("#"):
            extensions.append(extra)
        elif source is None and not extensions:
            try:
                source = UncertaintySource(extra)
            except ValueError:
                raise ParseError(f"unknown uncertainty source {extra!r}", lineno) from None
        else:
            raise ParseError(f"unexpected trailing column {extra!r}", lineno)
    if not annotator:
        raise ParseError("empty annotator column", lineno)
    try:
        target = Target(doc_id=doc_id, start=start, end=end)
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from None
    record = AnnotationRecord(
        target=target,
        layer=layer,
        annotator=annotator,
        style=style,
        entries=_parse_entries(entries_s, style, lineno),
        gt_mode=gt_mode,
        uncertainty_source=source,
    )
    return record, extensions


@dataclass(frozen=True)
class LogEntry:
    """A live annotation from the append-only log, with its store id."""

    record_id: int
    record: AnnotationRecord
    line: int


def parse_annotation_log(text: str) -> tuple[list[LogEntry], int]:
    """Replay an annotation log; tombstones drop earlier records.

    Returns the live entries in append order plus the total number of
    record rows ever appended (the next id is that count + 1).
    """
    alive: dict[int, LogEntry] = {}
    count = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith(_TOMBSTONE_PREFIX):
            raw = line[len(_TOMBSTONE_PREFIX):]
            try:
                victim = int(raw)
            except ValueError:
                raise ParseError(f"bad tombstone id {raw!r}", lineno) from None
            if victim not in alive and not 1 <= victim <= count:
                raise ParseError(f"tombstone for unknown record {victim}", lineno)
            alive.pop(victim, None)
            continue
        if line.startswith("#"):
            raise ParseError(f"unknown log directive {line!r}", lineno)
        record, _ = parse_annotation_row(line, lineno)
        count += 1
        alive[count] = LogEntry(record_id=count, record=record, line=lineno)
    return list(alive.values()), count


def check_annotation_context(
    record: AnnotationRecord,
    documents: Mapping[str, Document] | None,
    tagsets: Mapping[Layer, TagSet] | None,
    lineno: int = 0,
) -> None:
    """Strict import checks: resolvable document, known tags (closed world)."""
    if documents is not None and record.target.doc_id not in documents:
        raise UnknownDocument(f"line {lineno}: {record.target.doc_id!r}")
    if tagsets is not None:
        tagset = tagsets.get(record.layer)
        if tagset is not None and tagset.world is World.CLOSED:
            for tag in record.tags():
                if tag not in tagset:
                    raise UnknownTag(f"line {lineno}: {tag!r} not in closed "
                                     f"{record.layer.value} tag set")


def parse_annotations(
    text: str,
    documents: Mapping[str, Document] | None = None,
    tagsets: Mapping[Layer, TagSet] | None = None,
    strict: bool = False,
) -> list[AnnotationRecord]:
    """Parse an annotation log into live records.

    With ``strict`` (streaming-style import), unresolvable documents and
    closed-world unknown tags raise immediately; otherwise they are left
    for bundle validation to report as diagnostics.
    """
    entries, _ = parse_annotation_log(text)
    if strict:
        for entry in entries:
            check_annotation_context(entry.record, documents, tagsets, entry.line)
    return [e.record for e in entries]


def annotation_sort_key(record: AnnotationRecord):
    """Canonical record order: doc, start, layer, annotator, then the rest."""
    return (
        record.target.doc_id,
        record.target.start,
        record.layer.value,
        record.annotator,
        record.target.end,
        record.style.value,
        record.gt_mode.value,
        _format_entries(record),
    )


def serialize_annotations(records: Iterable[AnnotationRecord]) -> str:
    rows = [format_annotation_row(r) for r in sorted(records, key=annotation_sort_key)]
    return "\n".join(rows) + ("\n" if rows else "")


# ---------------------------------------------------------------------------
# bundles and the corpus directory


@dataclass(frozen=True)
class CorpusBundle:
    """Everything one corpus holds: documents, tag sets, scale, annotations."""

    documents: tuple[Document, ...]
    tagsets: Mapping[Layer, TagSet]
    scale: OrdinalScale
    annotations: tuple[AnnotationRecord, ...] = ()

    def __post_init__(self) -> None:
        docs = tuple(sorted(self.documents, key=lambda d: d.doc_id))
        if len({d.doc_id for d in docs}) != len(docs):
            raise ValueError("duplicate document ids in bundle")
        object.__setattr__(self, "documents", docs)
        object.__setattr__(self, "tagsets", dict(self.tagsets))
        object.__setattr__(self, "annotations", tuple(self.annotations))

    def document(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise UnknownDocument(doc_id)

    def has_document(self, doc_id: str) -> bool:
        return any(d.doc_id == doc_id for d in self.documents)

    def validate_one(self, record: AnnotationRecord) -> list[Diagnostic]:
        """Diagnostics for one record against this bundle's context."""
        diags: list[Diagnostic] = []
        t = record.target
        tagset = self.tagsets.get(record.layer)
        if tagset is None:
            return [Diagnostic(
                "NoTagsetForLayer", f"no {record.layer.value} tag set loaded", t)]
        if not self.has_document(t.doc_id):
            diags.append(Diagnostic(
                "UnknownDocument", f"document {t.doc_id!r} not loaded", t))
        else:
            doc = self.document(t.doc_id)
            if t.end >= doc.n_tokens:
                diags.append(Diagnostic(
                    "TargetOutOfRange",
                    f"token {t.end} beyond document of {doc.n_tokens} tokens", t))
            elif doc.sentence_index_of(t.start) != doc.sentence_index_of(t.end):
                # spans may nest but never cross a sentence boundary
                diags.append(Diagnostic(
                    "SpanCrossesSentence", "span crosses a sentence boundary", t))
        diags.extend(validate_record(record, tagset, self.scale))
        return diags

    def validate_indexed(self) -> list[tuple[int, Diagnostic]]:
        """(record position, diagnostic) pairs for the whole bundle."""
        return [
            (i, diag)
            for i, record in enumerate(self.annotations)
            for diag in self.validate_one(record)
        ]

    def validate(self) -> list[Diagnostic]:
        return [diag for _, diag in self.validate_indexed()]


@dataclass
class LoadedCorpus:
    """A bundle plus parse provenance for CLI diagnostics."""

    bundle: CorpusBundle
    # (file path, line) per annotation, aligned with bundle.annotations
    record_sources: list[tuple[str, int]] = field(default_factory=list)


def _documents_dir(corpus_dir: Path) -> Path:
    return corpus_dir / "documents"


def _tagsets_dir(corpus_dir: Path) -> Path:
    return corpus_dir / "tagsets"


def _annotations_dir(corpus_dir: Path) -> Path:
    return corpus_dir / "annotations"


def default_scale_path(corpus_dir: Path) -> Path:
    return corpus_dir / "scale.tsv"


def annotation_log_path(corpus_dir: Path) -> Path:
    return _annotations_dir(corpus_dir) / "records.tsv"


def corpus_lock(corpus_dir: Path) -> FileLock:
    """Single-writer lock for a corpus directory."""
    return FileLock(str(corpus_dir / ".lock"))


def load_corpus(
    corpus_dir: str | Path,
    scale_path: str | Path | None = None,
    register_unknown: bool = False,
    strict: bool = False,
) -> LoadedCorpus:
    """Load a corpus directory into a bundle (whole-file, order-independent).

    ``register_unknown`` grows open-world tag sets with any annotation tag
    they are missing (explicit import flag); closed-world unknowns are
    never registered.
    """
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise ParseError(f"{corpus_dir} is not a directory")

    documents: list[Document] = []
    docs_dir = _documents_dir(corpus_dir)
    if docs_dir.is_dir():
        for path in sorted(docs_dir.glob("*.tsv")):
            try:
                doc = parse_document(path.read_text("utf-8"), default_doc_id=path.stem)
            except ParseError as exc:
                raise ParseError(f"{path}: {exc}", exc.line) from exc
            documents.append(doc)

    tagsets: dict[Layer, TagSet] = {}
    ts_dir = _tagsets_dir(corpus_dir)
    if ts_dir.is_dir():
        for path in sorted(ts_dir.glob("*.tsv")):
            tagset = parse_tagset(path.read_text("utf-8"))
            if tagset.layer in tagsets:
                raise ParseError(f"{path}: duplicate tag set for layer "
                                 f"{tagset.layer.value}")
            tagsets[tagset.layer] = tagset

    scale_file = Path(scale_path) if scale_path else default_scale_path(corpus_dir)
    scale = (
        parse_scale(scale_file.read_text("utf-8"))
        if scale_file.is_file()
        else OrdinalScale.default()
    )

    doc_map = {d.doc_id: d for d in documents}
    annotations: list[AnnotationRecord] = []
    sources: list[tuple[str, int]] = []
    ann_dir = _annotations_dir(corpus_dir)
    if ann_dir.is_dir():
        for path in sorted(ann_dir.glob("*.tsv")):
            entries, _ = parse_annotation_log(path.read_text("utf-8"))
            for entry in entries:
                record = entry.record
                if register_unknown:
                    tagset = tagsets.get(record.layer)
                    if tagset is not None and tagset.world is World.OPEN:
                        for tag in record.tags():
                            if tag not in tagset:
                                tagset = register_tag(tagset, tag)
                        tagsets[record.layer] = tagset
                if strict:
                    check_annotation_context(record, doc_map, tagsets, entry.line)
                annotations.append(record)
                sources.append((str(path), entry.line))

    bundle = CorpusBundle(
        documents=tuple(documents),
        tagsets=tagsets,
        scale=scale,
        annotations=tuple(annotations),
    )
    return LoadedCorpus(bundle=bundle, record_sources=sources)


def save_corpus(bundle: CorpusBundle, corpus_dir: str | Path) -> None:
    """Write a bundle as a fresh corpus directory (canonical files)."""
    corpus_dir = Path(corpus_dir)
    corpus_dir.mkdir(parents=True, exist_ok=True)
    with corpus_lock(corpus_dir):
        docs_dir = _documents_dir(corpus_dir)
        docs_dir.mkdir(exist_ok=True)
        for doc in bundle.documents:
            if not doc.doc_id:
                raise ValueError("cannot store a document without an id")
            (docs_dir / f"{doc.doc_id}.tsv").write_text(
                serialize_document(doc), "utf-8")
        ts_dir = _tagsets_dir(corpus_dir)
        ts_dir.mkdir(exist_ok=True)
        for tagset in bundle.tagsets.values():
            (ts_dir / f"{tagset.layer.value}.tsv").write_text(
                serialize_tagset(tagset), "utf-8")
        default_scale_path(corpus_dir).write_text(
            serialize_scale(bundle.scale), "utf-8")
        ann_dir = _annotations_dir(corpus_dir)
        ann_dir.mkdir(exist_ok=True)
        annotation_log_path(corpus_dir).write_text(
            serialize_annotations(bundle.annotations), "utf-8")


def append_annotation(corpus_dir: str | Path, record: AnnotationRecord) -> None:
    """Append one record row to the corpus annotation log (durable write)."""
    corpus_dir = Path(corpus_dir)
    path = annotation_log_path(corpus_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    with corpus_lock(corpus_dir):
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(format_annotation_row(record) + "\n")
            fh.flush()


def append_tombstone(corpus_dir: str | Path, record_id: int) -> None:
    corpus_dir = Path(corpus_dir)
    path = annotation_log_path(corpus_dir)
    with corpus_lock(corpus_dir):
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(f"{_TOMBSTONE_PREFIX}{record_id}\n")
            fh.flush()


def save_tagset(tagset: TagSet, corpus_dir: str | Path) -> None:
    corpus_dir = Path(corpus_dir)
    ts_dir = _tagsets_dir(corpus_dir)
    ts_dir.mkdir(parents=True, exist_ok=True)
    with corpus_lock(corpus_dir):
        (ts_dir / f"{tagset.layer.value}.tsv").write_text(
            serialize_tagset(tagset), "utf-8")
