"""HTTP/JSON service for interactive annotation.

Serves documents, tag sets, the plausibility scale, annotation CRUD with
optimistic per-document revisions, machine suggestions and the review
queue.  The store is append-only: every accepted write goes straight to
the corpus annotation log (tombstones included), so a restarted service
reloads an identical bundle.

JSON field names mirror the annotation-file columns (doc, layer, start,
end, annotator, gt_mode, style, entries, source).
"""

from __future__ import annotations

import datetime
import threading
from pathlib import Path
from typing import Any

from fastapi import FastAPI
from fastapi.requests import Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .aggregate import corpus_conflict_report
from .annotations import (
    AnnotationEntry,
    AnnotationRecord,
    Diagnostic,
    Document,
    GtMode,
    Layer,
    Style,
    TagSet,
    Target,
    UncertaintySource,
    classify_case,
    register_tag,
)
from .corpus_io import (
    CorpusBundle,
    append_annotation,
    append_tombstone,
    annotation_log_path,
    load_corpus,
    parse_annotation_log,
    save_tagset,
)
from .errors import (
    ClosedWorldViolation,
    DuplicateTag,
    EmptyInput,
    InvalidRecord,
    NoModelLoaded,
    RevisionConflict,
    SofttagError,
    UnknownDocument,
    ValidationFailed,
)
from .tagger import TaggedOutput, TaggerModel, load_model, review_queue, tag


class CorpusStore:
    """Thread-safe store over a corpus directory.

    Reads work on an immutable bundle snapshot; writes serialize through
    one lock, append to the on-disk log first and then swap the snapshot,
    so concurrent readers see either the pre- or the post-state.
    """

    def __init__(
        self,
        corpus_dir: str | Path,
        scale_path: str | Path | None = None,
        model: TaggerModel | None = None,
        register_unknown: bool = False,
    ) -> None:
        self.corpus_dir = Path(corpus_dir)
        self._write_lock = threading.Lock()
        self.model = model
        self._suggestion_cache: dict[str, TaggedOutput] = {}

        loaded = load_corpus(self.corpus_dir, scale_path=scale_path,
                             register_unknown=register_unknown)
        base = loaded.bundle
        log_file = annotation_log_path(self.corpus_dir)
        entries, count = (
            parse_annotation_log(log_file.read_text("utf-8"))
            if log_file.is_file()
            else ([], 0)
        )
        self._entries = {e.record_id: e.record for e in entries}
        self._next_id = count + 1
        self._bundle = CorpusBundle(
            documents=base.documents,
            tagsets=base.tagsets,
            scale=base.scale,
            annotations=tuple(e.record for e in entries),
        )
        self.revisions = {doc.doc_id: 0 for doc in base.documents}

    # -- reads --------------------------------------------------------------

    @property
    def bundle(self) -> CorpusBundle:
        return self._bundle

    def document(self, doc_id: str) -> Document:
        return self._bundle.document(doc_id)

    def annotations_for(self, doc_id: str) -> list[tuple[int, AnnotationRecord]]:
        self._bundle.document(doc_id)  # raises UnknownDocument
        return [
            (record_id, record)
            for record_id, record in sorted(self._entries.items())
            if record.target.doc_id == doc_id
        ]

    # -- writes -------------------------------------------------------------

    def apply_annotation(
        self, record: AnnotationRecord, expected_revision: int
    ) -> tuple[int, int]:
        """Validate, persist and index a record; returns (id, revision)."""
        with self._write_lock:
            bundle = self._bundle
            doc_id = record.target.doc_id
            if doc_id not in self.revisions:
                raise UnknownDocument(doc_id)
            current = self.revisions[doc_id]
            if expected_revision != current:
                raise RevisionConflict(expected_revision, current)
            diagnostics = bundle.validate_one(record)
            if diagnostics:
                raise ValidationFailed(diagnostics)
            stamped = AnnotationRecord(
                target=record.target,
                layer=record.layer,
                annotator=record.annotator,
                style=record.style,
                entries=record.entries,
                gt_mode=record.gt_mode,
                uncertainty_source=record.uncertainty_source,
                timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
            )
            append_annotation(self.corpus_dir, stamped)  # durable first
            record_id = self._next_id
            self._next_id += 1
            self._entries[record_id] = stamped
            self._bundle = CorpusBundle(
                documents=bundle.documents,
                tagsets=bundle.tagsets,
                scale=bundle.scale,
                annotations=bundle.annotations + (stamped,),
            )
            self.revisions[doc_id] = current + 1
            return record_id, self.revisions[doc_id]

    def delete_annotation(self, record_id: int) -> int:
        """Tombstone a record; returns the document's new revision."""
        with self._write_lock:
            record = self._entries.get(record_id)
            if record is None:
                raise KeyError(record_id)
            append_tombstone(self.corpus_dir, record_id)
            del self._entries[record_id]
            bundle = self._bundle
            remaining = tuple(
                r for r in bundle.annotations if r is not record
            )
            self._bundle = CorpusBundle(
                documents=bundle.documents,
                tagsets=bundle.tagsets,
                scale=bundle.scale,
                annotations=remaining,
            )
            doc_id = record.target.doc_id
            self.revisions[doc_id] = self.revisions.get(doc_id, 0) + 1
            return self.revisions[doc_id]

    def register(self, layer: Layer, tag_name: str, description: str) -> TagSet:
        with self._write_lock:
            bundle = self._bundle
            tagset = bundle.tagsets.get(layer)
            if tagset is None:
                raise ClosedWorldViolation(f"no {layer.value} tag set loaded")
            grown = register_tag(tagset, tag_name, description,
                                 date=datetime.date.today().isoformat())
            save_tagset(grown, self.corpus_dir)
            tagsets = dict(bundle.tagsets)
            tagsets[layer] = grown
            self._bundle = CorpusBundle(
                documents=bundle.documents,
                tagsets=tagsets,
                scale=bundle.scale,
                annotations=bundle.annotations,
            )
            return grown

    # -- machine annotator --------------------------------------------------

    def load_model_file(self, path: str | Path) -> None:
        self.model = load_model(path)
        self._suggestion_cache.clear()

    def _tagged(self, doc_id: str) -> TaggedOutput:
        if self.model is None:
            raise NoModelLoaded("no tagger model loaded")
        cached = self._suggestion_cache.get(doc_id)
        if cached is None:
            cached = tag(self.model, self.document(doc_id))
            self._suggestion_cache[doc_id] = cached
        return cached

    def suggest(self, doc_id: str, start: int, end: int) -> list[dict[str, Any]]:
        output = self._tagged(doc_id)
        bundle = self._bundle
        tagset = bundle.tagsets.get(Layer.POS)
        suggestions = []
        for token in output.tokens:
            if not start <= token.index <= end:
                continue
            preview = None
            if tagset is not None:
                record = AnnotationRecord(
                    target=Target(doc_id=doc_id, start=token.index, end=token.index),
                    layer=Layer.POS,
                    annotator="machine",
                    style=Style.DIST,
                    entries=tuple(
                        AnnotationEntry(t, degree=p)
                        for t, p in token.posterior.items()
                    ),
                    gt_mode=GtMode.UNKNOWN,
                )
                try:
                    preview = classify_case(record, tagset, bundle.scale)
                except InvalidRecord:
                    preview = None
            suggestions.append({
                "index": token.index,
                "form": token.form,
                "top": [
                    {"tag": t, "degree": p} for t, p in token.top(3)
                ],
                "entropy": token.entropy,
                "outside_frame": token.outside_frame,
                "case_preview": preview,
            })
        return suggestions

    def review(self, k: int):
        if self.model is None:
            raise NoModelLoaded("no tagger model loaded")
        outputs = [self._tagged(doc.doc_id) for doc in self._bundle.documents
                   if doc.n_tokens > 0]
        if not outputs:
            raise EmptyInput("corpus has no tokens to review")
        return review_queue(outputs, k)


# ---------------------------------------------------------------------------
# JSON codecs


def record_to_json(record: AnnotationRecord, record_id: int | None = None) -> dict:
    entries = []
    for e in record.entries:
        cell: dict[str, Any] = {"tag": e.tag}
        if e.degree is not None:
            cell["degree"] = e.degree
        if e.rank is not None:
            cell["rank"] = e.rank
        entries.append(cell)
    data: dict[str, Any] = {
        "doc": record.target.doc_id,
        "layer": record.layer.value,
        "start": record.target.start,
        "end": record.target.end,
        "annotator": record.annotator,
        "gt_mode": record.gt_mode.value,
        "style": record.style.value,
        "entries": entries,
    }
    if record.uncertainty_source is not None:
        data["source"] = record.uncertainty_source.value
    if record.timestamp is not None:
        data["timestamp"] = record.timestamp
    if record_id is not None:
        data["record_id"] = record_id
    return data


def _malformed(message: str, doc: str = "unknown") -> ValidationFailed:
    target = Target(doc_id=doc or "unknown", start=0, end=0)
    return ValidationFailed([Diagnostic("MalformedRecord", message, target)])


def record_from_json(data: Any) -> AnnotationRecord:
    if not isinstance(data, dict):
        raise _malformed("record must be a JSON object")
    doc = str(data.get("doc", ""))
    try:
        target = Target(doc_id=doc, start=int(data["start"]), end=int(data["end"]))
        layer = Layer(data["layer"])
        style = Style(data["style"])
        gt_mode = GtMode(data.get("gt_mode", "unknown"))
        source = (
            UncertaintySource(data["source"]) if data.get("source") else None
        )
        entries = []
        for cell in data.get("entries", []):
            degree = cell.get("degree")
            rank = cell.get("rank")
            entries.append(AnnotationEntry(
                tag=str(cell["tag"]),
                degree=float(degree) if degree is not None else None,
                rank=int(rank) if rank is not None else None,
            ))
        return AnnotationRecord(
            target=target,
            layer=layer,
            annotator=str(data.get("annotator", "")),
            style=style,
            entries=tuple(entries),
            gt_mode=gt_mode,
            uncertainty_source=source,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise _malformed(f"bad record field: {exc}", doc) from None


def diagnostics_json(diagnostics) -> list[dict]:
    return [
        {
            "code": d.code,
            "message": d.message,
            "doc": d.target.doc_id,
            "start": d.target.start,
            "end": d.target.end,
        }
        for d in diagnostics
    ]


# ---------------------------------------------------------------------------
# application


def create_app(store: CorpusStore, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="softtag annotation service")

    @app.exception_handler(SofttagError)
    def softtag_error(_request: Request, exc: SofttagError):
        if isinstance(exc, ValidationFailed):
            return JSONResponse(
                {"error": "ValidationFailed",
                 "diagnostics": diagnostics_json(exc.diagnostics)},
                status_code=422,
            )
        if isinstance(exc, RevisionConflict):
            return JSONResponse(
                {"error": "RevisionConflict",
                 "expected": exc.expected, "current": exc.current},
                status_code=409,
            )
        status = {
            UnknownDocument: 404,
            NoModelLoaded: 409,
            ClosedWorldViolation: 409,
            DuplicateTag: 409,
            EmptyInput: 409,
        }.get(type(exc), 400)
        return JSONResponse(
            {"error": type(exc).__name__, "detail": str(exc)}, status_code=status)

    @app.get("/api/documents")
    def list_documents():
        return [
            {
                "doc": doc.doc_id,
                "date": doc.date,
                "sentences": len(doc.sentences),
                "tokens": doc.n_tokens,
                "revision": store.revisions.get(doc.doc_id, 0),
            }
            for doc in store.bundle.documents
        ]

    @app.get("/api/documents/{doc_id}")
    def get_document(doc_id: str):
        doc = store.document(doc_id)
        return {
            "doc": doc.doc_id,
            "date": doc.date,
            "revision": store.revisions.get(doc.doc_id, 0),
            "sentences": [
                [{"index": t.index, "form": t.form} for t in sentence]
                for sentence in doc.sentences
            ],
        }

    @app.get("/api/tagsets")
    def get_tagsets():
        result = {}
        for layer, tagset in sorted(
            store.bundle.tagsets.items(), key=lambda kv: kv[0].value
        ):
            result[layer.value] = {
                "layer": layer.value,
                "world": tagset.world.value,
                "entries": [
                    {
                        "tag": e.tag,
                        "description": e.description,
                        "version": e.version,
                        **({"date": e.date} if e.date else {}),
                    }
                    for e in tagset.entries
                ],
            }
        return result

    @app.get("/api/scale")
    def get_scale():
        scale = store.bundle.scale
        return {
            "levels": [
                {"rank": rank, "label": label, "degree": scale.numeric_map[rank]}
                for rank, label in scale.levels
            ]
        }

    @app.get("/api/annotations")
    def get_annotations(doc: str):
        records = store.annotations_for(doc)
        return {
            "doc": doc,
            "revision": store.revisions.get(doc, 0),
            "records": [
                record_to_json(record, record_id) for record_id, record in records
            ],
        }

    @app.post("/api/annotations", status_code=201)
    async def post_annotation(request: Request):
        body = await request.json()
        if not isinstance(body, dict) or "record" not in body:
            raise _malformed("body must carry a 'record' object")
        record = record_from_json(body["record"])
        try:
            expected = int(body.get("expected_revision", -1))
        except (TypeError, ValueError):
            raise _malformed("expected_revision must be an integer") from None
        record_id, revision = store.apply_annotation(record, expected)
        return {"record_id": record_id, "revision": revision}

    @app.delete("/api/annotations/{record_id}")
    def delete_annotation(record_id: int):
        try:
            revision = store.delete_annotation(record_id)
        except KeyError:
            return JSONResponse(
                {"error": "UnknownRecord", "record_id": record_id}, status_code=404)
        return {"revision": revision}

    @app.post("/api/tagsets/{layer}/tags")
    async def post_tag(layer: str, request: Request):
        try:
            layer_value = Layer(layer)
        except ValueError:
            return JSONResponse(
                {"error": "UnknownLayer", "layer": layer}, status_code=404)
        body = await request.json()
        if not isinstance(body, dict) or not body.get("tag"):
            raise _malformed("body must carry a non-empty 'tag'")
        try:
            grown = store.register(
                layer_value, str(body["tag"]), str(body.get("description", "")))
        except ValueError as exc:
            raise _malformed(str(exc)) from None
        return {
            "layer": layer_value.value,
            "world": grown.world.value,
            "entries": [
                {"tag": e.tag, "description": e.description, "version": e.version}
                for e in grown.entries
            ],
        }

    @app.get("/api/suggest")
    def get_suggest(doc: str, start: int = 0, end: int | None = None):
        document = store.document(doc)
        if end is None:
            end = document.n_tokens - 1
        return {"doc": doc, "suggestions": store.suggest(doc, start, end)}

    @app.get("/api/review")
    def get_review(k: int = 10):
        items = store.review(k)
        return {
            "items": [
                {
                    "doc": item.target.doc_id,
                    "start": item.target.start,
                    "end": item.target.end,
                    "entropy": item.entropy,
                    "top2": [
                        {"tag": t, "degree": p} for t, p in item.top2
                    ],
                }
                for item in items
            ]
        }

    @app.get("/api/conflicts")
    def get_conflicts():
        report = corpus_conflict_report(store.bundle)
        return {
            "rows": [
                {
                    "doc": row.target.doc_id,
                    "start": row.target.start,
                    "end": row.target.end,
                    "layer": row.layer.value,
                    "conflict": row.conflict,
                    "cases": list(row.case_ids),
                    "annotators": list(row.annotators),
                }
                for row in report.rows
            ],
            "graded_by_date": [
                {"date": date, "count": count}
                for date, count in report.graded_by_date
            ],
        }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
