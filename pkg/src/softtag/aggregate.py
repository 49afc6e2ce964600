"""Combining several annotators' records and reporting corpus conflict.

Aggregation never averages opinions away: records are bridged into
possibility distributions and folded pointwise (min by default), and the
remaining conflict degree is surfaced so disagreement stays visible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .annotations import (
    AnnotationRecord,
    GtMode,
    Layer,
    Target,
    classify_case,
    to_possibility,
)
from .corpus_io import CorpusBundle
from .errors import EmptyInput, InvalidRecord, TargetMismatch
from .uncertainty import (
    CombineMode,
    Frame,
    OrdinalScale,
    PossibilityDistribution,
    combine_possibility,
)


class GtConsensus(enum.Enum):
    PRECISE = "precise"
    GRADED = "graded"
    MIXED = "mixed"


@dataclass(frozen=True)
class AggregateResult:
    target: Target
    layer: Layer
    combined: PossibilityDistribution
    conflict: float
    contributing: tuple[str, ...]
    gt_mode_consensus: GtConsensus


def _effective_gt(record: AnnotationRecord) -> GtConsensus:
    # Unknown reads conservatively as precise, like classify_case does.
    if record.gt_mode is GtMode.GRADED:
        return GtConsensus.GRADED
    return GtConsensus.PRECISE


def aggregate_target(
    records: Sequence[AnnotationRecord],
    frame: Frame,
    scale: OrdinalScale | None = None,
    mode: CombineMode = CombineMode.CONJUNCTIVE,
) -> AggregateResult:
    """Fold all records on one target into a single distribution.

    The fold operators are idempotent, commutative and associative, so the
    result is independent of record order and of duplicated opinions.
    The conflict degree always comes from the conjunctive fold.
    """
    if not records:
        raise EmptyInput("no records to aggregate")
    head = records[0]
    for record in records[1:]:
        if record.target != head.target or record.layer != head.layer:
            raise TargetMismatch(
                f"{record.target} ({record.layer.value}) vs "
                f"{head.target} ({head.layer.value})"
            )

    dists = [to_possibility(r, frame, scale) for r in records]
    conjunctive = dists[0]
    for d in dists[1:]:
        conjunctive, _ = combine_possibility(conjunctive, d, CombineMode.CONJUNCTIVE)
    conflict = 1.0 - conjunctive.max_degree
    if mode is CombineMode.CONJUNCTIVE:
        combined = conjunctive
    else:
        combined = dists[0]
        for d in dists[1:]:
            combined, _ = combine_possibility(combined, d, CombineMode.DISJUNCTIVE)

    modes = {_effective_gt(r) for r in records}
    consensus = modes.pop() if len(modes) == 1 else GtConsensus.MIXED
    return AggregateResult(
        target=head.target,
        layer=head.layer,
        combined=combined,
        conflict=conflict,
        contributing=tuple(sorted({r.annotator for r in records})),
        gt_mode_consensus=consensus,
    )


@dataclass(frozen=True)
class ConflictRow:
    target: Target
    layer: Layer
    conflict: float
    case_ids: tuple[int, ...]
    annotators: tuple[str, ...]


@dataclass(frozen=True)
class ConflictReport:
    rows: tuple[ConflictRow, ...]
    # per-document-date counts of graded-ground-truth annotations
    graded_by_date: tuple[tuple[str, int], ...]


def corpus_conflict_report(bundle: CorpusBundle) -> ConflictReport:
    """One row per multiply-annotated target, highest conflict first.

    Also counts graded-ground-truth annotations per document date, which
    exposes diachronic drift of category overlap across the corpus.
    """
    groups: dict[tuple[str, int, int, Layer], list[AnnotationRecord]] = {}
    for record in bundle.annotations:
        key = (record.target.doc_id, record.target.start,
               record.target.end, record.layer)
        groups.setdefault(key, []).append(record)

    doc_order = {doc.doc_id: i for i, doc in enumerate(bundle.documents)}
    rows: list[ConflictRow] = []
    for key, records in groups.items():
        if len(records) < 2:
            continue
        layer = key[3]
        tagset = bundle.tagsets.get(layer)
        if tagset is None:
            continue
        result = aggregate_target(records, tagset.frame, bundle.scale)
        cases: set[int] = set()
        for record in records:
            try:
                cases.add(classify_case(record, tagset, bundle.scale))
            except InvalidRecord:
                pass  # invalid records still count as contributors
        rows.append(ConflictRow(
            target=result.target,
            layer=layer,
            conflict=result.conflict,
            case_ids=tuple(sorted(cases)),
            annotators=result.contributing,
        ))

    rows.sort(key=lambda r: (
        -r.conflict,
        doc_order.get(r.target.doc_id, len(doc_order)),
        r.target.start,
        r.target.end,
        r.layer.value,
    ))

    graded: dict[str, int] = {}
    dates = {doc.doc_id: doc.date for doc in bundle.documents}
    for record in bundle.annotations:
        if record.gt_mode is GtMode.GRADED:
            date = dates.get(record.target.doc_id)
            if date:
                graded[date] = graded.get(date, 0) + 1
    return ConflictReport(
        rows=tuple(rows),
        graded_by_date=tuple(sorted(graded.items())),
    )
