import itertools

import pytest

from softtag.aggregate import (
    GtConsensus,
    aggregate_target,
    corpus_conflict_report,
)
from softtag.annotations import (
    AnnotationEntry,
    AnnotationRecord,
    Document,
    GtMode,
    Layer,
    Style,
    TagEntry,
    TagSet,
    Target,
    Token,
)
from softtag.corpus_io import CorpusBundle
from softtag.errors import EmptyInput, TargetMismatch
from softtag.uncertainty import CombineMode, Frame, OrdinalScale

FRAME = Frame(("A", "B", "C"))
SCALE = OrdinalScale.default()


def record(style, entries, *, gt=GtMode.PRECISE, annotator="ann1",
           doc="d1", start=0):
    return AnnotationRecord(
        target=Target(doc_id=doc, start=start, end=start),
        layer=Layer.POS,
        annotator=annotator,
        style=style,
        entries=tuple(entries),
        gt_mode=gt,
    )


class TestAggregateTarget:
    def test_identical_records_are_a_no_op(self):
        r = record(Style.ORDINAL, [AnnotationEntry("A", rank=3)])
        single = aggregate_target([r], FRAME, SCALE)
        double = aggregate_target([r, r], FRAME, SCALE)
        assert double.combined == single.combined
        assert double.conflict == single.conflict

    def test_disjoint_precise_annotations_conflict_totally(self):
        r1 = record(Style.PRECISE, [AnnotationEntry("A")], annotator="ann1")
        r2 = record(Style.PRECISE, [AnnotationEntry("B")], annotator="ann2")
        result = aggregate_target([r1, r2], FRAME, SCALE)
        assert result.combined.degrees == {}
        assert result.conflict == 1.0

    def test_ordinal_against_set_fold(self):
        # min({A:2/3, B:1/3}, {A:1, B:0}) = {A:2/3}; conflict 1 - 2/3 = 1/3
        ordinal = record(Style.ORDINAL, [AnnotationEntry("A", rank=3),
                                         AnnotationEntry("B", rank=2)])
        setval = record(Style.SET, [AnnotationEntry("A")], annotator="ann2")
        result = aggregate_target([ordinal, setval], FRAME, SCALE)
        assert result.combined.degree("A") == pytest.approx(2 / 3, abs=1e-9)
        assert result.combined.degree("B") == 0.0
        assert result.conflict == pytest.approx(1 / 3, abs=1e-9)

    def test_permutation_invariance(self):
        rs = [
            record(Style.SET, [AnnotationEntry("A"), AnnotationEntry("B")]),
            record(Style.ORDINAL, [AnnotationEntry("A", rank=3)], annotator="ann2"),
            record(Style.DIST, [AnnotationEntry("A", degree=0.9),
                                AnnotationEntry("C", degree=0.4)], annotator="ann3"),
        ]
        results = [
            aggregate_target(list(perm), FRAME, SCALE)
            for perm in itertools.permutations(rs)
        ]
        assert all(r == results[0] for r in results)

    def test_conflict_grows_monotonically(self):
        rs = [
            record(Style.SET, [AnnotationEntry("A"), AnnotationEntry("B")]),
            record(Style.ORDINAL, [AnnotationEntry("A", rank=2),
                                   AnnotationEntry("B", rank=3)], annotator="ann2"),
            record(Style.PRECISE, [AnnotationEntry("B")], annotator="ann3"),
        ]
        conflicts = [
            aggregate_target(rs[: i + 1], FRAME, SCALE).conflict
            for i in range(len(rs))
        ]
        assert conflicts == sorted(conflicts)

    def test_disjunctive_mode_keeps_conjunctive_conflict(self):
        r1 = record(Style.PRECISE, [AnnotationEntry("A")])
        r2 = record(Style.PRECISE, [AnnotationEntry("B")], annotator="ann2")
        result = aggregate_target([r1, r2], FRAME, SCALE,
                                  mode=CombineMode.DISJUNCTIVE)
        assert result.combined.degree("A") == result.combined.degree("B") == 1.0
        assert result.conflict == 1.0

    def test_gt_mode_consensus(self):
        precise = record(Style.PRECISE, [AnnotationEntry("A")])
        unknown = record(Style.PRECISE, [AnnotationEntry("A")],
                         gt=GtMode.UNKNOWN, annotator="ann2")
        graded = record(Style.SET, [AnnotationEntry("A"), AnnotationEntry("B")],
                        gt=GtMode.GRADED, annotator="ann3")
        assert aggregate_target([precise, unknown], FRAME, SCALE
                                ).gt_mode_consensus is GtConsensus.PRECISE
        assert aggregate_target([graded, graded], FRAME, SCALE
                                ).gt_mode_consensus is GtConsensus.GRADED
        assert aggregate_target([precise, graded], FRAME, SCALE
                                ).gt_mode_consensus is GtConsensus.MIXED

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            aggregate_target([], FRAME, SCALE)

    def test_target_mismatch(self):
        r1 = record(Style.PRECISE, [AnnotationEntry("A")], start=0)
        r2 = record(Style.PRECISE, [AnnotationEntry("A")], start=1)
        with pytest.raises(TargetMismatch):
            aggregate_target([r1, r2], FRAME, SCALE)


def bundle_with(records, dates=("1350-01-01", "1500-01-01")):
    docs = tuple(
        Document(
            doc_id=f"d{i + 1}",
            sentences=((Token(0, "w0"), Token(1, "w1"), Token(2, "w2")),),
            date=date,
        )
        for i, date in enumerate(dates)
    )
    tagset = TagSet(
        layer=Layer.POS,
        world=FRAME.world,
        entries=tuple(TagEntry(t, version=i + 1) for i, t in enumerate(FRAME)),
    )
    return CorpusBundle(
        documents=docs,
        tagsets={Layer.POS: tagset},
        scale=SCALE,
        annotations=tuple(records),
    )


class TestConflictReport:
    def test_no_multiply_annotated_targets(self):
        bundle = bundle_with([record(Style.PRECISE, [AnnotationEntry("A")])])
        report = corpus_conflict_report(bundle)
        assert report.rows == ()

    def test_single_conflicting_target(self):
        ordinal = record(Style.ORDINAL, [AnnotationEntry("A", rank=3),
                                         AnnotationEntry("B", rank=2)])
        setval = record(Style.SET, [AnnotationEntry("A")], annotator="ann2")
        report = corpus_conflict_report(bundle_with([ordinal, setval]))
        assert len(report.rows) == 1
        row = report.rows[0]
        assert row.conflict == pytest.approx(1 / 3, abs=1e-9)
        assert row.annotators == ("ann1", "ann2")
        assert row.case_ids == (2, 3)

    def test_rows_sorted_by_conflict_then_document_order(self):
        mild_a = record(Style.ORDINAL, [AnnotationEntry("A", rank=3),
                                        AnnotationEntry("B", rank=2)], doc="d2")
        mild_b = record(Style.SET, [AnnotationEntry("A")], doc="d2",
                        annotator="ann2")
        hard_a = record(Style.PRECISE, [AnnotationEntry("A")], doc="d1", start=1)
        hard_b = record(Style.PRECISE, [AnnotationEntry("B")], doc="d1", start=1,
                        annotator="ann2")
        report = corpus_conflict_report(
            bundle_with([mild_a, mild_b, hard_a, hard_b]))
        assert [row.conflict for row in report.rows] == pytest.approx(
            [1.0, 1 / 3], abs=1e-9)
        assert report.rows[0].target.doc_id == "d1"

    def test_graded_date_histogram(self):
        graded = [
            record(Style.SET, [AnnotationEntry("A"), AnnotationEntry("B")],
                   gt=GtMode.GRADED, doc="d1", start=0),
        ] + [
            record(Style.SET, [AnnotationEntry("A"), AnnotationEntry("B")],
                   gt=GtMode.GRADED, doc="d2", start=i)
            for i in range(3)
        ]
        report = corpus_conflict_report(bundle_with(graded))
        assert report.graded_by_date == (("1350-01-01", 1), ("1500-01-01", 3))
