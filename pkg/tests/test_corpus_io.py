import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

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
    UncertaintySource,
)
from softtag.corpus_io import (
    CorpusBundle,
    annotation_sort_key,
    load_corpus,
    parse_annotation_log,
    parse_annotation_row,
    parse_annotations,
    parse_document,
    parse_scale,
    parse_tagset,
    save_corpus,
    serialize_annotations,
    serialize_document,
    serialize_scale,
    serialize_tagset,
)
from softtag.errors import (
    DuplicateTag,
    NonContiguousIndex,
    ParseError,
    UnknownDocument,
)
from softtag.uncertainty import OrdinalScale, World


class TestDocumentFormat:
    def test_single_sentence(self):
        doc = parse_document("0\tDat\n1\tis\n2\tvredebrake\n\n")
        assert len(doc.sentences) == 1
        assert [t.form for t in doc.tokens()] == ["Dat", "is", "vredebrake"]

    def test_empty_input(self):
        doc = parse_document("")
        assert doc.sentences == ()

    def test_non_contiguous_index(self):
        with pytest.raises(NonContiguousIndex):
            parse_document("0\ta\n2\tb\n")

    def test_headers(self):
        doc = parse_document("#doc=goslar\n#date=1350-01-01\n0\tDat\n")
        assert doc.doc_id == "goslar"
        assert doc.date == "1350-01-01"

    def test_bad_date(self):
        with pytest.raises(ParseError):
            parse_document("#date=long-ago\n0\ta\n")

    def test_sentence_break_and_roundtrip(self):
        text = "#doc=d1\n0\ta\n1\tb\n\n2\tc\n"
        doc = parse_document(text)
        assert len(doc.sentences) == 2
        assert serialize_document(doc) == text

    def test_trailing_newline_normalized(self):
        doc = parse_document("0\ta\n\n\n")
        assert serialize_document(doc) == "0\ta\n"

    def test_form_with_pipe_rejected(self):
        with pytest.raises(ParseError):
            parse_document("0\ta|b\n")


class TestTagsetFormat:
    TEXT = (
        "#layer=Construction\n#world=open\n"
        "subjunction-chunk\tfunction word group acting as subjunction\n"
        "prep-phrase\tprepositional construction\n"
    )

    def test_parse_versions_follow_row_order(self):
        ts = parse_tagset(self.TEXT)
        assert ts.world is World.OPEN
        assert ts.layer is Layer.CONSTRUCTION
        assert [e.version for e in ts.entries] == [1, 2]

    def test_roundtrip(self):
        ts = parse_tagset(self.TEXT)
        assert serialize_tagset(ts) == self.TEXT
        assert parse_tagset(serialize_tagset(ts)) == ts

    def test_duplicate_tag_row(self):
        with pytest.raises(DuplicateTag):
            parse_tagset("#layer=POS\n#world=closed\nNA\tx\nNA\ty\n")

    def test_missing_world_header(self):
        with pytest.raises(ParseError):
            parse_tagset("#layer=POS\nNA\tx\n")

    def test_date_column_roundtrips(self):
        text = "#layer=POS\n#world=closed\nNA\tnoun\t2024-05-01\n"
        ts = parse_tagset(text)
        assert ts.entries[0].date == "2024-05-01"
        assert serialize_tagset(ts) == text


class TestScaleFormat:
    def test_default_scale_roundtrip(self):
        scale = OrdinalScale.default()
        text = serialize_scale(scale)
        assert parse_scale(text) == scale

    def test_bad_degree(self):
        with pytest.raises(ParseError):
            parse_scale("1\tno\tlow\n")

    def test_endpoints_enforced(self):
        with pytest.raises(ParseError):
            parse_scale("1\tno\t0.2\n2\tyes\t1.0\n")


class TestAnnotationFormat:
    def test_ordinal_row(self):
        record, _ = parse_annotation_row(
            "d1\tPOS\t1\t1\tann1\tprecise\tordinal\tVKFIN/3|VAFIN/2"
        )
        assert record.style is Style.ORDINAL
        assert record.entries == (
            AnnotationEntry("VKFIN", rank=3),
            AnnotationEntry("VAFIN", rank=2),
        )

    def test_graded_set_row(self):
        record, _ = parse_annotation_row(
            "d1\tPOS\t8\t8\tann1\tgraded\tset\tNA|VVINF"
        )
        assert record.style is Style.SET
        assert record.gt_mode is GtMode.GRADED
        assert record.tags() == ("NA", "VVINF")

    def test_dist_row(self):
        record, _ = parse_annotation_row(
            "d1\tPOS\t1\t1\tann1\tprecise\tdist\tNA:0.7|VVINF:0.3"
        )
        assert record.style is Style.DIST
        assert record.entries[0].degree == 0.7

    def test_source_column(self):
        record, _ = parse_annotation_row(
            "d1\tPOS\t1\t1\tann1\tprecise\tset\tNA|VVINF\tepistemic"
        )
        assert record.uncertainty_source is UncertaintySource.EPISTEMIC

    def test_extension_columns_tolerated(self):
        record, ext = parse_annotation_row(
            "d1\tPOS\t1\t1\tmachine\tunknown\tdist\tNA:1.0\t#entropy=0.25"
        )
        assert ext == ["#entropy=0.25"]
        assert record.entries[0].degree == 1.0

    def test_empty_entries_column(self):
        record, _ = parse_annotation_row(
            "d1\tConstruction\t1\t2\tann1\tunknown\tset\t"
        )
        assert record.entries == ()

    def test_bad_style(self):
        with pytest.raises(ParseError):
            parse_annotation_row("d1\tPOS\t1\t1\tann1\tprecise\tfancy\tNA")

    def test_tombstone_drops_record(self):
        text = (
            "d1\tPOS\t1\t1\tann1\tprecise\tprecise\tNA\n"
            "d1\tPOS\t2\t2\tann1\tprecise\tprecise\tVKFIN\n"
            "#tombstone=1\n"
        )
        alive, count = parse_annotation_log(text)
        assert count == 2
        assert [e.record_id for e in alive] == [2]

    def test_tombstone_for_unknown_record(self):
        with pytest.raises(ParseError):
            parse_annotation_log("#tombstone=3\n")

    def test_strict_mode_rejects_unknown_document(self):
        with pytest.raises(UnknownDocument):
            parse_annotations(
                "dx\tPOS\t0\t0\tann1\tprecise\tprecise\tNA\n",
                documents={},
                strict=True,
            )

    def test_whole_file_mode_tolerates_unknown_document(self):
        records = parse_annotations(
            "dx\tPOS\t0\t0\tann1\tprecise\tprecise\tNA\n",
            documents={},
            strict=False,
        )
        assert len(records) == 1


# ---------------------------------------------------------------------------
# randomized round-trips

TAG_ALPHABET = st.characters(
    blacklist_characters="\t\n|", blacklist_categories=("Cs", "Cc")
)
DOC_IDS = st.from_regex(r"[a-z][a-z0-9_-]{0,7}", fullmatch=True)


@st.composite
def documents(draw):
    doc_id = draw(DOC_IDS)
    n_tokens = draw(st.integers(min_value=0, max_value=50))
    forms = [
        draw(st.text(alphabet=TAG_ALPHABET, min_size=1, max_size=6))
        for _ in range(n_tokens)
    ]
    sentences = []
    current = []
    for i, form in enumerate(forms):
        current.append(Token(index=i, form=form))
        if draw(st.booleans()) or i == n_tokens - 1:
            sentences.append(tuple(current))
            current = []
    date = draw(st.one_of(st.none(), st.dates().map(lambda d: d.isoformat())))
    return Document(doc_id=doc_id, sentences=tuple(sentences), date=date)


@given(documents())
def test_document_roundtrip(doc):
    assert parse_document(serialize_document(doc), default_doc_id=doc.doc_id) == doc


@st.composite
def tagsets(draw, layer=Layer.POS):
    world = draw(st.sampled_from(list(World)))
    n = draw(st.integers(min_value=1, max_value=10))
    tags = draw(
        st.lists(
            st.text(alphabet=TAG_ALPHABET, min_size=1, max_size=8).filter(
                lambda t: not t.startswith("#")
            ),
            min_size=n, max_size=n, unique=True,
        )
    )
    entries = tuple(
        TagEntry(
            tag=tag,
            description=draw(st.text(
                alphabet=st.characters(blacklist_characters="\t\n",
                                       blacklist_categories=("Cs", "Cc")),
                max_size=12)),
            version=i + 1,
            date=draw(st.one_of(st.none(),
                                st.dates().map(lambda d: d.isoformat()))),
        )
        for i, tag in enumerate(tags)
    )
    return TagSet(layer=layer, world=world, entries=entries)


@given(tagsets())
def test_tagset_roundtrip(ts):
    assert parse_tagset(serialize_tagset(ts)) == ts


@st.composite
def scales(draw):
    n = draw(st.integers(min_value=2, max_value=6))
    inner = draw(
        st.lists(
            st.floats(min_value=1e-6, max_value=1 - 1e-6, allow_nan=False),
            min_size=n - 2, max_size=n - 2, unique=True,
        )
    )
    degrees = [0.0] + sorted(inner) + [1.0]
    levels = tuple(
        (i + 1, draw(st.text(
            alphabet=st.characters(blacklist_characters="\t\n",
                                   blacklist_categories=("Cs", "Cc")),
            min_size=1, max_size=10)))
        for i in range(n)
    )
    return OrdinalScale(
        levels=levels, numeric_map={i + 1: d for i, d in enumerate(degrees)}
    )


@given(scales())
def test_scale_roundtrip(scale):
    assert parse_scale(serialize_scale(scale)) == scale


@st.composite
def records_for(draw, doc: Document, tagset: TagSet, scale: OrdinalScale):
    if doc.n_tokens == 0:
        return None
    start = draw(st.integers(min_value=0, max_value=doc.n_tokens - 1))
    style = draw(st.sampled_from(list(Style)))
    tags = draw(
        st.lists(
            st.sampled_from([e.tag for e in tagset.entries]),
            min_size=1, max_size=min(3, len(tagset.entries)), unique=True,
        )
    )
    tags.sort()  # canonical rows keep entries sorted by tag
    if style is Style.DIST:
        entries = tuple(
            AnnotationEntry(t, degree=draw(
                st.floats(min_value=0.0, max_value=1.0, allow_nan=False)))
            for t in tags
        )
    elif style is Style.ORDINAL:
        entries = tuple(
            AnnotationEntry(t, rank=draw(st.sampled_from(scale.ranks)))
            for t in tags
        )
    else:
        entries = tuple(AnnotationEntry(t) for t in tags)
    return AnnotationRecord(
        target=Target(doc_id=doc.doc_id, start=start, end=start),
        layer=tagset.layer,
        annotator=draw(st.from_regex(r"[a-z]{1,6}", fullmatch=True)),
        style=style,
        entries=entries,
        gt_mode=draw(st.sampled_from(list(GtMode))),
        uncertainty_source=draw(
            st.one_of(st.none(), st.sampled_from(list(UncertaintySource)))),
    )


@st.composite
def bundles(draw):
    docs = draw(st.lists(documents(), min_size=1, max_size=3,
                         unique_by=lambda d: d.doc_id))
    tagset = draw(tagsets())
    scale = draw(scales())
    records = []
    for doc in docs:
        for _ in range(draw(st.integers(min_value=0, max_value=4))):
            record = draw(records_for(doc, tagset, scale))
            if record is not None:
                records.append(record)
    records.sort(key=annotation_sort_key)
    return CorpusBundle(
        documents=tuple(docs),
        tagsets={tagset.layer: tagset},
        scale=scale,
        annotations=tuple(records),
    )


@given(bundles())
@settings(max_examples=40, deadline=None)
def test_bundle_roundtrip_through_corpus_dir(tmp_path_factory, bundle):
    corpus_dir = tmp_path_factory.mktemp("corpus")
    save_corpus(bundle, corpus_dir)
    loaded = load_corpus(corpus_dir).bundle
    assert loaded == bundle
    # serialization is deterministic: a second save is byte-identical
    again = tmp_path_factory.mktemp("corpus2")
    save_corpus(bundle, again)
    for name in ("scale.tsv", "annotations/records.tsv"):
        assert (corpus_dir / name).read_bytes() == (again / name).read_bytes()


@given(st.lists(st.tuples(DOC_IDS, st.integers(0, 30)), min_size=0, max_size=8))
def test_annotation_serialization_is_sorted_and_stable(keys):
    records = [
        AnnotationRecord(
            target=Target(doc_id=doc_id, start=start, end=start),
            layer=Layer.POS,
            annotator="a",
            style=Style.PRECISE,
            entries=(AnnotationEntry("NA"),),
        )
        for doc_id, start in keys
    ]
    text = serialize_annotations(records)
    assert text == serialize_annotations(list(reversed(records)))
    parsed = parse_annotations(text)
    assert parsed == sorted(records, key=annotation_sort_key)
