"""softtag: uncertainty-aware corpus annotation and weakly-supervised tagging."""

from .uncertainty import (
    TOL,
    CombineMode,
    Frame,
    FuzzyTagSet,
    IndiscernibilityPartition,
    OrdinalScale,
    PossibilityDistribution,
    ProbabilityDistribution,
    RoughTagSet,
    TagSubset,
    World,
    combine_possibility,
    from_ordinal,
    from_set_constraint,
    possibility_of_event,
    probability_of_event,
    rough_approximations,
)
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
    classify_case,
    register_tag,
    to_possibility,
    validate_record,
)
from .corpus_io import CorpusBundle, LoadedCorpus, load_corpus, save_corpus
from .aggregate import (
    AggregateResult,
    ConflictReport,
    GtConsensus,
    aggregate_target,
    corpus_conflict_report,
)
from .tagger import (
    EvalMetrics,
    ReviewItem,
    TaggedOutput,
    TaggerModel,
    TokenConstraint,
    TrainConfig,
    build_constraints,
    evaluate,
    load_model,
    review_queue,
    save_model,
    tag,
    train,
)
from . import errors

__version__ = "0.1.0"
