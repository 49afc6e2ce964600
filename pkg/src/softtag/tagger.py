"""Weakly-supervised first-order HMM tagger over a POS frame.

Training is Baum-Welch with soft evidence: every token carries a per-tag
constraint degree (1 everywhere when unannotated), and the E-step simply
multiplies each state's emission score by that degree.  One-hot
constraints therefore degenerate to supervised counting, all-ones
constraints to classical unsupervised EM.

The tagger communicates its own uncertainty: posteriors and per-token
entropy come out of forward-backward, and `review_queue` ranks tokens for
human revision by that entropy.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .aggregate import aggregate_target
from .annotations import (
    AnnotationEntry,
    AnnotationRecord,
    Document,
    GtMode,
    Layer,
    Style,
    Target,
    to_possibility,
)
from .corpus_io import CorpusBundle, format_annotation_row, format_float, parse_annotation_row
from .errors import AlignmentError, EmptyDocument, NoData, ParseError
from .uncertainty import Frame, OrdinalScale, World

log = logging.getLogger(__name__)

# Rare forms (seen fewer than min_form_count times) fall into one of these
# classes; precedence follows this order.
UNKNOWN_CLASSES = ("<unk-cap>", "<unk-digit>", "<unk-punct>", "<unk-other>")


def word_class(form: str) -> int:
    if form[0].isupper():
        return 0
    if any(ch.isdigit() for ch in form):
        return 1
    if all(not ch.isalnum() for ch in form):
        return 2
    return 3


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 42
    lambda_trans: float = 0.1
    lambda_emit: float = 0.01
    max_iters: int = 100
    tol: float = 1e-6  # relative log-likelihood improvement to keep going
    open_world_threshold: float = 0.5
    min_form_count: int = 2

    def __post_init__(self) -> None:
        if self.lambda_trans <= 0 or self.lambda_emit <= 0:
            raise ValueError("smoothing weights must be positive")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit an unsigned 64-bit integer")

    def canonical(self) -> str:
        return ";".join(
            f"{name}={format_float(value) if isinstance(value, float) else value}"
            for name, value in sorted(vars(self).items())
        )

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class TrainingMeta:
    iterations: int
    final_log_likelihood: float
    trace: tuple[float, ...]
    converged: bool
    config_hash: str
    seed: int


@dataclass
class TaggerModel:
    """First-order HMM: initial/transition rows over tags, emission rows
    over the vocabulary plus four rare-word classes.  Every row is a
    strictly positive probability vector (smoothing guarantees it)."""

    frame: Frame
    vocabulary: dict[str, int]
    initial: np.ndarray
    transitions: np.ndarray
    emissions: np.ndarray
    config: TrainConfig
    meta: TrainingMeta

    def __post_init__(self) -> None:
        k = len(self.frame)
        v = len(self.vocabulary) + len(UNKNOWN_CLASSES)
        if self.initial.shape != (k,) or self.transitions.shape != (k, k):
            raise ValueError("parameter shapes do not match the frame")
        if self.emissions.shape != (k, v):
            raise ValueError("emission shape does not match the vocabulary")
        for name, table in (("initial", self.initial[None, :]),
                            ("transitions", self.transitions),
                            ("emissions", self.emissions)):
            if not np.all(table > 0):
                raise ValueError(f"{name} rows must be strictly positive")
            if np.abs(table.sum(axis=1) - 1.0).max() > 1e-9:
                raise ValueError(f"{name} rows must sum to 1")

    def observation_index(self, form: str) -> int:
        index = self.vocabulary.get(form)
        if index is not None:
            return index
        return len(self.vocabulary) + word_class(form)


@dataclass(frozen=True)
class TokenConstraint:
    """Per-tag supervision degrees for one token (all ones = unannotated)."""

    degrees: tuple[float, ...]

    def __post_init__(self) -> None:
        if not any(d > 0 for d in self.degrees):
            raise ValueError("a token constraint needs at least one positive degree")


@dataclass(frozen=True)
class ZeroMaskReport:
    """A token whose aggregated supervision vanished; it trains unconstrained."""

    target: Target
    annotators: tuple[str, ...]


def build_constraints(
    bundle: CorpusBundle,
    frame: Frame | None = None,
) -> tuple[dict[str, np.ndarray], list[ZeroMaskReport]]:
    """Turn POS annotations into per-token constraint matrices.

    Returns one (n_tokens, n_tags) array per document.  Tokens with
    several annotators aggregate conjunctively first; tokens whose
    aggregate is all-zero are reported and left unconstrained.
    """
    if frame is None:
        tagset = bundle.tagsets.get(Layer.POS)
        if tagset is None:
            raise NoData("no POS tag set in the bundle")
        frame = tagset.frame
    tags = list(frame.elements)

    by_token: dict[tuple[str, int], list] = {}
    for record in bundle.annotations:
        if record.layer is not Layer.POS:
            continue
        t = record.target
        if t.start != t.end:
            continue  # invalid for POS; validation reports it elsewhere
        by_token.setdefault((t.doc_id, t.start), []).append(record)

    constraints = {
        doc.doc_id: np.ones((doc.n_tokens, len(tags))) for doc in bundle.documents
    }
    reports: list[ZeroMaskReport] = []
    for (doc_id, index), records in sorted(by_token.items()):
        matrix = constraints.get(doc_id)
        if matrix is None or index >= matrix.shape[0]:
            continue  # unresolvable target; bundle validation reports it
        result = aggregate_target(records, frame, bundle.scale)
        degrees = np.array([result.combined.degree(tag) for tag in tags])
        if not np.any(degrees > 0):
            report = ZeroMaskReport(
                target=records[0].target, annotators=result.contributing)
            reports.append(report)
            log.warning("zero constraint mask at %s:%d (annotators %s); "
                        "token left unsupervised", doc_id, index,
                        ",".join(result.contributing))
            continue
        matrix[index] = degrees
    return constraints, reports


def forward_backward(
    initial: np.ndarray,
    transitions: np.ndarray,
    emission_scores: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Scaled forward-backward over effective emission scores (T, K).

    Emission scores are the per-position emission column, already
    multiplied by any constraint degrees.  Returns the posterior marginals
    gamma (T, K), the summed transition posteriors xi (K, K) and the
    log-likelihood of the evidence.
    """
    T, K = emission_scores.shape
    alpha = np.empty((T, K))
    scales = np.empty(T)
    current = initial * emission_scores[0]
    scales[0] = current.sum()
    if scales[0] <= 0:
        raise NoData("sentence has zero likelihood under the constraints")
    alpha[0] = current / scales[0]
    for t in range(1, T):
        current = (alpha[t - 1] @ transitions) * emission_scores[t]
        scales[t] = current.sum()
        if scales[t] <= 0:
            raise NoData("sentence has zero likelihood under the constraints")
        alpha[t] = current / scales[t]

    beta = np.empty((T, K))
    beta[T - 1] = 1.0
    xi_sum = np.zeros((K, K))
    for t in range(T - 2, -1, -1):
        weighted = emission_scores[t + 1] * beta[t + 1]
        beta[t] = (transitions @ weighted) / scales[t + 1]
        xi_sum += (alpha[t][:, None] * transitions * weighted[None, :]) / scales[t + 1]

    gamma = alpha * beta
    gamma /= gamma.sum(axis=1, keepdims=True)
    return gamma, xi_sum, float(np.log(scales).sum())


def _sentence_observations(model_vocab: dict[str, int], sentence) -> np.ndarray:
    base = len(model_vocab)
    return np.array(
        [model_vocab.get(tok.form, base + word_class(tok.form)) for tok in sentence],
        dtype=np.intp,
    )


def _build_vocabulary(documents: Sequence[Document], min_count: int) -> dict[str, int]:
    counts: dict[str, int] = {}
    for doc in documents:
        for token in doc.tokens():
            counts[token.form] = counts.get(token.form, 0) + 1
    kept = sorted(form for form, n in counts.items() if n >= min_count)
    return {form: i for i, form in enumerate(kept)}


def _initial_parameters(
    k: int, d: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    initial = np.full(k, 1.0 / k)
    transitions = np.full((k, k), 1.0 / k)
    # perturb emissions so EM can break the symmetry, reproducibly; the
    # amplitude must be large enough that the first iterations clear the
    # relative-improvement stopping rule
    emissions = 1.0 + 0.5 * rng.random((k, d))
    emissions /= emissions.sum(axis=1, keepdims=True)
    return initial, transitions, emissions


def train(bundle: CorpusBundle, config: TrainConfig | None = None) -> TaggerModel:
    """Constrained Baum-Welch over every sentence of the bundle.

    The likelihood of the evidence is evaluated each iteration; training
    stops when the relative improvement falls under the tolerance, and if
    a smoothed M-step ever lowers the evaluated likelihood the step is
    rolled back, so the recorded trace is non-decreasing and every value
    in it was actually measured.
    """
    config = config or TrainConfig()
    tagset = bundle.tagsets.get(Layer.POS)
    if tagset is None:
        raise NoData("no POS tag set in the bundle")
    frame = tagset.frame
    k = len(frame)
    if k < 2:
        raise NoData("training needs at least two tags")
    sentences = [
        (doc, sentence) for doc in bundle.documents for sentence in doc.sentences
    ]
    if not sentences:
        raise NoData("training needs at least one sentence")

    vocabulary = _build_vocabulary(bundle.documents, config.min_form_count)
    d = len(vocabulary) + len(UNKNOWN_CLASSES)
    constraints, _ = build_constraints(bundle, frame)

    observations = []
    masks = []
    for doc, sentence in sentences:
        observations.append(_sentence_observations(vocabulary, sentence))
        start = sentence[0].index
        masks.append(constraints[doc.doc_id][start:start + len(sentence)])

    rng = np.random.default_rng(config.seed)
    initial, transitions, emissions = _initial_parameters(k, d, rng)

    def e_step(params):
        init, trans, emit = params
        init_counts = np.zeros(k)
        trans_counts = np.zeros((k, k))
        emit_counts = np.zeros((k, d))
        loglik = 0.0
        # fixed sentence order keeps accumulation bit-reproducible
        for obs, mask in zip(observations, masks):
            scores = emit[:, obs].T * mask
            gamma, xi, ll = forward_backward(init, trans, scores)
            loglik += ll
            init_counts += gamma[0]
            trans_counts += xi
            np.add.at(emit_counts.T, obs, gamma)
        return (init_counts, trans_counts, emit_counts), loglik

    def m_step(stats):
        init_counts, trans_counts, emit_counts = stats
        lt, le = config.lambda_trans, config.lambda_emit
        init = (init_counts + lt) / (init_counts.sum() + lt * k)
        trans = (trans_counts + lt) / (
            trans_counts.sum(axis=1, keepdims=True) + lt * k)
        emit = (emit_counts + le) / (
            emit_counts.sum(axis=1, keepdims=True) + le * d)
        return init, trans, emit

    params = (initial, transitions, emissions)
    previous = params
    trace: list[float] = []
    converged = False
    m_steps = 0
    for _ in range(config.max_iters):
        stats, loglik = e_step(params)
        if trace and loglik < trace[-1]:
            params = previous  # smoothed step degraded the likelihood
            converged = True
            break
        if trace:
            improvement = (loglik - trace[-1]) / max(abs(trace[-1]), 1e-12)
            trace.append(loglik)
            if improvement < config.tol:
                converged = True
                break
        else:
            trace.append(loglik)
        previous = params
        params = m_step(stats)
        m_steps += 1
    else:
        # budget exhausted: evaluate the final parameters so the recorded
        # likelihood matches the returned model
        _, loglik = e_step(params)
        if loglik < trace[-1]:
            params = previous
        else:
            trace.append(loglik)

    initial, transitions, emissions = params
    meta = TrainingMeta(
        iterations=m_steps,
        final_log_likelihood=trace[-1],
        trace=tuple(trace),
        converged=converged,
        config_hash=config.config_hash(),
        seed=config.seed,
    )
    return TaggerModel(
        frame=frame,
        vocabulary=vocabulary,
        initial=initial,
        transitions=transitions,
        emissions=emissions,
        config=config,
        meta=meta,
    )


def corpus_log_likelihood(bundle: CorpusBundle, model: TaggerModel) -> float:
    """Evidence log-likelihood of a bundle's annotations under a model.

    Useful for monitoring: it is exactly the quantity the trainer reports
    per iteration, evaluated for an arbitrary model.
    """
    constraints, _ = build_constraints(bundle, model.frame)
    total = 0.0
    for doc in bundle.documents:
        for sentence in doc.sentences:
            obs = _sentence_observations(model.vocabulary, sentence)
            start = sentence[0].index
            mask = constraints[doc.doc_id][start:start + len(sentence)]
            scores = model.emissions[:, obs].T * mask
            _, _, loglik = forward_backward(model.initial, model.transitions, scores)
            total += loglik
    return total


@dataclass(frozen=True)
class TokenPrediction:
    index: int
    form: str
    best_tag: str
    posterior: Mapping[str, float]
    entropy: float
    outside_frame: bool = False  # open world: no known tag dominates

    def top(self, n: int = 2) -> tuple[tuple[str, float], ...]:
        ranked = sorted(self.posterior.items(), key=lambda kv: (-kv[1], kv[0]))
        return tuple(ranked[:n])


@dataclass(frozen=True)
class TaggedOutput:
    doc_id: str
    tokens: tuple[TokenPrediction, ...]


def _viterbi(
    initial: np.ndarray,
    transitions: np.ndarray,
    emission_scores: np.ndarray,
    lex_rank: np.ndarray,
) -> list[int]:
    """Most likely path in log space; ties prefer the lexicographically
    smaller tag (resolved through lex_rank)."""
    T, K = emission_scores.shape
    log_e = np.log(emission_scores)
    log_a = np.log(transitions)
    delta = np.log(initial) + log_e[0]
    back = np.zeros((T, K), dtype=np.intp)
    for t in range(1, T):
        scores = delta[:, None] + log_a  # (from, to)
        best = scores.max(axis=0)
        # among equal-scoring predecessors pick the smallest tag
        candidates = np.where(scores == best[None, :], lex_rank[:, None], K)
        back[t] = candidates.argmin(axis=0)
        delta = best + log_e[t]
    final = delta.max()
    last = int(np.where(delta == final, lex_rank, K).argmin())
    path = [last]
    for t in range(T - 1, 0, -1):
        last = int(back[t, last])
        path.append(last)
    path.reverse()
    return path


def tag(model: TaggerModel, document: Document) -> TaggedOutput:
    """Viterbi path, forward-backward posteriors and entropy per token."""
    if document.n_tokens == 0:
        raise EmptyDocument(document.doc_id or "<unnamed>")
    tags = list(model.frame.elements)
    lex_rank = np.argsort(np.argsort(np.array(tags)))
    open_world = model.frame.world is World.OPEN
    predictions: list[TokenPrediction] = []
    for sentence in document.sentences:
        obs = _sentence_observations(model.vocabulary, sentence)
        scores = model.emissions[:, obs].T
        gamma, _, _ = forward_backward(model.initial, model.transitions, scores)
        path = _viterbi(model.initial, model.transitions, scores, lex_rank)
        for token, state, marginals in zip(sentence, path, gamma):
            probs = np.clip(marginals, 0.0, 1.0)
            posterior = {t: float(p) for t, p in zip(tags, probs)}
            positive = probs[probs > 0]
            entropy = float(-(positive * np.log(positive)).sum())
            predictions.append(TokenPrediction(
                index=token.index,
                form=token.form,
                best_tag=tags[state],
                posterior=posterior,
                entropy=max(entropy, 0.0),
                outside_frame=open_world and float(probs.max())
                < model.config.open_world_threshold,
            ))
    return TaggedOutput(doc_id=document.doc_id, tokens=tuple(predictions))


@dataclass(frozen=True)
class ReviewItem:
    target: Target
    entropy: float
    top2: tuple[tuple[str, float], ...]


def review_queue(outputs: Iterable[TaggedOutput], k: int) -> list[ReviewItem]:
    """Top-k tokens by posterior entropy, ties in document order."""
    if k < 1:
        raise ValueError("k must be at least 1")
    items = [
        ReviewItem(
            target=Target(doc_id=out.doc_id, start=tok.index, end=tok.index),
            entropy=tok.entropy,
            top2=tok.top(2),
        )
        for out in outputs
        for tok in out.tokens
    ]
    items.sort(key=lambda it: (-it.entropy, it.target.doc_id, it.target.start))
    return items[:k]


@dataclass(frozen=True)
class EvalMetrics:
    token_accuracy: float | None
    set_accuracy: float | None
    mean_cross_entropy: float | None
    n_precise: int
    n_set: int
    n_distributional: int
    by_gt_mode: Mapping[str, int]


def evaluate(
    outputs: Iterable[TaggedOutput],
    gold: Sequence,
    frame: Frame,
    scale: OrdinalScale | None = None,
) -> EvalMetrics:
    """Score predictions against gold annotations of any style.

    Precise gold scores exact-match accuracy; set-valued gold (including
    graded multi-tag precise records) scores membership of the Viterbi
    tag; distributional and ordinal gold score mean cross-entropy after
    normalizing the possibility degrees into a probability.
    """
    predictions: dict[tuple[str, int], TokenPrediction] = {}
    for out in outputs:
        for tok in out.tokens:
            predictions[(out.doc_id, tok.index)] = tok

    correct = total = 0
    set_correct = set_total = 0
    ce_sum = 0.0
    ce_total = 0
    by_gt: dict[str, int] = {}
    for record in gold:
        if record.layer is not Layer.POS:
            continue
        t = record.target
        if t.start != t.end:
            raise AlignmentError(f"POS gold spans several tokens at {t}")
        prediction = predictions.get((t.doc_id, t.start))
        if prediction is None:
            raise AlignmentError(f"no prediction for {t.doc_id}:{t.start}")
        by_gt[record.gt_mode.value] = by_gt.get(record.gt_mode.value, 0) + 1

        graded = record.gt_mode is GtMode.GRADED
        if record.style is Style.PRECISE and not graded:
            total += 1
            correct += prediction.best_tag == record.entries[0].tag
        elif record.style in (Style.PRECISE, Style.SET):
            members = {e.tag for e in record.entries}
            if members:
                set_total += 1
                set_correct += prediction.best_tag in members
        else:
            degrees = to_possibility(record, frame, scale)
            mass = sum(degrees.degrees.values())
            if mass <= 0:
                continue  # all-zero gold carries no target distribution
            ce = 0.0
            for tag, degree in degrees.degrees.items():
                p = max(prediction.posterior.get(tag, 0.0), 1e-300)
                ce -= (degree / mass) * math.log(p)
            ce_sum += ce
            ce_total += 1

    return EvalMetrics(
        token_accuracy=correct / total if total else None,
        set_accuracy=set_correct / set_total if set_total else None,
        mean_cross_entropy=ce_sum / ce_total if ce_total else None,
        n_precise=total,
        n_set=set_total,
        n_distributional=ce_total,
        by_gt_mode=by_gt,
    )


# ---------------------------------------------------------------------------
# model file format (versioned single file, full-precision tables)

_MODEL_VERSION = "1"


def _frame_hash(frame: Frame) -> str:
    payload = "\x00".join(frame.elements) + "\x01" + frame.world.value
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _row(values: Iterable[float]) -> str:
    return "|".join(format_float(v) for v in values)


def serialize_model(model: TaggerModel) -> str:
    lines = [
        f"#softtag-model={_MODEL_VERSION}",
        f"#frame={'|'.join(model.frame.elements)}",
        f"#world={model.frame.world.value}",
        f"#frame-hash={_frame_hash(model.frame)}",
        f"#config={model.config.canonical()}",
        f"#config-hash={model.meta.config_hash}",
        f"#seed={model.meta.seed}",
        f"#iterations={model.meta.iterations}",
        f"#converged={'true' if model.meta.converged else 'false'}",
        f"#final-loglik={format_float(model.meta.final_log_likelihood)}",
        f"#trace={_row(model.meta.trace)}",
        "[vocabulary]",
    ]
    for form, index in sorted(model.vocabulary.items(), key=lambda kv: kv[1]):
        lines.append(f"{index}\t{form}")
    lines.append("[initial]")
    lines.append(_row(model.initial))
    lines.append("[transitions]")
    lines.extend(_row(row) for row in model.transitions)
    lines.append("[emissions]")
    lines.extend(_row(row) for row in model.emissions)
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> TaggerModel:
    headers: dict[str, str] = {}
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1]
            if name in sections:
                raise ParseError(f"duplicate section {name!r}", lineno)
            current = sections.setdefault(name, [])
        elif current is not None:
            current.append(line)
        elif line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if not sep:
                raise ParseError(f"malformed model header {line!r}", lineno)
            headers[key] = value
        else:
            raise ParseError(f"unexpected line {line!r}", lineno)

    if headers.get("softtag-model") != _MODEL_VERSION:
        raise ParseError("unsupported or missing model version")
    try:
        frame = Frame(tuple(headers["frame"].split("|")), World(headers["world"]))
        config_items = dict(
            item.split("=", 1) for item in headers["config"].split(";"))
        config = TrainConfig(
            seed=int(config_items["seed"]),
            lambda_trans=float(config_items["lambda_trans"]),
            lambda_emit=float(config_items["lambda_emit"]),
            max_iters=int(config_items["max_iters"]),
            tol=float(config_items["tol"]),
            open_world_threshold=float(config_items["open_world_threshold"]),
            min_form_count=int(config_items["min_form_count"]),
        )
        meta = TrainingMeta(
            iterations=int(headers["iterations"]),
            final_log_likelihood=float(headers["final-loglik"]),
            trace=tuple(float(v) for v in headers["trace"].split("|") if v),
            converged=headers["converged"] == "true",
            config_hash=headers["config-hash"],
            seed=int(headers["seed"]),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad model header: {exc}") from None
    if headers.get("frame-hash") != _frame_hash(frame):
        raise ParseError("frame hash does not match the frame")

    vocabulary: dict[str, int] = {}
    for line in sections.get("vocabulary", []):
        cells = line.split("\t")
        if len(cells) != 2:
            raise ParseError(f"bad vocabulary row {line!r}")
        try:
            vocabulary[cells[1]] = int(cells[0])
        except ValueError:
            raise ParseError(f"bad vocabulary index {cells[0]!r}") from None

    def table(name: str, rows: int) -> np.ndarray:
        raw = sections.get(name, [])
        if len(raw) != rows:
            raise ParseError(f"section {name!r} must have {rows} rows")
        try:
            return np.array([[float(v) for v in row.split("|")] for row in raw])
        except ValueError:
            raise ParseError(f"bad number in section {name!r}") from None

    k = len(frame)
    initial = table("initial", 1)[0]
    transitions = table("transitions", k)
    emissions = table("emissions", k)
    return TaggerModel(
        frame=frame,
        vocabulary=vocabulary,
        initial=initial,
        transitions=transitions,
        emissions=emissions,
        config=config,
        meta=meta,
    )


def save_model(model: TaggerModel, path: str | Path) -> None:
    Path(path).write_text(serialize_model(model), "utf-8")


def load_model(path: str | Path) -> TaggerModel:
    return parse_model(Path(path).read_text("utf-8"))


# ---------------------------------------------------------------------------
# tagged-output rows (annotation-file format with '#' extensions)


def serialize_tagged(outputs: Iterable[TaggedOutput], annotator: str = "machine") -> str:
    """Tagged output as annotation rows (style=dist) plus extensions
    carrying the Viterbi tag, the entropy and the open-world flag."""
    lines = []
    for out in outputs:
        for tok in out.tokens:
            record = AnnotationRecord(
                target=Target(doc_id=out.doc_id, start=tok.index, end=tok.index),
                layer=Layer.POS,
                annotator=annotator,
                style=Style.DIST,
                entries=tuple(
                    AnnotationEntry(tag=t, degree=p)
                    for t, p in tok.posterior.items()
                ),
                gt_mode=GtMode.UNKNOWN,
            )
            cells = [
                format_annotation_row(record),
                f"#best={tok.best_tag}",
                f"#entropy={format_float(tok.entropy)}",
            ]
            if tok.outside_frame:
                cells.append("#flag=outside-tagset")
            lines.append("\t".join(cells))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_tagged(text: str) -> list[TaggedOutput]:
    """Inverse of serialize_tagged (forms are not recoverable from rows)."""
    by_doc: dict[str, list[TokenPrediction]] = {}
    order: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        record, extensions = parse_annotation_row(line, lineno)
        ext = dict(e[1:].split("=", 1) for e in extensions)
        if "best" not in ext or "entropy" not in ext:
            raise ParseError("tagged row missing #best or #entropy", lineno)
        posterior = {e.tag: e.degree for e in record.entries}
        prediction = TokenPrediction(
            index=record.target.start,
            form="",
            best_tag=ext["best"],
            posterior=posterior,
            entropy=float(ext["entropy"]),
            outside_frame=ext.get("flag") == "outside-tagset",
        )
        doc_id = record.target.doc_id
        if doc_id not in by_doc:
            by_doc[doc_id] = []
            order.append(doc_id)
        by_doc[doc_id].append(prediction)
    return [
        TaggedOutput(doc_id=doc_id, tokens=tuple(by_doc[doc_id])) for doc_id in order
    ]
