"""Synthetic HMM corpora for the weak-supervision benchmark.

A ground-truth HMM with block-structured emissions (each tag owns a band
of the vocabulary) generates tagged sentences; the tags are then exposed
to the trainer as precise labels, as 2-element candidate sets, or not at
all, depending on the scenario under test.
"""

from dataclasses import dataclass

import numpy as np

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
from softtag.uncertainty import OrdinalScale, World


@dataclass
class SyntheticCorpus:
    bundle: CorpusBundle            # training documents + annotations
    test_bundle: CorpusBundle       # test documents, no annotations
    train_tags: dict[str, list[str]]  # doc_id -> gold tag per token
    test_tags: dict[str, list[str]]


def _true_model(rng, n_tags, n_words):
    # each tag mostly emits its own band of the vocabulary
    band = n_words // n_tags
    emissions = np.full((n_tags, n_words), 0.1 / n_words)
    for k in range(n_tags):
        lo = k * band
        inside = rng.dirichlet(np.ones(band)) * 0.9
        emissions[k, lo:lo + band] += inside
    emissions /= emissions.sum(axis=1, keepdims=True)
    transitions = rng.dirichlet(np.full(n_tags, 0.5), size=n_tags)
    initial = rng.dirichlet(np.ones(n_tags))
    return initial, transitions, emissions


def _sample_sentences(rng, params, n_sentences, min_len=4, max_len=12):
    initial, transitions, emissions = params
    n_tags = len(initial)
    sentences = []
    for _ in range(n_sentences):
        length = int(rng.integers(min_len, max_len + 1))
        states = [int(rng.choice(n_tags, p=initial))]
        for _ in range(length - 1):
            states.append(int(rng.choice(n_tags, p=transitions[states[-1]])))
        words = [int(rng.choice(emissions.shape[1], p=emissions[s])) for s in states]
        sentences.append((states, words))
    return sentences


def _document(doc_id, sentences, n_tags):
    tokens = []
    index = 0
    doc_sentences = []
    tags = []
    for states, words in sentences:
        sent = []
        for state, word in zip(states, words):
            sent.append(Token(index=index, form=f"w{word:02d}"))
            tags.append(f"T{state}")
            index += 1
        doc_sentences.append(tuple(sent))
    return Document(doc_id=doc_id, sentences=tuple(doc_sentences)), tags


def make_corpus(
    seed: int = 42,
    n_tags: int = 5,
    n_words: int = 50,
    n_train: int = 200,
    n_test: int = 50,
    supervision: str = "precise",
    set_fraction: float = 0.5,
) -> SyntheticCorpus:
    """Build train/test bundles from one sampled ground-truth HMM.

    supervision: "precise" labels every token, "sets" replaces set_fraction
    of the labels with 2-element candidate sets containing the true tag,
    and "none" leaves the corpus unannotated.
    """
    rng = np.random.default_rng(seed)
    params = _true_model(rng, n_tags, n_words)
    train = _sample_sentences(rng, params, n_train)
    test = _sample_sentences(rng, params, n_test)

    train_doc, train_tags = _document("train", train, n_tags)
    test_doc, test_tags = _document("test", test, n_tags)

    tagset = TagSet(
        layer=Layer.POS,
        world=World.CLOSED,
        entries=tuple(
            TagEntry(tag=f"T{k}", description=f"synthetic tag {k}", version=k + 1)
            for k in range(n_tags)
        ),
    )
    tags = [f"T{k}" for k in range(n_tags)]

    records = []
    if supervision != "none":
        n_tokens = train_doc.n_tokens
        as_set = np.zeros(n_tokens, dtype=bool)
        if supervision == "sets":
            chosen = rng.permutation(n_tokens)[: int(round(n_tokens * set_fraction))]
            as_set[chosen] = True
        for i in range(n_tokens):
            true_tag = train_tags[i]
            target = Target(doc_id="train", start=i, end=i)
            if as_set[i]:
                others = [t for t in tags if t != true_tag]
                distractor = others[int(rng.integers(len(others)))]
                entries = tuple(
                    AnnotationEntry(t) for t in sorted([true_tag, distractor])
                )
                records.append(AnnotationRecord(
                    target=target, layer=Layer.POS, annotator="gold",
                    style=Style.SET, entries=entries, gt_mode=GtMode.PRECISE,
                ))
            else:
                records.append(AnnotationRecord(
                    target=target, layer=Layer.POS, annotator="gold",
                    style=Style.PRECISE, entries=(AnnotationEntry(true_tag),),
                    gt_mode=GtMode.PRECISE,
                ))

    scale = OrdinalScale.default()
    bundle = CorpusBundle(
        documents=(train_doc,),
        tagsets={Layer.POS: tagset},
        scale=scale,
        annotations=tuple(records),
    )
    test_bundle = CorpusBundle(
        documents=(test_doc,),
        tagsets={Layer.POS: tagset},
        scale=scale,
        annotations=(),
    )
    return SyntheticCorpus(
        bundle=bundle,
        test_bundle=test_bundle,
        train_tags={"train": train_tags},
        test_tags={"test": test_tags},
    )


def gold_records(doc_id: str, tags: list[str]) -> tuple[AnnotationRecord, ...]:
    return tuple(
        AnnotationRecord(
            target=Target(doc_id=doc_id, start=i, end=i),
            layer=Layer.POS,
            annotator="gold",
            style=Style.PRECISE,
            entries=(AnnotationEntry(tag),),
            gt_mode=GtMode.PRECISE,
        )
        for i, tag in enumerate(tags)
    )


def majority_baseline_accuracy(train_tags: list[str], test_tags: list[str]) -> float:
    counts: dict[str, int] = {}
    for tag in train_tags:
        counts[tag] = counts.get(tag, 0) + 1
    majority = max(sorted(counts), key=counts.get)
    return sum(t == majority for t in test_tags) / len(test_tags)
