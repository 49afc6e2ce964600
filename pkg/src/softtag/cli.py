"""Batch entry point: validate, report, train, tag, evaluate, review, serve.

Exit codes: 0 on success, 1 when validation diagnostics are present, 2 on
usage or file-format errors.  Diagnostics go to standard error as
"FILE:LINE:CODE:MESSAGE".  All outputs are deterministic for a fixed
corpus, configuration and seed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .aggregate import corpus_conflict_report
from .annotations import GtMode, Layer, Style, classify_case
from .corpus_io import LoadedCorpus, format_float, load_corpus
from .errors import SofttagError
from .tagger import (
    TrainConfig,
    build_constraints,
    evaluate,
    load_model,
    parse_tagged,
    review_queue,
    save_model,
    serialize_tagged,
    tag,
    train,
)

_CONFIG_KEYS = {
    "corpus", "scale", "seed", "max_iters", "tol", "lambda_trans",
    "lambda_emit", "threshold", "out", "port", "k", "model", "pred",
}


def read_config_file(path: str | Path) -> dict[str, str]:
    """key=value lines; blank lines and '#' comments are skipped."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _CONFIG_KEYS:
            raise SofttagError(f"{path}:{lineno}: bad config line {line!r}")
        values[key] = value.strip()
    return values


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file; flags win")
    parser.add_argument("--corpus", help="corpus directory")
    parser.add_argument("--scale", help="scale file (default: corpus/scale.tsv)")
    parser.add_argument("--register-unknown", action="store_true",
                        help="grow open tag sets with unseen annotation tags")
    parser.add_argument("--out", help="output file (default: stdout)")


def _add_training(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int)
    parser.add_argument("--max-iters", type=int, dest="max_iters")
    parser.add_argument("--tol", type=float)
    parser.add_argument("--lambda-trans", type=float, dest="lambda_trans")
    parser.add_argument("--lambda-emit", type=float, dest="lambda_emit")
    parser.add_argument("--threshold", type=float,
                        help="open-world flagging threshold on the max posterior")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softtag",
        description="uncertainty-aware corpus annotation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, describe in (
        ("validate", "check every annotation against its tag set and scale"),
        ("stats", "corpus size and annotation-style statistics"),
        ("cases", "count annotations per ground-truth/annotation case"),
        ("aggregate", "conflict report over multiply-annotated targets"),
    ):
        p = sub.add_parser(name, help=describe)
        _add_common(p)

    p = sub.add_parser("train", help="train the HMM tagger on the corpus")
    _add_common(p)
    _add_training(p)

    p = sub.add_parser("tag", help="tag corpus documents with a trained model")
    _add_common(p)
    p.add_argument("--model", help="model file from `train`")
    p.add_argument("--doc", help="tag only this document id")

    p = sub.add_parser("eval", help="score tagged output against gold annotations")
    _add_common(p)
    p.add_argument("--pred", help="tagged output file from `tag`")

    p = sub.add_parser("review", help="rank tokens for human revision by entropy")
    _add_common(p)
    p.add_argument("--pred", help="tagged output file from `tag`")
    p.add_argument("--k", type=int)

    p = sub.add_parser("serve", help="serve the corpus over HTTP for annotation")
    _add_common(p)
    p.add_argument("--model", help="optional model file for suggestions")
    p.add_argument("--port", type=int)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static", help="directory with the browser UI to mount")
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """Merge config-file values under explicit flags (flags win)."""
    merged: dict = {}
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for key, value in vars(args).items():
        if value is not None and key != "config":
            merged[key] = value
    return merged


def _train_config(options: dict) -> TrainConfig:
    defaults = TrainConfig()
    return TrainConfig(
        seed=int(options.get("seed", defaults.seed)),
        lambda_trans=float(options.get("lambda_trans", defaults.lambda_trans)),
        lambda_emit=float(options.get("lambda_emit", defaults.lambda_emit)),
        max_iters=int(options.get("max_iters", defaults.max_iters)),
        tol=float(options.get("tol", defaults.tol)),
        open_world_threshold=float(
            options.get("threshold", defaults.open_world_threshold)),
    )


def _load(options: dict) -> LoadedCorpus:
    corpus = options.get("corpus")
    if not corpus:
        raise SofttagError("--corpus is required")
    return load_corpus(
        corpus,
        scale_path=options.get("scale"),
        register_unknown=bool(options.get("register_unknown")),
    )


def _emit(options: dict, text: str) -> None:
    out = options.get("out")
    if out:
        Path(out).write_text(text, "utf-8")
    else:
        sys.stdout.write(text)


def _report_diagnostics(loaded: LoadedCorpus, corpus_path: str) -> int:
    """Print FILE:LINE:CODE:MESSAGE per diagnostic; returns their count."""
    indexed = loaded.bundle.validate_indexed()
    for position, diag in indexed:
        if position < len(loaded.record_sources):
            path, line = loaded.record_sources[position]
        else:
            path, line = corpus_path, 0
        sys.stderr.write(f"{path}:{line}:{diag.code}:{diag.message}\n")
    return len(indexed)


def _require_valid(loaded: LoadedCorpus, corpus_path: str) -> None:
    if _report_diagnostics(loaded, corpus_path):
        raise _DiagnosticsPresent()


class _DiagnosticsPresent(Exception):
    pass


def cmd_validate(options: dict) -> int:
    loaded = _load(options)
    return 1 if _report_diagnostics(loaded, options.get("corpus", "")) else 0


def cmd_stats(options: dict) -> int:
    loaded = _load(options)
    bundle = loaded.bundle
    lines = [
        f"documents\t{len(bundle.documents)}",
        f"sentences\t{sum(len(d.sentences) for d in bundle.documents)}",
        f"tokens\t{sum(d.n_tokens for d in bundle.documents)}",
        f"annotations\t{len(bundle.annotations)}",
    ]
    for layer in sorted(bundle.tagsets, key=lambda l: l.value):
        tagset = bundle.tagsets[layer]
        lines.append(f"tags[{layer.value}]\t{len(tagset.entries)}"
                     f"\t{tagset.world.value}")
    for style in Style:
        n = sum(1 for r in bundle.annotations if r.style is style)
        lines.append(f"style[{style.value}]\t{n}")
    for gt in GtMode:
        n = sum(1 for r in bundle.annotations if r.gt_mode is gt)
        lines.append(f"gt_mode[{gt.value}]\t{n}")
    unsourced = sum(1 for r in bundle.annotations if r.uncertainty_source is None)
    lines.append(f"source[none]\t{unsourced}")
    for source in ("ambiguity", "epistemic", "unclear"):
        n = sum(1 for r in bundle.annotations
                if r.uncertainty_source is not None
                and r.uncertainty_source.value == source)
        lines.append(f"source[{source}]\t{n}")
    report = corpus_conflict_report(bundle)
    for date, count in report.graded_by_date:
        lines.append(f"graded_by_date[{date}]\t{count}")
    _emit(options, "\n".join(lines) + "\n")
    return 0


def cmd_cases(options: dict) -> int:
    loaded = _load(options)
    _require_valid(loaded, options.get("corpus", ""))
    bundle = loaded.bundle
    counts = {case: 0 for case in range(1, 11)}
    for record in bundle.annotations:
        tagset = bundle.tagsets[record.layer]
        counts[classify_case(record, tagset, bundle.scale)] += 1
    lines = [f"{case}\t{counts[case]}" for case in range(1, 11)]
    _emit(options, "\n".join(lines) + "\n")
    return 0


def cmd_aggregate(options: dict) -> int:
    loaded = _load(options)
    report = corpus_conflict_report(loaded.bundle)
    lines = []
    for row in report.rows:
        cases = ",".join(str(c) for c in row.case_ids)
        annotators = ",".join(row.annotators)
        lines.append(
            f"conflict\t{row.target.doc_id}\t{row.target.start}"
            f"\t{row.target.end}\t{row.layer.value}"
            f"\t{format_float(row.conflict)}\t{cases}\t{annotators}"
        )
    for date, count in report.graded_by_date:
        lines.append(f"graded-date\t{date}\t{count}")
    _emit(options, "\n".join(lines) + ("\n" if lines else ""))
    return 0


def cmd_train(options: dict) -> int:
    loaded = _load(options)
    _require_valid(loaded, options.get("corpus", ""))
    config = _train_config(options)
    _, zero_masks = build_constraints(loaded.bundle)
    for report in zero_masks:
        t = report.target
        sys.stderr.write(
            f"{t.doc_id}:{t.start}:ZeroMask:token left unsupervised "
            f"(annotators {','.join(report.annotators)})\n"
        )
    model = train(loaded.bundle, config)
    out = options.get("out")
    if not out:
        raise SofttagError("train needs --out for the model file")
    save_model(model, out)
    meta = model.meta
    sys.stdout.write(
        f"iterations\t{meta.iterations}\n"
        f"converged\t{'true' if meta.converged else 'false'}\n"
        f"log_likelihood\t{format_float(meta.final_log_likelihood)}\n"
        f"config_hash\t{meta.config_hash}\n"
    )
    return 0


def cmd_tag(options: dict) -> int:
    loaded = _load(options)
    model_path = options.get("model")
    if not model_path:
        raise SofttagError("tag needs --model")
    model = load_model(model_path)
    documents = loaded.bundle.documents
    if options.get("doc"):
        documents = (loaded.bundle.document(options["doc"]),)
    outputs = [tag(model, doc) for doc in documents if doc.n_tokens > 0]
    _emit(options, serialize_tagged(outputs))
    return 0


def cmd_eval(options: dict) -> int:
    loaded = _load(options)
    pred_path = options.get("pred")
    if not pred_path:
        raise SofttagError("eval needs --pred")
    outputs = parse_tagged(Path(pred_path).read_text("utf-8"))
    bundle = loaded.bundle
    tagset = bundle.tagsets.get(Layer.POS)
    if tagset is None:
        raise SofttagError("no POS tag set in the corpus")
    gold = [r for r in bundle.annotations if r.layer is Layer.POS]
    metrics = evaluate(outputs, gold, tagset.frame, bundle.scale)
    lines = []
    for name, value in (
        ("token_accuracy", metrics.token_accuracy),
        ("set_accuracy", metrics.set_accuracy),
        ("mean_cross_entropy", metrics.mean_cross_entropy),
    ):
        lines.append(f"{name}\t{'' if value is None else format_float(value)}")
    lines.append(f"n_precise\t{metrics.n_precise}")
    lines.append(f"n_set\t{metrics.n_set}")
    lines.append(f"n_distributional\t{metrics.n_distributional}")
    for gt in sorted(metrics.by_gt_mode):
        lines.append(f"gold_gt_mode[{gt}]\t{metrics.by_gt_mode[gt]}")
    _emit(options, "\n".join(lines) + "\n")
    return 0


def cmd_review(options: dict) -> int:
    pred_path = options.get("pred")
    if not pred_path:
        raise SofttagError("review needs --pred")
    outputs = parse_tagged(Path(pred_path).read_text("utf-8"))
    k = int(options.get("k", 10))
    lines = []
    for item in review_queue(outputs, k):
        top = "\t".join(
            f"{tag_}\t{format_float(p)}" for tag_, p in item.top2
        )
        lines.append(
            f"{item.target.doc_id}\t{item.target.start}"
            f"\t{format_float(item.entropy)}\t{top}"
        )
    _emit(options, "\n".join(lines) + ("\n" if lines else ""))
    return 0


def cmd_serve(options: dict) -> int:
    import uvicorn

    from .service import CorpusStore, create_app

    corpus = options.get("corpus")
    if not corpus:
        raise SofttagError("--corpus is required")
    store = CorpusStore(
        corpus,
        scale_path=options.get("scale"),
        register_unknown=bool(options.get("register_unknown")),
    )
    if options.get("model"):
        store.load_model_file(options["model"])
    app = create_app(store, static_dir=options.get("static"))
    port = int(options.get("port", 8470))
    uvicorn.run(app, host=options.get("host", "127.0.0.1"), port=port)
    return 0


_COMMANDS = {
    "validate": cmd_validate,
    "stats": cmd_stats,
    "cases": cmd_cases,
    "aggregate": cmd_aggregate,
    "train": cmd_train,
    "tag": cmd_tag,
    "eval": cmd_eval,
    "review": cmd_review,
    "serve": cmd_serve,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        options = _resolve(args)
        return _COMMANDS[args.command](options)
    except _DiagnosticsPresent:
        return 1
    except (SofttagError, OSError) as exc:
        sys.stderr.write(f"softtag: error: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
