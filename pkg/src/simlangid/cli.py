"""Command-line interface.

Subcommands: train, predict, eval, ensemble, curve, annot, gen-synth,
filter.  Every command with a --seed flag is byte-deterministic; reports
embed the effective run configuration.  Exit codes: 0 success, 2 usage or
input error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .classifiers import (
    HierarchicalModel,
    apply_model,
    load_model,
    predict_ranked,
    save_model,
    train_hierarchical,
    train_linear,
    train_nb,
)
from .corpus import (
    filter_groups,
    gen_synthetic,
    load_dataset,
    load_label_space,
    normalize_placeholders,
    save_dataset,
    save_label_space,
)
from .ensemble import ensemble_report, load_predictions
from .errors import ParseError, SimlangError
from .evaluation import (
    TrainerSpec,
    annotator_stats,
    evaluate,
    learning_curve,
    load_annotation_table,
    render_report,
)
from .features import FeatureConfig


def _feature_config(args) -> FeatureConfig:
    char_orders = tuple(args.char_n) if args.char_n else ()
    word_orders = tuple(args.word_n) if args.word_n else ()
    if not char_orders and not word_orders:
        char_orders = (6,)
    return FeatureConfig(
        char_orders=char_orders,
        word_orders=word_orders,
        lowercase=args.lowercase,
        min_doc_freq=args.min_df,
        weighting=args.weighting,
    )


def _add_feature_flags(parser) -> None:
    parser.add_argument("--char-n", type=int, action="append", metavar="N",
                        help="character n-gram order; repeatable (default: 6)")
    parser.add_argument("--word-n", type=int, action="append", metavar="N",
                        help="word n-gram order; repeatable")
    parser.add_argument("--lowercase", action="store_true")
    parser.add_argument("--min-df", type=int, default=1, metavar="K",
                        help="minimum document frequency (default: 1)")
    parser.add_argument("--weighting", choices=["counts", "tfidf"], default="counts")


def _run_config(args) -> dict:
    skip = {"func"}
    cfg = {"command": args.command, "version": __version__}
    for key, value in sorted(vars(args).items()):
        if key in skip or key == "command":
            continue
        if isinstance(value, Path):
            value = str(value)
        cfg[key] = value
    return cfg


def _write_output(out, data: bytes) -> None:
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(out).write_bytes(data)


def _read_texts(path) -> list[str]:
    """Input rows for prediction: either bare text or text<TAB>label lines."""
    texts = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.endswith("\n"):
                line = line[:-1]
            if line.endswith("\r"):
                line = line[:-1]
            if not line:
                continue
            texts.append(line.rsplit("\t", 1)[0] if "\t" in line else line)
    return texts


def _read_gold_labels(path) -> list[str]:
    """Gold labels: one per line, or the label column of a text<TAB>label file."""
    labels = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.endswith("\n"):
                line = line[:-1]
            if line.endswith("\r"):
                line = line[:-1]
            if not line:
                raise ParseError("empty line", line=lineno, source=Path(path).name)
            labels.append(line.rsplit("\t", 1)[1] if "\t" in line else line)
    return labels


def cmd_train(args) -> int:
    space = load_label_space(args.label_space)
    ds = load_dataset(args.corpus, space)
    cfg = _feature_config(args)
    started = time.perf_counter()
    if args.hierarchical:
        if len(space.groups) == 1:
            print("warning: single-group label space, stage 1 skipped", file=sys.stderr)
        model = train_hierarchical(
            ds, cfg, base=args.model, alpha=args.alpha, epochs=args.epochs, seed=args.seed
        )
        vocab_size = "n/a" if model.group_model is None else len(model.group_model.vocab)
    elif args.model == "nb":
        model = train_nb(ds, cfg, args.alpha)
        vocab_size = len(model.vocab)
    else:
        model = train_linear(ds, cfg, args.epochs, args.seed)
        vocab_size = len(model.vocab)
    save_model(model, args.out)
    elapsed = time.perf_counter() - started
    print(
        f"trained {args.model}{' (hierarchical)' if args.hierarchical else ''}: "
        f"{len(ds)} instances, {len(space)} labels, vocab {vocab_size}, {elapsed:.1f}s"
    )
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    texts = _read_texts(args.input)
    lines = []
    if args.top_k > 1:
        for text in texts:
            ranked = predict_ranked(model, text)[: args.top_k]
            lines.append("\t".join(lab for lab, _ in ranked))
    else:
        lines.extend(apply_model(model, texts))
    data = "".join(line + "\n" for line in lines).encode("utf-8")
    _write_output(args.out, data)
    return 0


def cmd_eval(args) -> int:
    space = load_label_space(args.label_space)
    pred = _read_gold_labels(args.pred)
    gold = _read_gold_labels(args.gold)
    report = evaluate(pred, gold, space)
    _write_output(args.out, render_report(report, args.format, meta=_run_config(args)))
    return 0


def cmd_ensemble(args) -> int:
    space = load_label_space(args.label_space)
    runs_dir = Path(args.runs)
    if runs_dir.is_dir():
        run_files = sorted(p for p in runs_dir.iterdir() if p.is_file())
    else:
        run_files = [runs_dir]
    if not run_files:
        raise SimlangError(f"no run files found in {runs_dir}")
    pm = load_predictions(run_files, args.gold, space)
    report = ensemble_report(pm, args.combiner, n=args.n, seed=args.seed)
    report["run_config"] = _run_config(args)
    data = (json.dumps(report, indent=2, sort_keys=True) + "\n").encode("utf-8")
    _write_output(args.out, data)
    return 0


def cmd_curve(args) -> int:
    space = load_label_space(args.label_space)
    train = load_dataset(args.train, space)
    test = load_dataset(args.test, space)
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    trainer = TrainerSpec(
        kind=args.model,
        hierarchical=args.hierarchical,
        cfg=_feature_config(args),
        alpha=args.alpha,
        epochs=args.epochs,
    )
    result = learning_curve(
        train, test, sizes, args.replicates, args.seed, trainer, jobs=args.jobs
    )
    _write_output(args.out, render_report(result, args.format, meta=_run_config(args)))
    return 0


def cmd_annot(args) -> int:
    table = load_annotation_table(args.stats_file)
    stats = annotator_stats(table)
    _write_output(args.out, render_report(stats, args.format, meta=_run_config(args)))
    return 0


def cmd_gen_synth(args) -> int:
    ds = gen_synthetic(args.labels, args.per_label, args.alphabet_size, args.skew, args.seed)
    save_dataset(ds, args.out)
    if args.label_space_out:
        save_label_space(ds.label_space, args.label_space_out)
    print(f"wrote {len(ds)} instances, {len(ds.label_space)} labels to {args.out}")
    return 0


def cmd_filter(args) -> int:
    space = load_label_space(args.label_space)
    ds = load_dataset(args.corpus, space, strict=not args.lenient)
    if args.groups is not None:
        groups = [g for g in args.groups.split(",") if g]
        ds = filter_groups(ds, groups)
    if args.marker:
        ds = normalize_placeholders(ds, args.marker, args.canonical)
    save_dataset(ds, args.out)
    if args.label_space_out:
        save_label_space(ds.label_space, args.label_space_out)
    print(f"wrote {len(ds)} instances, {len(ds.label_space)} labels to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simlangid",
        description="Similar-language discrimination toolkit: n-gram classifiers, "
        "ensemble fusion, learning curves, annotation statistics.",
    )
    parser.add_argument("--version", action="version", version=f"simlangid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a classifier and serialize it")
    p.add_argument("--corpus", required=True)
    p.add_argument("--label-space", required=True)
    p.add_argument("--model", choices=["nb", "linear"], default="nb")
    p.add_argument("--hierarchical", action="store_true",
                   help="two-stage model: group first, then language")
    _add_feature_flags(p)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="label a corpus with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--top-k", type=int, default=1,
                   help="emit the k best labels per line, tab-separated")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score a run file against gold labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--label-space", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ensemble", help="combine run files: vote, oracle, accuracy@N")
    p.add_argument("--runs", required=True, help="directory of run files (or one file)")
    p.add_argument("--gold", required=True)
    p.add_argument("--label-space", required=True)
    p.add_argument("--combiner",
                   choices=["plurality", "majority", "oracle", "accuracy-at-n"],
                   default="plurality")
    p.add_argument("--n", type=int, default=2, help="N for accuracy-at-n")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("curve", help="learning-curve experiment with balanced subsampling")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--label-space", required=True)
    p.add_argument("--sizes", required=True, help="comma-separated per-label sizes")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--model", choices=["nb", "linear"], default="nb")
    p.add_argument("--hierarchical", action="store_true")
    _add_feature_flags(p)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=["csv", "json", "svg"], default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("annot", help="annotation-table statistics")
    p.add_argument("--stats-file", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_annot)

    p = sub.add_parser("gen-synth", help="generate a synthetic test corpus")
    p.add_argument("--labels", type=int, required=True)
    p.add_argument("--per-label", type=int, required=True)
    p.add_argument("--alphabet-size", type=int, default=26)
    p.add_argument("--skew", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.add_argument("--label-space-out", default=None)
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("filter", help="group subsetting / placeholder normalization")
    p.add_argument("--corpus", required=True)
    p.add_argument("--label-space", required=True)
    p.add_argument("--groups", default=None, help="comma-separated group ids to keep")
    p.add_argument("--marker", default=None, help="placeholder token to canonicalize")
    p.add_argument("--canonical", default="#NE#")
    p.add_argument("--lenient", action="store_true",
                   help="route unknown labels to group X instead of failing")
    p.add_argument("--out", required=True)
    p.add_argument("--label-space-out", default=None)
    p.set_defaults(func=cmd_filter)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SimlangError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
