"""Command-line entry point wiring the modules into reproducible pipelines.

Subcommands: train-subword, train-lm, score, rouge, evaluate, combine,
split. Every output is written atomically; the only randomness (split)
takes an explicit --seed. Exit codes: 0 success, 1 validation error,
2 runtime error.
"""

import argparse
import os
import sys

from . import harness, ngram_lm, overlap, scorers, subword, text
from .errors import FluevalError
from .fileio import atomic_write_text


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _require_file(path, parser, what):
    if not os.path.isfile(path):
        parser.error(f"{what} not found: {path}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flueval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train-subword", help="learn a wordpiece-style vocabulary")
    p.add_argument("--corpus", required=True, help="plain text, one sentence per line")
    p.add_argument("--target-size", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-lm", help="train a Kneser-Ney n-gram LM")
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--discount", type=float, default=0.75)
    p.add_argument("--unk-threshold", type=int, default=1)
    p.add_argument("--subword", help="segment the corpus with this vocabulary first")
    p.add_argument("--out", required=True)

    p = sub.add_parser("score", help="referenceless scores for dataset outputs")
    p.add_argument("--data", required=True, help="dataset JSONL")
    p.add_argument("--kind", choices=scorers.KINDS, required=True)
    p.add_argument("--lm", help="model file from train-lm")
    p.add_argument("--subword", help="wordpiece vocabulary (switches to wordpiece units)")
    p.add_argument("--external", help="external score TSV instead of --lm")
    p.add_argument("--unit", choices=scorers.UNIT_SPACES,
                   help="unit space label for --external scoring (default word)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("rouge", help="reference-based overlap scores")
    p.add_argument("--data", required=True)
    p.add_argument("--metric", default="rouge-l",
                   choices=["rouge-l", "lr2-r", "lr2-f", "lr3-r", "lr3-f"])
    p.add_argument("--single-ref", action="store_true",
                   help="use only the first reference of each record")
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="correlate score files with human ratings")
    p.add_argument("--data", required=True)
    p.add_argument("--scores", nargs="+", required=True, help="one or more score TSVs")
    p.add_argument("--group-by", choices=["none", "system", "domain"], default="none")
    p.add_argument("--out", help="prefix; writes <out>.txt and <out>.json")
    p.add_argument("--json", action="store_true",
                   help="print the JSON report to stdout instead of the table")

    p = sub.add_parser("combine", help="combine a reference-based and an LM score")
    p.add_argument("--rouge", required=True, help="score TSV for the overlap metric")
    p.add_argument("--slor", required=True, help="score TSV for the LM metric")
    p.add_argument("--method", choices=["rouge-lm", "trained"], default="rouge-lm")
    p.add_argument("--fit-ids", help="id file for normalization stats (default: all ids)")
    p.add_argument("--data", help="dataset JSONL with ratings (trained method)")
    p.add_argument("--train-ids", help="id file (trained method)")
    p.add_argument("--dev-ids", help="id file (trained method)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("split", help="seeded train/dev/test id split")
    p.add_argument("--data", required=True)
    p.add_argument("--sizes", required=True,
                   help="train,dev,test counts; test may be 'rest'")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="prefix; writes <out>.{train,dev,test}.ids")

    return parser


def _read_ids(path) -> list[str]:
    with open(path, encoding="utf-8") as handle:
        return [line.strip() for line in handle if line.strip()]


def _dataset_tokens(records) -> dict[str, list[str]]:
    return {rec.id: text.normalize(rec.output) for rec in records}


def _cmd_train_subword(args, parser):
    _require_file(args.corpus, parser, "corpus")
    if args.target_size < 2:
        parser.error("--target-size must be >= 2")
    vocab = subword.learn_vocabulary(text.read_corpus(args.corpus), args.target_size)
    subword.save_vocabulary(vocab, args.out)
    print(f"wrote {len(vocab)} pieces to {args.out}")


def _cmd_train_lm(args, parser):
    _require_file(args.corpus, parser, "corpus")
    if args.order < 1:
        parser.error("--order must be >= 1")
    if not (0.0 < args.discount < 1.0):
        parser.error("--discount must be in (0, 1)")
    if args.subword:
        _require_file(args.subword, parser, "subword vocabulary")
    corpus = text.read_corpus(args.corpus)
    if args.subword:
        vocab = subword.load_vocabulary(args.subword)
        corpus = [subword.segment_sequence(s, vocab) for s in corpus]
    model = ngram_lm.train(corpus, args.order, args.unk_threshold, args.discount)
    ngram_lm.save(model, args.out)
    print(f"wrote order-{model.order} model ({len(model.vocab)} types) to {args.out}")


def _cmd_score(args, parser):
    _require_file(args.data, parser, "dataset")
    if bool(args.lm) == bool(args.external):
        parser.error("exactly one of --lm or --external is required")
    records = harness.load_dataset(args.data)
    sentences = _dataset_tokens(records)
    if args.external:
        _require_file(args.external, parser, "external score table")
        unit = args.unit or "word"
        source = scorers.load_external_scores(args.external)
        scores = scorers.score_dataset(source, sentences, args.kind, unit)
    else:
        _require_file(args.lm, parser, "model")
        vocab = None
        unit = "word"
        if args.subword:
            _require_file(args.subword, parser, "subword vocabulary")
            vocab = subword.load_vocabulary(args.subword)
            unit = "wordpiece"
        source = ngram_lm.load(args.lm)
        scores = scorers.score_dataset(source, sentences, args.kind, unit, vocab)
    name = scorers.METRIC_NAMES[(args.kind, unit)]
    harness.write_scores(args.out, name, {i: s.value for i, s in scores.items()}, refs="0")
    print(f"wrote {len(scores)} {name} scores to {args.out}")


def _rouge_score(tokens, refs_tok, metric, single_ref):
    refs = refs_tok[:1] if single_ref else refs_tok
    if metric == "rouge-l":
        name = "ROUGE-L-single" if single_ref else "ROUGE-L-mult"
        return overlap.rouge_l_multi(tokens, refs, name)
    n = int(metric[2])
    measure = metric[-1].upper()
    return overlap.ngram_overlap(tokens, refs, n, measure)


def _cmd_rouge(args, parser):
    _require_file(args.data, parser, "dataset")
    records = harness.load_dataset(args.data)
    missing = [rec.id for rec in records if not rec.references]
    if missing:
        parser.error(f"records without references cannot be scored: {missing[:5]}")
    scores = {}
    ref_counts = []
    name = None
    for rec in records:
        tokens = text.normalize(rec.output)
        refs_tok = [text.normalize(r) for r in rec.references]
        result = _rouge_score(tokens, refs_tok, args.metric, args.single_ref)
        used = 1 if args.single_ref else len(refs_tok)
        ref_counts.append(used)
        scores[rec.id] = result.value
        name = result.metric_name
    if args.metric != "rouge-l":
        name = f"{name}-mult" if not args.single_ref else f"{name}-single"
    lo, hi = min(ref_counts), max(ref_counts)
    refs_label = str(lo) if lo == hi else f"{lo}-{hi}"
    harness.write_scores(args.out, name, scores, refs=refs_label)
    print(f"wrote {len(scores)} {name} scores to {args.out}")


def _cmd_evaluate(args, parser):
    _require_file(args.data, parser, "dataset")
    for path in args.scores:
        _require_file(path, parser, "score file")
    records = harness.load_dataset(args.data)
    metrics = {}
    refs = {}
    for path in args.scores:
        name, refs_label, scores = harness.read_scores(path)
        if name in metrics:
            parser.error(f"duplicate metric name {name!r} across score files")
        metrics[name] = scores
        refs[name] = refs_label
    report = harness.compare_metrics(metrics, records, args.group_by, refs)
    txt = harness.render_text(report)
    js = harness.render_json(report)
    if args.out:
        atomic_write_text(f"{args.out}.txt", txt)
        atomic_write_text(f"{args.out}.json", js)
        print(f"wrote {args.out}.txt and {args.out}.json")
    else:
        sys.stdout.write(js if args.json else txt)


def _cmd_combine(args, parser):
    _require_file(args.rouge, parser, "rouge score file")
    _require_file(args.slor, parser, "lm score file")
    _, rouge_refs, rouge_scores = harness.read_scores(args.rouge)
    _, _, slor_scores = harness.read_scores(args.slor)
    shared = [sid for sid in rouge_scores if sid in slor_scores]
    if args.method == "rouge-lm":
        fit_ids = _read_ids(args.fit_ids) if args.fit_ids else shared
        _, values = harness.combine_rouge_lm(rouge_scores, slor_scores, fit_ids)
        name = "ROUGE-LM"
    else:
        if not (args.data and args.train_ids and args.dev_ids):
            parser.error("--method trained needs --data, --train-ids, and --dev-ids")
        _require_file(args.data, parser, "dataset")
        _require_file(args.train_ids, parser, "train id file")
        _require_file(args.dev_ids, parser, "dev id file")
        records = harness.load_dataset(args.data)
        targets = {rec.id: harness.aggregate_ratings(rec) for rec in records}
        features = {sid: (rouge_scores[sid], slor_scores[sid]) for sid in shared}
        combiner = harness.train_combiner(
            features, targets, _read_ids(args.train_ids), _read_ids(args.dev_ids))
        values = combiner.apply(features)
        name = "trained"
    harness.write_scores(args.out, name, values, refs=rouge_refs)
    print(f"wrote {len(values)} {name} scores to {args.out}")


def _cmd_split(args, parser):
    _require_file(args.data, parser, "dataset")
    records = harness.load_dataset(args.data)
    parts = args.sizes.split(",")
    if len(parts) != 3:
        parser.error("--sizes must be train,dev,test")
    try:
        n_train, n_dev = int(parts[0]), int(parts[1])
        n_test = len(records) - n_train - n_dev if parts[2] == "rest" else int(parts[2])
    except ValueError:
        parser.error(f"bad --sizes value: {args.sizes!r}")
    if n_train < 0 or n_dev < 0 or n_test < 0:
        parser.error(f"sizes {args.sizes!r} exceed the dataset ({len(records)} records)")
    train, dev, test = harness.split_dataset(records, (n_train, n_dev, n_test), args.seed)
    for label, ids in (("train", train), ("dev", dev), ("test", test)):
        atomic_write_text(f"{args.out}.{label}.ids", "\n".join(sorted(ids)) + "\n")
    print(f"wrote {args.out}.train.ids ({len(train)}), "
          f"{args.out}.dev.ids ({len(dev)}), {args.out}.test.ids ({len(test)})")


_COMMANDS = {
    "train-subword": _cmd_train_subword,
    "train-lm": _cmd_train_lm,
    "score": _cmd_score,
    "rouge": _cmd_rouge,
    "evaluate": _cmd_evaluate,
    "combine": _cmd_combine,
    "split": _cmd_split,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        _COMMANDS[args.command](args, parser)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except FluevalError as exc:
        print(f"flueval: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 2
        print(f"flueval: unexpected error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
