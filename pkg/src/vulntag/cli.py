"""Command-line entry point.

Subcommands: build-gazetteer, autolabel, train, tag, xval, synth.
Options may also come from a JSON config file (``--config``); explicit
flags win on conflict. Output files are written atomically, so a failed
run never leaves a partial file behind.

Exit codes: 0 success, 2 parameter violation, 3 missing input file,
4 malformed input file, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import sys

from .autolabel import (
    EMPTY_GAZETTEER,
    autolabel_corpus,
    build_gazetteer,
    read_gazetteer,
    read_phrases,
    read_records,
    write_gazetteer,
    write_records,
)
from .corpus import read_corpus, unlabeled_description, write_corpus, Corpus
from .errors import (
    InvalidInputError,
    InvalidParameterError,
    LineFormatError,
    ModelFormatError,
)
from .evaluate import cross_validate, format_report_table, write_report
from .features import DEFAULT_CONFIG, FeatureConfig, collect_train_gazetteers
from .synth import generate_synthetic, synthetic_gazetteer
from .tagger import load_model, save_model, tag_pipeline, train_averaged_perceptron

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARAMETER = 2
EXIT_MISSING_FILE = 3
EXIT_BAD_INPUT = 4

# Hard defaults, applied after config-file values; argparse defaults stay
# None so explicit flags can be told apart from unset ones.
_DEFAULTS = {
    "seed": 0,
    "jobs": 1,
    "min_count": 20,
    "max_n": 3,
    "kind": "other",
    "iterations": 5,
    "shuffle": False,
    "strict": False,
    "folds": 5,
    "split": 0.8,
    "n": None,
    "distractor_rate": 0.2,
}


def _feature_config(args) -> FeatureConfig:
    if getattr(args, "feature_config", None):
        with open(args.feature_config, "r", encoding="utf-8") as fh:
            return FeatureConfig.from_dict(json.load(fh))
    return DEFAULT_CONFIG


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidParameterError(message)


def cmd_build_gazetteer(args) -> None:
    _require(args.min_count >= 1, f"--min-count must be >= 1, got {args.min_count}")
    _require(1 <= args.max_n <= 3, f"--max-n must be between 1 and 3, got {args.max_n}")
    records = read_records(args.records)
    stoplist = read_phrases(args.stoplist) if args.stoplist else frozenset()
    gazetteer = build_gazetteer(records, args.min_count, args.max_n, stoplist)
    write_gazetteer(gazetteer, args.out)


def cmd_autolabel(args) -> None:
    _require(args.jobs >= 1, f"--jobs must be >= 1, got {args.jobs}")
    records = read_records(args.records)
    gazetteer = read_gazetteer(args.gazetteer) if args.gazetteer else EMPTY_GAZETTEER
    corpus = autolabel_corpus(
        records,
        gazetteer,
        config=_feature_config(args),
        source_kind=args.kind,
        jobs=args.jobs,
    )
    write_corpus(corpus, args.out)


def cmd_train(args) -> None:
    _require(args.iterations >= 1, f"--iterations must be >= 1, got {args.iterations}")
    corpus = read_corpus(args.corpus, strict=args.strict)
    config = _feature_config(args)
    gazetteers = collect_train_gazetteers(corpus.descriptions)
    seed = args.seed if args.shuffle else None
    iob_model = train_averaged_perceptron(corpus, "iob", args.iterations, seed, config=config)
    domain_model = train_averaged_perceptron(
        corpus, "domain", args.iterations, seed, config=config, gazetteers=gazetteers
    )
    save_model(iob_model, args.iob_model)
    save_model(domain_model, args.domain_model)


def cmd_tag(args) -> None:
    iob_model = load_model(args.iob_model)
    domain_model = load_model(args.domain_model)
    descriptions = []
    if args.records:
        for record in read_records(args.records):
            if record.description.strip():
                descriptions.append(
                    unlabeled_description(record.description, record.id, args.kind)
                )
    else:
        with open(args.input, "r", encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                if line.strip():
                    descriptions.append(
                        unlabeled_description(line.rstrip("\n"), f"text-{i:04d}", args.kind)
                    )
    tagged = [tag_pipeline(d, iob_model, domain_model) for d in descriptions]
    write_corpus(Corpus.from_descriptions(tagged), args.out)


def cmd_xval(args) -> None:
    _require(args.folds >= 1, f"--folds must be >= 1, got {args.folds}")
    _require(0.0 < args.split < 1.0, f"--split must be in (0, 1), got {args.split}")
    _require(args.iterations >= 1, f"--iterations must be >= 1, got {args.iterations}")
    _require(args.n is None or args.n >= 1, f"--n must be >= 1, got {args.n}")
    corpus = read_corpus(args.corpus, strict=args.strict)
    reports = cross_validate(
        corpus,
        n=args.n,
        folds=args.folds,
        split_fraction=args.split,
        n_iter=args.iterations,
        seed=args.seed,
        config=_feature_config(args),
    )
    write_report(reports, args.out, folds=args.folds)
    print(format_report_table(reports))


def cmd_synth(args) -> None:
    _require(args.n_records >= 0, f"--n-records must be >= 0, got {args.n_records}")
    _require(
        0.0 <= args.distractor_rate <= 1.0,
        f"--distractor-rate must be in [0, 1], got {args.distractor_rate}",
    )
    records, gold = generate_synthetic(args.n_records, args.seed, args.distractor_rate)
    write_records(records, args.records_out)
    write_corpus(gold, args.gold_out)
    if args.gazetteer_out:
        write_gazetteer(synthetic_gazetteer(), args.gazetteer_out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vulntag",
        description="Auto-label security descriptions and train/evaluate the two-stage tagger.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
        p.add_argument("--jobs", type=int, default=None, help="max worker processes (default 1)")
        p.add_argument("--config", default=None, help="JSON file with option defaults")

    p = sub.add_parser("build-gazetteer", help="extract frequent per-CWE n-grams from records")
    p.add_argument("--records", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--min-count", dest="min_count", type=int, default=None)
    p.add_argument("--max-n", dest="max_n", type=int, default=None)
    p.add_argument("--stoplist", default=None)
    common(p)
    p.set_defaults(func=cmd_build_gazetteer, required_options=("records", "out"))

    p = sub.add_parser("autolabel", help="annotate record descriptions with IOB entity tags")
    p.add_argument("--records", default=None)
    p.add_argument("--gazetteer", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--kind", default=None, choices=["nvd", "ms-bulletin", "metasploit", "synthetic", "other"])
    p.add_argument("--feature-config", dest="feature_config", default=None)
    common(p)
    p.set_defaults(func=cmd_autolabel, required_options=("records", "out"))

    p = sub.add_parser("train", help="train the IOB and domain models on a labeled corpus")
    p.add_argument("--corpus", default=None)
    p.add_argument("--iob-model", dest="iob_model", default=None)
    p.add_argument("--domain-model", dest="domain_model", default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--shuffle", action="store_true", default=None,
                   help="reshuffle description order each epoch using --seed")
    p.add_argument("--strict", action="store_true", default=None,
                   help="reject corpora with IOB violations instead of repairing")
    p.add_argument("--feature-config", dest="feature_config", default=None)
    common(p)
    p.set_defaults(func=cmd_train, required_options=("corpus", "iob_model", "domain_model"))

    p = sub.add_parser("tag", help="tag raw text or record descriptions with trained models")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--input", help="plain text file, one description per line")
    group.add_argument("--records", help="record file; descriptions are tagged")
    p.add_argument("--iob-model", dest="iob_model", default=None)
    p.add_argument("--domain-model", dest="domain_model", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--kind", default=None, choices=["nvd", "ms-bulletin", "metasploit", "synthetic", "other"])
    common(p)
    p.set_defaults(func=cmd_tag, required_options=("iob_model", "domain_model", "out"))

    p = sub.add_parser("xval", help="random sub-sampling validation over a labeled corpus")
    p.add_argument("--corpus", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--n", type=int, default=None, help="descriptions per fold sample")
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--split", type=float, default=None, help="train fraction (default 0.8)")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--strict", action="store_true", default=None)
    p.add_argument("--feature-config", dest="feature_config", default=None)
    common(p)
    p.set_defaults(func=cmd_xval, required_options=("corpus", "out"))

    p = sub.add_parser("synth", help="generate synthetic records plus a gold corpus")
    p.add_argument("--n-records", dest="n_records", type=int, default=None)
    p.add_argument("--records-out", dest="records_out", default=None)
    p.add_argument("--gold-out", dest="gold_out", default=None)
    p.add_argument("--gazetteer-out", dest="gazetteer_out", default=None,
                   help="also write the generator's relevant-term gazetteer")
    p.add_argument("--distractor-rate", dest="distractor_rate", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_synth, required_options=("n_records", "records_out", "gold_out"))

    return parser


def _apply_config(args: argparse.Namespace) -> None:
    file_values = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise InvalidParameterError("--config file must hold a JSON object")
        unknown = [k for k in file_values if not hasattr(args, k)]
        if unknown:
            raise InvalidParameterError(f"unknown config keys for this subcommand: {unknown}")
    for key, value in file_values.items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    for key, value in _DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    missing = [key for key in getattr(args, "required_options", ()) if getattr(args, key) is None]
    if missing:
        flags = ", ".join("--" + key.replace("_", "-") for key in missing)
        raise InvalidParameterError(f"missing required option(s): {flags}")
    if args.command == "tag" and bool(args.input) == bool(args.records):
        raise InvalidParameterError("tag needs exactly one of --input or --records")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        args.func(args)
    except InvalidParameterError as exc:
        print(f"vulntag: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except FileNotFoundError as exc:
        print(f"vulntag: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except (LineFormatError, ModelFormatError, InvalidInputError) as exc:
        print(f"vulntag: bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    return EXIT_OK


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
