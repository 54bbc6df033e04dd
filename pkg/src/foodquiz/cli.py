"""Single entry point: train, compile-quiz, validate-quiz, serve, simulate, eval, loocv.

Exit codes: 0 success, 1 usage, 2 validation failure, 3 I/O. Failures are
reported as one machine-parsable line on stderr: ``error: <kind>: <message>``.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from . import canonical, corpus, features, forest, lda, quizkit, stats
from .engine import POLICIES
from .exceptions import FoodquizError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: usage: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _write(path: Path, obj: dict) -> None:
    path.write_text(canonical.dumps(obj) + "\n", encoding="utf-8")


def _config_fingerprint(args, keys) -> str:
    return canonical.fingerprint({k: getattr(args, k) for k in keys})


_TRAIN_CONFIG_KEYS = (
    "seed",
    "trees",
    "max_depth",
    "min_count",
    "feature_subsample",
    "bootstrap",
    "criterion",
    "normalization",
    "hashtags",
    "lda_topics",
    "lda_alpha",
    "lda_beta",
    "lda_iterations",
)


def _add_train_flags(p: _Parser) -> None:
    p.add_argument("--corpus", required=True, help="corpus.jsonl path")
    p.add_argument("--labels", required=True, help="labels.csv path")
    p.add_argument("--out-dir", default=".", help="directory for artifacts")
    p.add_argument("--seed", type=int, default=0, help="seed for all randomized steps")
    p.add_argument("--trees", type=int, default=7, help="number of trees")
    p.add_argument("--max-depth", type=int, default=3, help="maximum tree depth")
    p.add_argument("--min-count", type=int, default=3, help="minimum global token count")
    p.add_argument(
        "--feature-subsample",
        type=int,
        default=None,
        help="candidate features per split (default ceil(sqrt(n_features)))",
    )
    p.add_argument("--no-bootstrap", dest="bootstrap", action="store_false", help="disable bagging")
    p.add_argument("--criterion", choices=forest.CRITERIA, default=forest.GINI, help="split criterion")
    p.add_argument(
        "--normalization",
        choices=features.NORMALIZATIONS,
        default=features.RELATIVE_FREQUENCY,
        help="raw counts or counts over community token total",
    )
    p.add_argument(
        "--hashtags",
        default=",".join(sorted(corpus.DEFAULT_MEAL_HASHTAGS)),
        help="comma-separated admission hashtags",
    )
    p.add_argument("--lda-topics", type=int, default=0, help="topic features (0 disables LDA)")
    p.add_argument("--lda-alpha", type=float, default=None, help="doc-topic prior (default 50/K)")
    p.add_argument("--lda-beta", type=float, default=0.01, help="topic-token prior")
    p.add_argument("--lda-iterations", type=int, default=500, help="Gibbs sweeps")


def _build_matrix(args):
    labels = corpus.load_labels(args.labels)
    known = set(labels.rates)
    corp = corpus.load_documents(
        args.corpus,
        hashtag_filter=args.hashtags.split(","),
        known_communities=known,
    )
    raw = features.count_features(corp, min_count=args.min_count, normalization=args.normalization)
    if args.lda_topics > 0:
        model = lda.train_lda(
            corp,
            n_topics=args.lda_topics,
            alpha=args.lda_alpha,
            beta=args.lda_beta,
            iterations=args.lda_iterations,
            seed=args.seed,
        )
        raw = features.append_topic_features(
            raw, model.community_topic_matrix(raw.communities), model.top_tokens()
        )
    provenance = {
        "seed": args.seed,
        "config_fingerprint": _config_fingerprint(args, _TRAIN_CONFIG_KEYS),
    }
    space = features.fit_bins(raw, provenance=provenance)
    binned = features.apply_bins(raw, space)
    return labels, corp, space, binned, provenance


def _forest_params(args) -> forest.ForestParams:
    return forest.ForestParams(
        n_trees=args.trees,
        max_depth=args.max_depth,
        feature_subsample=args.feature_subsample,
        bootstrap=args.bootstrap,
        seed=args.seed,
        split_criterion=args.criterion,
    )


def cmd_train(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels, corp, space, binned, provenance = _build_matrix(args)
    params = _forest_params(args)
    model = forest.train_forest(binned, labels, params)

    space.save(out_dir / "featurespace.json")
    obj = model.to_dict()
    obj["provenance"] = provenance
    _write(out_dir / "forest.json", obj)

    result = forest.loocv(binned, labels, params)
    report = result.to_dict()
    report["provenance"] = provenance
    _write(out_dir / "loocv_report.json", report)

    print(f"kept {corp.report.kept} documents, discarded {corp.report.discarded_no_hashtag}")
    print(f"features: {len(space.features)}  communities: {len(binned.communities)}")
    print(f"loocv accuracy: {result.accuracy:.4f}  majority baseline: {result.baseline:.4f}")
    print(f"wrote {out_dir / 'forest.json'}, {out_dir / 'featurespace.json'}")
    return EXIT_OK


def cmd_loocv(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels, _, _, binned, provenance = _build_matrix(args)
    result = forest.loocv(binned, labels, _forest_params(args))
    report = result.to_dict()
    report["provenance"] = provenance
    _write(out_dir / "loocv_report.json", report)
    print(f"loocv accuracy: {result.accuracy:.4f}  majority baseline: {result.baseline:.4f}")
    return EXIT_OK


def cmd_compile_quiz(args) -> int:
    model = forest.Forest.load(args.forest)
    bank = quizkit.TemplateBank.load(args.bank) if args.bank else quizkit.TemplateBank.default()
    overrides = quizkit.load_overrides(args.overrides) if args.overrides else {}
    topic_summaries = None
    if args.featurespace:
        topic_summaries = features.FeatureSpace.load(args.featurespace).topic_top_tokens
    spec, report = quizkit.compile_quiz(
        model, bank, overrides=overrides, topic_summaries=topic_summaries
    )
    coverage = quizkit.validate_quiz(spec, model)
    if not coverage.ok:
        for failure in coverage.failures:
            print(f"error: validation: {failure}", file=sys.stderr)
        return EXIT_VALIDATION

    obj = spec.to_dict()
    obj["provenance"] = {"config_fingerprint": canonical.fingerprint(obj)}
    _write(Path(args.out), obj)
    if args.report:
        _write(Path(args.report), report.to_dict())
    print(
        f"compiled {len(spec.questions)} questions "
        f"({len(report.human_edited)} overridden, {len(report.needs_review)} drafts need review)"
    )
    return EXIT_OK


def cmd_validate_quiz(args) -> int:
    spec = quizkit.QuizSpec.load(args.quiz)
    model = forest.Forest.load(args.forest) if args.forest else None
    coverage = quizkit.validate_quiz(spec, model)
    if coverage.ok:
        print("PASS")
        return EXIT_OK
    for failure in coverage.failures:
        print(f"FAIL: {failure}")
    print(f"error: validation: quiz failed {len(coverage.failures)} check(s)", file=sys.stderr)
    return EXIT_VALIDATION


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    host, _, port = args.bind.partition(":")
    serve(
        ServiceConfig(
            quiz_path=args.quiz,
            data_dir=args.data_dir,
            host=host or "127.0.0.1",
            port=int(port or 8000),
            cutoff=args.cutoff,
            admin_token=os.environ.get("FOODQUIZ_ADMIN_TOKEN"),
            export_salt=os.environ.get("FOODQUIZ_EXPORT_SALT", "dev-salt"),
        )
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .synthetic import simulate_records

    spec = quizkit.QuizSpec.load(args.quiz)
    records = simulate_records(spec, n=args.n, policy=POLICIES[args.policy], seed=args.seed)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        meta = {
            "_meta": {
                "seed": args.seed,
                "config_fingerprint": canonical.fingerprint(
                    {"n": args.n, "policy": args.policy, "seed": args.seed}
                ),
                "quiz_fingerprint": spec.forest_fingerprint,
            }
        }
        fh.write(canonical.dumps(meta) + "\n")
        for r in records:
            fh.write(canonical.dumps(r.to_dict()) + "\n")
    print(f"simulated {len(records)} sessions -> {out}")
    return EXIT_OK


def _load_records_skipping_meta(path) -> list[stats.RespondentRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if "_meta" in obj:
                continue
            records.append(stats.RespondentRecord.from_dict(obj))
    return records


def cmd_eval(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = _load_records_skipping_meta(args.records)
    provenance = {"config_fingerprint": canonical.fingerprint({"cutoff": args.cutoff})}

    report = stats.accuracy_report(records, cutoff=args.cutoff)
    obj = report.to_dict()
    obj["provenance"] = provenance
    _write(out_dir / "accuracy.json", obj)

    engagement = stats.engagement_stats(records, cutoff=args.cutoff).to_dict()
    engagement["provenance"] = provenance
    _write(out_dir / "engagement.json", engagement)

    stats.write_demographics_csvs(stats.demographics_summary(records), out_dir)

    print(f"records: {len(records)}  scored: {report.n_scored}  missing bmi: {report.n_missing}")
    print(f"overall accuracy: {report.overall:.4f}")
    for c in report.classes:
        acc = "n/a" if c.accuracy is None else f"{c.accuracy:.4f}"
        print(f"  {c.name}: proportion {c.proportion:.4f}, accuracy {acc}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="foodquiz", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the forest and write artifacts")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("loocv", help="leave-one-out cross-validation only")
    _add_train_flags(p)
    p.set_defaults(func=cmd_loocv)

    p = sub.add_parser("compile-quiz", help="compile a forest into a quiz spec")
    p.add_argument("--forest", required=True, help="forest.json path")
    p.add_argument("--bank", default=None, help="templates.json (default: packaged bank)")
    p.add_argument("--overrides", default=None, help="human edits JSON")
    p.add_argument("--featurespace", default=None, help="featurespace.json for topic summaries")
    p.add_argument("--out", required=True, help="quiz.json output path")
    p.add_argument("--report", default=None, help="write the draft report here")
    p.set_defaults(func=cmd_compile_quiz)

    p = sub.add_parser("validate-quiz", help="check quiz/forest coverage")
    p.add_argument("--quiz", required=True, help="quiz.json path")
    p.add_argument("--forest", default=None, help="forest.json to check fingerprint against")
    p.set_defaults(func=cmd_validate_quiz)

    p = sub.add_parser("serve", help="run the HTTP backend")
    p.add_argument("--bind", default="127.0.0.1:8000", help="host:port")
    p.add_argument("--quiz", required=True, help="quiz.json path")
    p.add_argument("--data-dir", required=True, help="event log directory")
    p.add_argument("--cutoff", type=float, default=stats.DEFAULT_CUTOFF, help="BMI cutoff")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("simulate", help="simulate completed sessions into records.jsonl")
    p.add_argument("--quiz", required=True, help="quiz.json path")
    p.add_argument("--n", type=int, required=True, help="number of sessions")
    p.add_argument("--policy", choices=sorted(POLICIES), default="uniform", help="answer policy")
    p.add_argument("--seed", type=int, default=0, help="simulation seed")
    p.add_argument("--out", required=True, help="records.jsonl output path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="accuracy/engagement/demographics reports")
    p.add_argument("--records", required=True, help="records.jsonl path")
    p.add_argument("--cutoff", type=float, default=stats.DEFAULT_CUTOFF, help="BMI cutoff")
    p.add_argument("--out-dir", default=".", help="directory for reports")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except FoodquizError as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
