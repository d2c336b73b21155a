"""Batch command-line pipeline and service launcher.

Grammar: emoteval <ingest|sample|score|agreement|stats|freq|export|serve> [flags].
File flags accept '-' for stdin/stdout. Randomized commands require an explicit
--seed; identical invocations produce byte-identical outputs. Usage errors exit
2, data errors exit 1.
"""

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import agreement as agreement_mod
from . import analytics, ingestion, sampling, scoring, service
from .model import EmotionLabel, SeverityScheme, Side, filter_passes
from .render import csv_bytes, dec4


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _write(path: str, data: bytes):
    if path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(path).write_bytes(data)


def _load_corpus(path: str, format: str = "jsonl") -> ingestion.Corpus:
    return ingestion.parse_corpus(_read(path), format=format)


def _load_passes(path: str, corpus: ingestion.Corpus) -> list:
    return ingestion.parse_annotations(_read(path), corpus)


def _parse_exclude(values) -> frozenset:
    labels = set()
    for value in values or []:
        for part in value.split(","):
            part = part.strip()
            if part:
                labels.add(EmotionLabel.parse(part))
    return frozenset(labels)


def _parse_weights(spec: str) -> SeverityScheme:
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) != 3:
        raise ValueError("--weights must be three comma-separated values: critical,major,minor")
    return SeverityScheme.from_weights(Fraction(parts[0]), Fraction(parts[1]), Fraction(parts[2]))


def _selected_passes(passes, args):
    ids = None
    if getattr(args, "ids", None):
        ids = [line.strip() for line in _read(args.ids).decode("utf-8").split("\n") if line.strip()]
    return filter_passes(passes, annotator_id=getattr(args, "annotator", None),
                         round=getattr(args, "round", None), segment_ids=ids)


def cmd_ingest(args) -> int:
    corpus = ingestion.parse_corpus(
        _read(args.input), format=args.format, name=args.name, provenance=args.provenance)
    _write(args.output, ingestion.export_corpus(corpus))
    labels = {seg.emotion for seg in corpus.segments}
    print(f"{len(corpus)} segments, {len(labels)} labels")
    return 0


def cmd_sample(args) -> int:
    corpus = _load_corpus(args.corpus)
    plan = sampling.SamplePlan(
        seed=args.seed, fraction=Fraction(args.fraction), exclude_labels=_parse_exclude(args.exclude))
    sampled = sampling.stratified_sample(corpus, plan)
    _write(args.output, ingestion.export_corpus(sampled))
    pool = sampling.filter_labels(corpus, plan.exclude_labels)
    print(f"sampled {len(sampled)} of {len(pool)} segments (fraction {plan.fraction})")
    if args.report:
        report = sampling.distribution_report(pool, sampled)
        rows = [
            (label.value, dec4(report.original[label]), dec4(report.sampled[label]),
             dec4(abs(report.original[label] - report.sampled[label])))
            for label in EmotionLabel
        ]
        rows.append(("max_deviation", "", "", dec4(report.max_deviation)))
        _write(args.report, csv_bytes(("label", "original", "sampled", "abs_deviation"), rows))
    if args.inter_out or args.intra_out:
        plan2 = sampling.AgreementPlan(
            seed=args.seed, inter_fraction=Fraction(args.inter_fraction),
            intra_count=args.intra_count)
        subsets = sampling.carve_agreement_subsets(sampled, plan2)
        order = {sid: i for i, sid in enumerate(sampled.ids())}
        if args.inter_out:
            ids = sorted(subsets.inter_ids, key=order.get)
            _write(args.inter_out, ("\n".join(ids) + "\n" if ids else "").encode("utf-8"))
            print(f"inter subset: {len(ids)} segments")
        if args.intra_out:
            ids = sorted(subsets.intra_ids, key=order.get)
            _write(args.intra_out, ("\n".join(ids) + "\n" if ids else "").encode("utf-8"))
            print(f"intra subset: {len(ids)} segments")
    return 0


def cmd_score(args) -> int:
    corpus = _load_corpus(args.corpus)
    passes = _selected_passes(_load_passes(args.annotations, corpus), args)
    scheme = _parse_weights(args.weights)
    result = scoring.score_corpus(passes, corpus, scheme)
    _write(args.output, scoring.scores_csv(result))
    if args.json:
        _write(args.json, scoring.scores_report_bytes(result))
    micro = "n/a" if result.micro is None else dec4(result.micro)
    macro = "n/a" if result.macro is None else dec4(result.macro)
    print(f"scored {len(result.segment_scores)} segments (micro {micro}, macro {macro}); "
          f"{len(result.unscorable_ids)} unscorable")
    return 0


def cmd_agreement(args) -> int:
    corpus = _load_corpus(args.corpus)
    all_a = _load_passes(args.a, corpus)
    all_b = _load_passes(args.b, corpus)
    ids = None
    if args.ids:
        ids = [line.strip() for line in _read(args.ids).decode("utf-8").split("\n") if line.strip()]
    passes_a = filter_passes(all_a, annotator_id=args.annotator_a, round=args.round_a, segment_ids=ids)
    passes_b = filter_passes(all_b, annotator_id=args.annotator_b, round=args.round_b, segment_ids=ids)
    report = agreement_mod.agreement_report(passes_a, passes_b, mode=args.mode, segment_ids=ids)
    _write(args.output, agreement_mod.agreement_csv(report))
    if args.json:
        _write(args.json, agreement_mod.agreement_report_bytes(report))
    kappas = "/".join(dec4(report.task_agreement(t).kappa) for t in agreement_mod.TASKS)
    print(f"mode {report.mode}: kappa existence/type/severity = {kappas} over {report.n_items} items")
    return 0


def cmd_stats(args) -> int:
    corpus = _load_corpus(args.corpus)
    passes = _selected_passes(_load_passes(args.annotations, corpus), args)
    bundle = analytics.compute_stats(passes, corpus)
    if args.outdir:
        outdir = Path(args.outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, data in analytics.emit_plot_data(bundle, format="csv").items():
            (outdir / name).write_bytes(data)
    if args.json:
        _write(args.json, analytics.stats_report_bytes(bundle))
    print(f"{bundle.n_segments} segments, {bundle.n_errors} errors, "
          f"{bundle.n_erroneous_segments} erroneous segments")
    return 0


def cmd_freq(args) -> int:
    corpus = _load_corpus(args.corpus)
    passes = _selected_passes(_load_passes(args.annotations, corpus), args)
    entries = analytics.span_frequency(passes, corpus, Side.parse(args.side), top_k=args.top_k)
    rows = [
        (e.side.value, e.span_text, e.occurrence_count, e.entry_count, dec4(e.entry_percentage))
        for e in entries
    ]
    _write(args.output, csv_bytes(
        ("side", "span_text", "occurrence_count", "entry_count", "entry_percentage"), rows))
    print(f"{len(entries)} distinct spans ({args.side})")
    return 0


def cmd_export(args) -> int:
    if args.kind == "corpus":
        corpus = ingestion.parse_corpus(_read(args.input), format=args.from_format)
        _write(args.output, ingestion.export_corpus(corpus, format=args.to_format))
        print(f"wrote {len(corpus)} segments")
        return 0
    if not args.corpus:
        raise ValueError("--corpus is required when exporting annotations")
    corpus = _load_corpus(args.corpus)
    passes = ingestion.parse_annotations(_read(args.input), corpus)
    _write(args.output, ingestion.export_annotations(passes))
    print(f"wrote {len(passes)} passes")
    return 0


def cmd_serve(args) -> int:
    service.serve(addr=args.addr, data_dir=args.data, token=args.token,
                  round2_delay=args.round2_delay)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emoteval",
        description="Emotion-preservation MT quality workbench: sampling, scoring, "
                    "agreement, error statistics, and the annotation service.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus file and write canonical JSONL")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--name", default="corpus")
    p.add_argument("--provenance", default="")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("sample", help="stratified sample preserving label distribution")
    p.add_argument("--corpus", required=True)
    p.add_argument("--fraction", required=True, help="sample fraction, e.g. 0.2 or 1/5")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--exclude", action="append", help="label(s) to drop first, repeatable or comma-separated")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--report", help="write a label-distribution comparison CSV here")
    p.add_argument("--inter-out", help="write double-annotation subset ids here")
    p.add_argument("--intra-out", help="write repeat-annotation subset ids here")
    p.add_argument("--inter-fraction", default="0.1")
    p.add_argument("--intra-count", type=int, default=100)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("score", help="weighted error rates per segment and corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--weights", default="10,5,1", help="critical,major,minor weights")
    p.add_argument("--annotator", help="restrict to one annotator's passes")
    p.add_argument("--round", type=int, help="restrict to one round")
    p.add_argument("--output", "-o", required=True, help="scores CSV")
    p.add_argument("--json", help="also write the JSON report here")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("agreement", help="Cohen's kappa between two pass sets")
    p.add_argument("--a", required=True, help="annotation JSONL for rater A")
    p.add_argument("--b", required=True, help="annotation JSONL for rater B")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotator-a")
    p.add_argument("--round-a", type=int)
    p.add_argument("--annotator-b")
    p.add_argument("--round-b", type=int)
    p.add_argument("--ids", help="file of segment ids (one per line) to restrict to")
    p.add_argument("--mode", choices=("inter", "intra"), default="inter")
    p.add_argument("--output", "-o", required=True, help="agreement CSV")
    p.add_argument("--json", help="also write the JSON report here")
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("stats", help="error-statistics tables (figure analogues)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--annotator")
    p.add_argument("--round", type=int)
    p.add_argument("--outdir", help="directory for the per-figure CSV files")
    p.add_argument("--json", help="write the single JSON stats document here")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("freq", help="annotated span frequency ranking")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--annotator")
    p.add_argument("--round", type=int)
    p.add_argument("--side", choices=("source", "target"), required=True)
    p.add_argument("--top-k", type=int)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_freq)

    p = sub.add_parser("export", help="re-serialize corpora/annotations canonically")
    p.add_argument("--kind", choices=("corpus", "annotations"), required=True)
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--from", dest="from_format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--to", dest="to_format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--corpus", help="companion corpus (annotations only)")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--addr", help=f"host:port (default env {service.ENV_ADDR} or {service.DEFAULT_ADDR})")
    p.add_argument("--data", help=f"data directory (default env {service.ENV_DATA})")
    p.add_argument("--token", help="shared bearer token; unset disables auth")
    p.add_argument("--round2-delay", type=float, default=None,
                   help="seconds before a segment reopens in round 2")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ingestion.IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, scoring.MissingPassError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
