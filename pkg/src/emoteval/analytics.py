"""Error statistics over a fully annotated evaluation set.

Produces the figure-analogue tables (segment severity distribution, error type
by severity, type by emotion, error proportion per emotion, severity by
emotion, severity by type) and the annotated-span frequency rankings. All
normalizations are per group (each emotion category or error type sums to 1);
groups with an empty denominator render as zeros and are flagged.
"""

import unicodedata
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .agreement import NONE_LABEL, SEVERITY_AXIS, derive_labels
from .ingestion import Corpus
from .model import EmotionLabel, ErrorType, SEVERITY_ORDER, Severity, Side
from .render import csv_bytes, dec4, json_bytes
from .scoring import coverage_map

STATS_FILES = (
    "fig2_severity.csv",
    "fig3_type_severity.csv",
    "fig3_type_emotion.csv",
    "fig4_emotion_errors.csv",
    "fig4_severity_emotion.csv",
    "fig5_severity_type.csv",
    "tab34_span_freq.csv",
)


@dataclass(frozen=True)
class SpanFrequencyEntry:
    """One distinct annotated span text and how often it was annotated."""

    span_text: str
    side: Side
    occurrence_count: int
    entry_count: int            # distinct erroneous segments containing it
    entry_percentage: Fraction  # entry_count / total erroneous segments


@dataclass(frozen=True)
class StatsBundle:
    n_segments: int
    n_errors: int
    n_erroneous_segments: int
    severity_distribution: Mapping[str, Fraction]       # none/minor/major/critical -> share of segments
    type_by_severity: Mapping[ErrorType, Mapping[Severity, int]]
    type_by_emotion_norm: Mapping[ErrorType, Mapping[EmotionLabel, Fraction]]
    errors_per_emotion: Mapping[EmotionLabel, Fraction]  # erroneous segments / segments, per label
    severity_by_emotion_norm: Mapping[str, Mapping[EmotionLabel, Fraction]]
    severity_by_type_norm: Mapping[Severity, Mapping[ErrorType, Fraction]]
    span_frequency_source: tuple
    span_frequency_target: tuple
    empty_groups: tuple  # normalization groups that had a zero denominator


def span_frequency(passes, corpus: Corpus, side: Side, top_k: Optional[int] = None) -> list:
    """Rank annotated span texts on one side by occurrence.

    Span text is the exact substring at the recorded offsets, NFC-normalized
    and whitespace-trimmed; grouping is exact-match. Ranking: occurrence count
    descending, then entry count descending, then lexicographic. Spans that
    trim to the empty string are skipped.
    """
    occurrences = Counter()
    entries = {}
    erroneous_segments = set()
    for p in passes:
        if not p.completed:
            continue
        if p.errors:
            erroneous_segments.add(p.segment_id)
        segment = corpus.segment(p.segment_id)
        for error in p.errors:
            for span in error.spans:
                if span.side != side:
                    continue
                text = unicodedata.normalize("NFC", span.extract(segment)).strip()
                if not text:
                    continue
                occurrences[text] += 1
                entries.setdefault(text, set()).add(p.segment_id)
    total_erroneous = len(erroneous_segments)
    ranked = sorted(
        occurrences,
        key=lambda t: (-occurrences[t], -len(entries[t]), t),
    )
    if top_k is not None:
        ranked = ranked[:top_k]
    return [
        SpanFrequencyEntry(
            span_text=text,
            side=side,
            occurrence_count=occurrences[text],
            entry_count=len(entries[text]),
            entry_percentage=Fraction(len(entries[text]), total_erroneous),
        )
        for text in ranked
    ]


def _normalize_columns(counts, row_axis, col_axis, group_prefix, empty_groups):
    """Per-column normalization: each col_axis group sums to 1, or all zeros (flagged)."""
    totals = {col: sum(counts[(row, col)] for row in row_axis) for col in col_axis}
    norm = {}
    for row in row_axis:
        norm[row] = {}
        for col in col_axis:
            if totals[col] == 0:
                norm[row][col] = Fraction(0)
            else:
                norm[row][col] = Fraction(counts[(row, col)], totals[col])
    for col in col_axis:
        if totals[col] == 0:
            empty_groups.append(f"{group_prefix}:{col.value if hasattr(col, 'value') else col}")
    return norm


def compute_stats(passes, corpus: Corpus) -> StatsBundle:
    """Compute the full statistics bundle from one completed pass per segment."""
    if not corpus.segments:
        raise ValueError("cannot compute statistics over an empty corpus")
    covered = coverage_map(passes, corpus)
    derived = {sid: derive_labels(p) for sid, p in covered.items()}

    n_segments = len(corpus.segments)
    severity_counts = Counter()
    seg_sev_by_emotion = Counter()   # (severity label incl none, emotion) over segments
    erroneous_by_emotion = Counter()
    segments_by_emotion = Counter()
    type_sev = Counter()             # (type, severity) over errors
    type_emotion = Counter()         # (type, emotion) over errors
    n_errors = 0
    n_erroneous = 0

    for seg in corpus.segments:
        labels = derived[seg.id]
        sev_label = NONE_LABEL if labels.severity_label is None else labels.severity_label.value
        severity_counts[sev_label] += 1
        segments_by_emotion[seg.emotion] += 1
        seg_sev_by_emotion[(sev_label, seg.emotion)] += 1
        if labels.existence == "error":
            n_erroneous += 1
            erroneous_by_emotion[seg.emotion] += 1
        for error in covered[seg.id].errors:
            n_errors += 1
            type_sev[(error.error_type, error.severity)] += 1
            type_emotion[(error.error_type, seg.emotion)] += 1

    empty_groups = []

    severity_distribution = {
        label: Fraction(severity_counts.get(label, 0), n_segments) for label in SEVERITY_AXIS
    }

    type_by_severity = {
        t: {s: type_sev.get((t, s), 0) for s in SEVERITY_ORDER} for t in ErrorType
    }

    type_by_emotion_norm = _normalize_columns(
        {(t, e): type_emotion.get((t, e), 0) for t in ErrorType for e in EmotionLabel},
        tuple(ErrorType), tuple(EmotionLabel), "emotion_errors", empty_groups)

    errors_per_emotion = {}
    for label in EmotionLabel:
        total = segments_by_emotion.get(label, 0)
        if total == 0:
            errors_per_emotion[label] = Fraction(0)
            empty_groups.append(f"emotion_segments:{label.value}")
        else:
            errors_per_emotion[label] = Fraction(erroneous_by_emotion.get(label, 0), total)

    severity_by_emotion_norm = _normalize_columns(
        {(s, e): seg_sev_by_emotion.get((s, e), 0) for s in SEVERITY_AXIS for e in EmotionLabel},
        SEVERITY_AXIS, tuple(EmotionLabel), "emotion_segments", empty_groups)

    severity_by_type_norm = _normalize_columns(
        {(s, t): type_sev.get((t, s), 0) for s in SEVERITY_ORDER for t in ErrorType},
        SEVERITY_ORDER, tuple(ErrorType), "type_errors", empty_groups)

    pass_list = list(covered.values())
    return StatsBundle(
        n_segments=n_segments,
        n_errors=n_errors,
        n_erroneous_segments=n_erroneous,
        severity_distribution=severity_distribution,
        type_by_severity=type_by_severity,
        type_by_emotion_norm=type_by_emotion_norm,
        errors_per_emotion=errors_per_emotion,
        severity_by_emotion_norm=severity_by_emotion_norm,
        severity_by_type_norm=severity_by_type_norm,
        span_frequency_source=tuple(span_frequency(pass_list, corpus, Side.SOURCE)),
        span_frequency_target=tuple(span_frequency(pass_list, corpus, Side.TARGET)),
        empty_groups=tuple(sorted(set(empty_groups))),
    )


def _emotion_values():
    return [e.value for e in EmotionLabel]


def _stats_tables(bundle: StatsBundle) -> dict:
    """All figure-analogue tables as (header, rows) pairs, in declared file order."""
    tables = {}

    tables["fig2_severity.csv"] = (
        ("severity", "segment_count", "proportion"),
        [
            (label,
             int(bundle.severity_distribution[label] * bundle.n_segments),
             dec4(bundle.severity_distribution[label]))
            for label in SEVERITY_AXIS
        ],
    )

    tables["fig3_type_severity.csv"] = (
        ("error_type", "minor", "major", "critical"),
        [
            (t.value, *(bundle.type_by_severity[t][s] for s in SEVERITY_ORDER))
            for t in ErrorType
        ],
    )

    tables["fig3_type_emotion.csv"] = (
        ("error_type", *_emotion_values()),
        [
            (t.value, *(dec4(bundle.type_by_emotion_norm[t][e]) for e in EmotionLabel))
            for t in ErrorType
        ],
    )

    tables["fig4_emotion_errors.csv"] = (
        ("emotion", "error_proportion"),
        [(e.value, dec4(bundle.errors_per_emotion[e])) for e in EmotionLabel],
    )

    tables["fig4_severity_emotion.csv"] = (
        ("severity", *_emotion_values()),
        [
            (label, *(dec4(bundle.severity_by_emotion_norm[label][e]) for e in EmotionLabel))
            for label in SEVERITY_AXIS
        ],
    )

    tables["fig5_severity_type.csv"] = (
        ("severity", *(t.value for t in ErrorType)),
        [
            (s.value, *(dec4(bundle.severity_by_type_norm[s][t]) for t in ErrorType))
            for s in SEVERITY_ORDER
        ],
    )

    span_rows = []
    for entries in (bundle.span_frequency_source, bundle.span_frequency_target):
        for e in entries:
            span_rows.append((e.side.value, e.span_text, e.occurrence_count,
                              e.entry_count, dec4(e.entry_percentage)))
    tables["tab34_span_freq.csv"] = (
        ("side", "span_text", "occurrence_count", "entry_count", "entry_percentage"),
        span_rows,
    )
    return tables


def emit_plot_data(bundle: StatsBundle, format: str = "csv") -> dict:
    """Deterministic plot-data bytes: one CSV per figure analogue, or one JSON document."""
    tables = _stats_tables(bundle)
    if format == "csv":
        return {name: csv_bytes(header, rows) for name, (header, rows) in tables.items()}
    if format == "json":
        doc = {
            "report": "stats",
            "n_segments": bundle.n_segments,
            "n_errors": bundle.n_errors,
            "n_erroneous_segments": bundle.n_erroneous_segments,
            "empty_groups": list(bundle.empty_groups),
        }
        for name, (header, rows) in tables.items():
            key = name.removesuffix(".csv")
            doc[key] = [dict(zip(header, row)) for row in rows]
        return {"stats.json": json_bytes(doc)}
    raise ValueError(f"unknown stats format {format!r}")


def stats_report_bytes(bundle: StatsBundle) -> bytes:
    return emit_plot_data(bundle, format="json")["stats.json"]
