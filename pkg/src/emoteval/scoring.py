"""Severity-weighted emotion-preservation error rate, per segment and per corpus.

A segment's rate is the sum of severity weights over its annotated errors,
divided by the token count (words + punctuation) of its MT output. Rates are
exact rationals end to end; reports render them with 4 fractional digits.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .ingestion import Corpus
from .model import AnnotationPass, DEFAULT_SCHEME, Severity, SeverityScheme, severity_weight
from .render import csv_bytes, dec4, json_bytes
from .tokenization import tokenize_target


class UnscorableSegmentError(ValueError):
    """The segment's MT output has zero tokens, so the rate is undefined (not 0)."""

    def __init__(self, segment_id: str):
        self.segment_id = segment_id
        super().__init__(f"segment {segment_id!r} has an empty-token MT output and cannot be scored")


class MissingPassError(ValueError):
    def __init__(self, segment_ids: Sequence[str]):
        self.segment_ids = list(segment_ids)
        super().__init__(f"no completed pass for segment(s): {', '.join(self.segment_ids)}")


class DuplicatePassError(ValueError):
    def __init__(self, message: str):
        super().__init__(message)


@dataclass(frozen=True)
class SegmentScore:
    segment_id: str
    text_length: int
    n_minor: int
    n_major: int
    n_critical: int
    weighted_error_sum: Fraction
    error_rate: Fraction


@dataclass(frozen=True)
class CorpusScore:
    """Per-segment scores (ordered by segment id) plus micro/macro aggregates.

    Unscorable segments (empty-token MT) are excluded from both aggregates and
    listed separately; aggregates are None when nothing is scorable.
    """

    segment_scores: tuple
    unscorable_ids: tuple
    micro: Optional[Fraction]
    macro: Optional[Fraction]


def score_segment(pass_: AnnotationPass, segment, scheme: SeverityScheme = DEFAULT_SCHEME) -> SegmentScore:
    """Apply the weighted rate to one completed pass over one segment."""
    if not pass_.completed:
        raise ValueError(f"pass {pass_.key!r} is not completed")
    if pass_.segment_id != segment.id:
        raise ValueError(f"pass targets segment {pass_.segment_id!r}, not {segment.id!r}")
    text_length = tokenize_target(segment.mt_text).count.total
    if text_length == 0:
        raise UnscorableSegmentError(segment.id)
    counts = {s: 0 for s in Severity}
    weighted = Fraction(0)
    for error in pass_.errors:
        counts[error.severity] += 1
        weighted += severity_weight(error.severity, scheme)
    return SegmentScore(
        segment_id=segment.id,
        text_length=text_length,
        n_minor=counts[Severity.MINOR],
        n_major=counts[Severity.MAJOR],
        n_critical=counts[Severity.CRITICAL],
        weighted_error_sum=weighted,
        error_rate=weighted / text_length,
    )


def coverage_map(passes: Iterable[AnnotationPass], corpus: Corpus) -> dict:
    """Map each corpus segment to its single completed pass.

    Rejects duplicate (segment, annotator, round) keys, more than one completed
    pass per segment, and segments with no completed pass at all.
    """
    seen_keys = set()
    by_segment = {}
    for p in passes:
        if p.key in seen_keys:
            raise DuplicatePassError(f"duplicate pass for (segment, annotator, round) {p.key!r}")
        seen_keys.add(p.key)
        if not p.completed:
            continue
        if p.segment_id in by_segment:
            raise DuplicatePassError(
                f"multiple completed passes cover segment {p.segment_id!r}; "
                "filter passes to one annotator/round before scoring")
        by_segment[p.segment_id] = p
    missing = [seg.id for seg in corpus.segments if seg.id not in by_segment]
    if missing:
        raise MissingPassError(missing)
    return {seg.id: by_segment[seg.id] for seg in corpus.segments}


def score_corpus(passes: Iterable[AnnotationPass], corpus: Corpus,
                 scheme: SeverityScheme = DEFAULT_SCHEME) -> CorpusScore:
    """Score a whole corpus given exactly one completed pass per segment."""
    covered = coverage_map(passes, corpus)
    scores = []
    unscorable = []
    for seg in corpus.segments:
        try:
            scores.append(score_segment(covered[seg.id], seg, scheme))
        except UnscorableSegmentError:
            unscorable.append(seg.id)
    scores.sort(key=lambda s: s.segment_id)
    unscorable.sort()
    if scores:
        micro = sum((s.weighted_error_sum for s in scores), Fraction(0)) / sum(s.text_length for s in scores)
        macro = sum((s.error_rate for s in scores), Fraction(0)) / len(scores)
    else:
        micro = macro = None
    return CorpusScore(
        segment_scores=tuple(scores),
        unscorable_ids=tuple(unscorable),
        micro=micro,
        macro=macro,
    )


SCORES_CSV_HEADER = ("segment_id", "text_length", "n_minor", "n_major", "n_critical",
                     "weighted_sum", "error_rate")


def scores_csv(corpus_score: CorpusScore) -> bytes:
    """Score export CSV, one row per scorable segment, ordered by segment id."""
    rows = [
        (s.segment_id, s.text_length, s.n_minor, s.n_major, s.n_critical,
         dec4(s.weighted_error_sum), dec4(s.error_rate))
        for s in corpus_score.segment_scores
    ]
    return csv_bytes(SCORES_CSV_HEADER, rows)


def scores_report_obj(corpus_score: CorpusScore) -> dict:
    return {
        "report": "scores",
        "n_segments": len(corpus_score.segment_scores) + len(corpus_score.unscorable_ids),
        "n_scorable": len(corpus_score.segment_scores),
        "micro": None if corpus_score.micro is None else dec4(corpus_score.micro),
        "macro": None if corpus_score.macro is None else dec4(corpus_score.macro),
        "unscorable": list(corpus_score.unscorable_ids),
        "segments": [
            {
                "segment_id": s.segment_id,
                "text_length": s.text_length,
                "n_minor": s.n_minor,
                "n_major": s.n_major,
                "n_critical": s.n_critical,
                "weighted_sum": dec4(s.weighted_error_sum),
                "error_rate": dec4(s.error_rate),
            }
            for s in corpus_score.segment_scores
        ],
    }


def scores_report_bytes(corpus_score: CorpusScore) -> bytes:
    return json_bytes(scores_report_obj(corpus_score))
