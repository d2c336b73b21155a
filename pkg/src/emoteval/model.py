"""Domain model shared by every other module.

Character offsets everywhere count Unicode scalar values (what Python strings
index), never bytes and never UTF-16 units, so span semantics are identical on
the wire, in the service, and in the browser, and CJK/emoji text is safe.
"""

import datetime as dt
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence


class _ParsableEnum(str, Enum):
    """String enum with a closed-vocabulary parser giving a useful error."""

    @classmethod
    def parse(cls, text):
        try:
            return cls(text)
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(
                f"unknown {cls.__name__} {text!r} (expected one of: {valid})"
            ) from None


class EmotionLabel(_ParsableEnum):
    """Emotion category of a source post. Exactly these six; nothing else parses."""

    ANGER = "anger"
    FEAR = "fear"
    JOY = "joy"
    SADNESS = "sadness"
    SURPRISE = "surprise"
    NEUTRAL = "neutral"


class ErrorType(_ParsableEnum):
    """Accuracy error categories restricted to errors affecting emotion."""

    ADDITION = "addition"
    MISTRANSLATION = "mistranslation"
    OMISSION = "omission"
    UNTRANSLATED = "untranslated"
    SOURCE_ERROR = "source_error"


class Severity(_ParsableEnum):
    """How strongly an error changes the source emotion; minor < major < critical."""

    MINOR = "minor"
    MAJOR = "major"
    CRITICAL = "critical"

    @property
    def rank(self) -> int:
        return _SEVERITY_RANK[self]

    # str would order these alphabetically; order them semantically instead.
    def __lt__(self, other):
        return self.rank < _rank_of(other)

    def __le__(self, other):
        return self.rank <= _rank_of(other)

    def __gt__(self, other):
        return self.rank > _rank_of(other)

    def __ge__(self, other):
        return self.rank >= _rank_of(other)


SEVERITY_ORDER = (Severity.MINOR, Severity.MAJOR, Severity.CRITICAL)
_SEVERITY_RANK = {s: i for i, s in enumerate(SEVERITY_ORDER)}


def _rank_of(other) -> int:
    if not isinstance(other, Severity):
        raise TypeError(f"cannot order Severity against {type(other).__name__}")
    return other.rank


# Annotation-guideline sentences shown to annotators (e.g. as UI tooltips).
SEVERITY_GUIDELINES: Mapping[Severity, str] = MappingProxyType({
    Severity.CRITICAL: (
        "a critical error leads to an absolute change of emotion into a very "
        "different or even opposite emotion category"
    ),
    Severity.MAJOR: (
        "a major error pertains to a change of emotion into one that is not very "
        "different from the original emotion or one that is somewhere between the "
        "original emotion category and another different category"
    ),
    Severity.MINOR: (
        "a minor error results in a slight change of emotion with uncertainties "
        "about the MT emotion label but certainties about the slight difference "
        "between the emotions of the source and the MT text"
    ),
})


class CauseTag(_ParsableEnum):
    """Optional controlled vocabulary for the linguistic cause of an error.

    Never affects scoring; purely post-hoc analysis metadata.
    """

    EMOTION_CARRYING_WORD = "emotion_carrying_word"
    HOMOPHONE_SLANG = "homophone_slang"
    POLYSEMY = "polysemy"
    ABBREVIATION = "abbreviation"
    NEGATION = "negation"
    SUBJECT_OBJECT = "subject_object"
    SUBJUNCTIVE = "subjunctive"
    PUNCTUATION = "punctuation"
    HALLUCINATION = "hallucination"
    OTHER = "other"


class Side(_ParsableEnum):
    SOURCE = "source"
    TARGET = "target"


@dataclass(frozen=True)
class SeverityScheme:
    """Severity -> weight mapping used by the weighted error rate.

    The default is critical=10, major=5, minor=1. Weights are configurable but
    must satisfy weight(critical) >= weight(major) >= weight(minor) > 0.
    """

    weights: Mapping[Severity, Fraction]

    def __post_init__(self):
        coerced = {}
        for severity in SEVERITY_ORDER:
            if severity not in self.weights:
                raise ValueError(f"scheme is missing a weight for {severity.value}")
            coerced[severity] = Fraction(self.weights[severity])
        object.__setattr__(self, "weights", MappingProxyType(coerced))
        minor, major, critical = (coerced[s] for s in SEVERITY_ORDER)
        if not (critical >= major >= minor > 0):
            raise ValueError(
                "weights must satisfy critical >= major >= minor > 0, got "
                f"critical={critical}, major={major}, minor={minor}"
            )

    @classmethod
    def from_weights(cls, critical, major, minor) -> "SeverityScheme":
        return cls({
            Severity.CRITICAL: Fraction(critical),
            Severity.MAJOR: Fraction(major),
            Severity.MINOR: Fraction(minor),
        })

    def weight(self, severity: Severity) -> Fraction:
        return self.weights[severity]


DEFAULT_SCHEME = SeverityScheme.from_weights(10, 5, 1)


def severity_weight(severity: Severity, scheme: SeverityScheme = DEFAULT_SCHEME) -> Fraction:
    """Weight contributed by one error of the given severity under the scheme."""
    return scheme.weight(severity)


@dataclass(frozen=True)
class Segment:
    """One corpus entry: source microblog text, its emotion label, MT output."""

    id: str
    source_text: str
    emotion: EmotionLabel
    mt_text: str = ""

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("segment id must be a non-empty string")
        if not isinstance(self.source_text, str) or not self.source_text:
            raise ValueError(f"segment {self.id!r}: source_text must be non-empty")
        if not isinstance(self.emotion, EmotionLabel):
            raise ValueError(f"segment {self.id!r}: emotion must be an EmotionLabel")
        if not isinstance(self.mt_text, str):
            raise ValueError(f"segment {self.id!r}: mt_text must be a string")

    def text_for(self, side: Side) -> str:
        return self.source_text if side is Side.SOURCE else self.mt_text


@dataclass(frozen=True)
class Span:
    """Half-open character range [start, end) into one side of a segment.

    Offsets are Unicode scalar values, 0-based, end-exclusive. The constructor
    only checks shape; emptiness and bounds against a concrete segment are the
    job of validate_annotation, which is the gate every ingress goes through.
    """

    side: Side
    start: int
    end: int

    def __post_init__(self):
        if not isinstance(self.side, Side):
            raise ValueError("span side must be a Side")
        if not isinstance(self.start, int) or not isinstance(self.end, int):
            raise ValueError("span offsets must be integers")
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"span offsets must satisfy 0 <= start <= end, got [{self.start}, {self.end})")

    def extract(self, segment: Segment) -> str:
        return segment.text_for(self.side)[self.start:self.end]


@dataclass(frozen=True)
class ErrorAnnotation:
    """One annotated translation error: where (spans), what (type), how bad (severity)."""

    segment_id: str
    annotator_id: str
    round: int
    error_type: ErrorType
    severity: Severity
    spans: tuple
    cause_tags: frozenset = frozenset()
    note: str = ""
    created_at: Optional[dt.datetime] = None

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))
        object.__setattr__(self, "cause_tags", frozenset(self.cause_tags))
        if not isinstance(self.round, int) or self.round < 1:
            raise ValueError(f"round must be an integer >= 1, got {self.round!r}")
        for span in self.spans:
            if not isinstance(span, Span):
                raise ValueError("spans must contain Span values")
        for tag in self.cause_tags:
            if not isinstance(tag, CauseTag):
                raise ValueError("cause_tags must contain CauseTag values")

    @property
    def key(self):
        return (self.segment_id, self.annotator_id, self.round)


@dataclass(frozen=True)
class AnnotationPass:
    """One annotator's complete judgment of one segment in one round.

    Zero errors on a completed pass means "emotion preserved", which is distinct
    from "not yet annotated" (no pass at all). Completed passes are immutable;
    revision replaces the whole pass.
    """

    segment_id: str
    annotator_id: str
    round: int
    errors: tuple = ()
    completed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "errors", tuple(self.errors))
        if not isinstance(self.round, int) or self.round < 1:
            raise ValueError(f"round must be an integer >= 1, got {self.round!r}")
        for error in self.errors:
            if error.key != self.key:
                raise ValueError(
                    f"error key {error.key} does not match pass key {self.key}"
                )

    @property
    def key(self):
        return (self.segment_id, self.annotator_id, self.round)

    @property
    def has_errors(self) -> bool:
        return len(self.errors) > 0


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str

    def __str__(self):
        return self.message


def validate_annotation(annotation: ErrorAnnotation, segment: Segment) -> list:
    """Check one error annotation against its segment.

    Returns a list of ValidationIssue, empty iff the annotation is acceptable:
    segment ids match, the span list is non-empty, and every span is a
    non-empty in-bounds range for its side of the segment.
    """
    issues = []
    if annotation.segment_id != segment.id:
        issues.append(ValidationIssue(
            "id_mismatch",
            f"annotation targets segment {annotation.segment_id!r} but was "
            f"validated against segment {segment.id!r}",
        ))
        return issues
    if not annotation.spans:
        issues.append(ValidationIssue("empty_spans", f"segment {segment.id!r}: annotation has no spans"))
    for span in annotation.spans:
        if span.start == span.end:
            issues.append(ValidationIssue(
                "empty_span",
                f"segment {segment.id!r}: empty span [{span.start}, {span.end}) on {span.side.value}",
            ))
            continue
        text = segment.text_for(span.side)
        if span.end > len(text):
            issues.append(ValidationIssue(
                "span_out_of_bounds",
                f"segment {segment.id!r}: span [{span.start}, {span.end}) exceeds "
                f"{span.side.value} length {len(text)}",
            ))
    return issues


def validate_pass(pass_: AnnotationPass, segment: Segment) -> list:
    """Validate a whole pass: identity plus every contained error annotation."""
    issues = []
    if pass_.segment_id != segment.id:
        issues.append(ValidationIssue(
            "id_mismatch",
            f"pass targets segment {pass_.segment_id!r} but was validated "
            f"against segment {segment.id!r}",
        ))
        return issues
    for i, error in enumerate(pass_.errors):
        for issue in validate_annotation(error, segment):
            issues.append(ValidationIssue(issue.code, f"error {i}: {issue.message}"))
    return issues


def filter_passes(
    passes: Iterable[AnnotationPass],
    annotator_id: Optional[str] = None,
    round: Optional[int] = None,
    segment_ids: Optional[Sequence[str]] = None,
) -> list:
    """Select passes by annotator, round and/or segment-id set, preserving order."""
    wanted = None if segment_ids is None else set(segment_ids)
    out = []
    for p in passes:
        if annotator_id is not None and p.annotator_id != annotator_id:
            continue
        if round is not None and p.round != round:
            continue
        if wanted is not None and p.segment_id not in wanted:
            continue
        out.append(p)
    return out
