"""emoteval: quality-assessment workbench for emotion preservation in MT output."""

__version__ = "0.1.0"

from .model import (
    AnnotationPass,
    CauseTag,
    DEFAULT_SCHEME,
    EmotionLabel,
    ErrorAnnotation,
    ErrorType,
    Segment,
    Severity,
    SeverityScheme,
    Side,
    Span,
    severity_weight,
    validate_annotation,
)

__all__ = [
    "AnnotationPass",
    "CauseTag",
    "DEFAULT_SCHEME",
    "EmotionLabel",
    "ErrorAnnotation",
    "ErrorType",
    "Segment",
    "Severity",
    "SeverityScheme",
    "Side",
    "Span",
    "severity_weight",
    "validate_annotation",
    "__version__",
]
