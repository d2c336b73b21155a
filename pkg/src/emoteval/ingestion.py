"""Corpus and annotation file I/O, plus the pluggable translation provider.

JSONL is the canonical format. One corpus segment per line with keys in this
order: id, source, emotion, mt. One annotation pass per line with keys
segment_id, annotator_id, round, completed, errors; each error carries type,
severity, spans (side/start/end), cause_tags, note. CSV is a convenience
corpus importer/exporter (UTF-8, header row, RFC-4180 quoting). Exports are
byte-deterministic; parse(export(x)) == x.
"""

import csv
import dataclasses
import datetime as dt
import io
import json
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional, Protocol, Sequence

from .model import (
    AnnotationPass,
    CauseTag,
    EmotionLabel,
    ErrorAnnotation,
    Segment,
    Severity,
    Side,
    Span,
    ErrorType,
    validate_pass,
)

log = logging.getLogger(__name__)

CORPUS_FIELDS = ("id", "source", "emotion", "mt")
_PASS_FIELDS = ("segment_id", "annotator_id", "round", "completed", "errors")
_ERROR_FIELDS = ("type", "severity", "spans", "cause_tags", "note")
_SPAN_FIELDS = ("side", "start", "end")


@dataclass(frozen=True)
class Diagnostic:
    locator: str
    message: str

    def __str__(self):
        return f"{self.locator}: {self.message}"


class IngestError(ValueError):
    """Raised when an input stream has at least one malformed record."""

    def __init__(self, summary: str, diagnostics: Sequence[Diagnostic]):
        self.diagnostics = list(diagnostics)
        lines = "\n".join(f"  {d}" for d in self.diagnostics)
        super().__init__(f"{summary}\n{lines}")


@dataclass(frozen=True)
class Corpus:
    """Ordered, id-unique collection of segments."""

    name: str
    segments: tuple
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        seen = set()
        for seg in self.segments:
            if seg.id in seen:
                raise ValueError(f"duplicate segment id {seg.id!r} in corpus {self.name!r}")
            seen.add(seg.id)

    def __len__(self):
        return len(self.segments)

    @cached_property
    def _by_id(self) -> Mapping[str, Segment]:
        return {seg.id: seg for seg in self.segments}

    def segment(self, segment_id: str) -> Segment:
        try:
            return self._by_id[segment_id]
        except KeyError:
            raise KeyError(f"unknown segment id {segment_id!r}") from None

    def __contains__(self, segment_id: str) -> bool:
        return segment_id in self._by_id

    def ids(self) -> list:
        return [seg.id for seg in self.segments]


def _decode(data: bytes, diagnostics: list) -> Optional[str]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        diagnostics.append(Diagnostic(f"byte {exc.start}", f"malformed UTF-8: {exc.reason}"))
        return None
    if text.startswith("﻿"):
        log.warning("input starts with a UTF-8 BOM; stripping it")
        text = text[1:]
    return text


def _jsonl_records(text: str):
    """Yield (locator, raw line) pairs; a single trailing newline is not a record."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for idx, line in enumerate(lines, start=1):
        yield f"line {idx}", line


def segment_from_obj(obj) -> Segment:
    """Build a segment from its wire object {id, source, emotion, mt}."""
    if not isinstance(obj, dict):
        raise ValueError("expected a JSON object")
    missing = [k for k in CORPUS_FIELDS if k not in obj]
    if missing:
        raise ValueError(f"missing field(s): {', '.join(missing)}")
    unknown = [k for k in obj if k not in CORPUS_FIELDS]
    if unknown:
        raise ValueError(f"unknown field(s): {', '.join(sorted(unknown))}")
    for key in CORPUS_FIELDS:
        if not isinstance(obj[key], str):
            raise ValueError(f"field {key!r} must be a string")
    emotion = EmotionLabel.parse(obj["emotion"])
    return Segment(id=obj["id"], source_text=obj["source"], emotion=emotion, mt_text=obj["mt"])


def _segment_from_obj(obj, locator: str, diagnostics: list) -> Optional[Segment]:
    try:
        return segment_from_obj(obj)
    except ValueError as exc:
        diagnostics.append(Diagnostic(locator, str(exc)))
        return None


def parse_corpus(data: bytes, format: str = "jsonl", *, name: str = "corpus", provenance: str = "") -> Corpus:
    """Parse a corpus stream; raises IngestError listing every bad record."""
    diagnostics = []
    text = _decode(data, diagnostics)
    segments = []
    seen_ids = {}
    if text is not None:
        if format == "jsonl":
            for locator, line in _jsonl_records(text):
                if line.strip() == "":
                    diagnostics.append(Diagnostic(locator, "blank line"))
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    diagnostics.append(Diagnostic(locator, f"invalid JSON: {exc.msg}"))
                    continue
                seg = _segment_from_obj(obj, locator, diagnostics)
                if seg is not None:
                    _note_segment(seg, locator, segments, seen_ids, diagnostics)
        elif format == "csv":
            reader = csv.reader(io.StringIO(text, newline=""))
            rows = iter(reader)
            header = next(rows, None)
            if header != list(CORPUS_FIELDS):
                diagnostics.append(Diagnostic(
                    "record 0", f"expected header {','.join(CORPUS_FIELDS)}, got {header!r}"))
            else:
                for i, row in enumerate(rows, start=1):
                    locator = f"record {i}"
                    if len(row) != len(CORPUS_FIELDS):
                        diagnostics.append(Diagnostic(locator, f"expected 4 fields, got {len(row)}"))
                        continue
                    obj = dict(zip(CORPUS_FIELDS, row))
                    seg = _segment_from_obj(obj, locator, diagnostics)
                    if seg is not None:
                        _note_segment(seg, locator, segments, seen_ids, diagnostics)
        else:
            raise ValueError(f"unknown corpus format {format!r}")
    if diagnostics:
        raise IngestError("corpus parse failed", diagnostics)
    return Corpus(name=name, segments=tuple(segments), provenance=provenance)


def _note_segment(seg, locator, segments, seen_ids, diagnostics):
    if seg.id in seen_ids:
        diagnostics.append(Diagnostic(
            locator, f"duplicate segment id {seg.id!r} (first seen at {seen_ids[seg.id]})"))
    else:
        seen_ids[seg.id] = locator
        segments.append(seg)


def segment_to_obj(seg: Segment) -> dict:
    return {"id": seg.id, "source": seg.source_text, "emotion": seg.emotion.value, "mt": seg.mt_text}


def export_corpus(corpus: Corpus, format: str = "jsonl") -> bytes:
    """Serialize a corpus; byte-deterministic (fixed key order, fixed escaping)."""
    if format == "jsonl":
        out = io.StringIO()
        for seg in corpus.segments:
            out.write(json.dumps(segment_to_obj(seg), ensure_ascii=False, separators=(",", ":")))
            out.write("\n")
        return out.getvalue().encode("utf-8")
    if format == "csv":
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CORPUS_FIELDS)
        for seg in corpus.segments:
            writer.writerow([seg.id, seg.source_text, seg.emotion.value, seg.mt_text])
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unknown corpus format {format!r}")


def span_to_obj(span: Span) -> dict:
    return {"side": span.side.value, "start": span.start, "end": span.end}


def error_to_obj(error: ErrorAnnotation) -> dict:
    """Wire form of one error (pass-scoped: identity fields live on the pass)."""
    return {
        "type": error.error_type.value,
        "severity": error.severity.value,
        "spans": [span_to_obj(s) for s in error.spans],
        "cause_tags": sorted(t.value for t in error.cause_tags),
        "note": error.note,
    }


def pass_to_obj(pass_: AnnotationPass) -> dict:
    return {
        "segment_id": pass_.segment_id,
        "annotator_id": pass_.annotator_id,
        "round": pass_.round,
        "completed": pass_.completed,
        "errors": [error_to_obj(e) for e in pass_.errors],
    }


def _require_fields(obj: dict, fields, optional=()):
    if not isinstance(obj, dict):
        raise ValueError("expected a JSON object")
    missing = [k for k in fields if k not in obj and k not in optional]
    unknown = [k for k in obj if k not in fields]
    if missing:
        raise ValueError(f"missing field(s): {', '.join(missing)}")
    if unknown:
        raise ValueError(f"unknown field(s): {', '.join(sorted(unknown))}")


def _span_from_obj(obj) -> Span:
    _require_fields(obj, _SPAN_FIELDS)
    side = Side.parse(obj["side"])
    start, end = obj["start"], obj["end"]
    if not isinstance(start, int) or not isinstance(end, int) or isinstance(start, bool) or isinstance(end, bool):
        raise ValueError("span offsets must be integers")
    return Span(side=side, start=start, end=end)


def error_from_obj(obj, *, segment_id: str, annotator_id: str, round: int,
                   created_at: Optional[dt.datetime] = None) -> ErrorAnnotation:
    _require_fields(obj, _ERROR_FIELDS, optional=("cause_tags", "note"))
    spans_raw = obj["spans"]
    if not isinstance(spans_raw, list):
        raise ValueError("spans must be an array")
    spans = tuple(_span_from_obj(s) for s in spans_raw)
    tags_raw = obj.get("cause_tags", [])
    if not isinstance(tags_raw, list):
        raise ValueError("cause_tags must be an array")
    note = obj.get("note", "")
    if not isinstance(note, str):
        raise ValueError("note must be a string")
    return ErrorAnnotation(
        segment_id=segment_id,
        annotator_id=annotator_id,
        round=round,
        error_type=ErrorType.parse(obj["type"]),
        severity=Severity.parse(obj["severity"]),
        spans=spans,
        cause_tags=frozenset(CauseTag.parse(t) for t in tags_raw),
        note=note,
        created_at=created_at,
    )


def pass_from_obj(obj, corpus: Optional[Corpus] = None,
                  created_at: Optional[dt.datetime] = None) -> AnnotationPass:
    """Build a pass from its wire object; validates spans when a corpus is given."""
    _require_fields(obj, _PASS_FIELDS)
    segment_id, annotator_id = obj["segment_id"], obj["annotator_id"]
    if not isinstance(segment_id, str) or not isinstance(annotator_id, str) or not annotator_id:
        raise ValueError("segment_id and annotator_id must be non-empty strings")
    rnd = obj["round"]
    if not isinstance(rnd, int) or isinstance(rnd, bool) or rnd < 1:
        raise ValueError("round must be an integer >= 1")
    completed = obj["completed"]
    if not isinstance(completed, bool):
        raise ValueError("completed must be a boolean")
    errors_raw = obj["errors"]
    if not isinstance(errors_raw, list):
        raise ValueError("errors must be an array")
    errors = tuple(
        error_from_obj(e, segment_id=segment_id, annotator_id=annotator_id,
                       round=rnd, created_at=created_at)
        for e in errors_raw
    )
    pass_ = AnnotationPass(segment_id=segment_id, annotator_id=annotator_id,
                           round=rnd, completed=completed, errors=errors)
    if corpus is not None:
        if segment_id not in corpus:
            raise ValueError(f"unknown segment id {segment_id!r}")
        issues = validate_pass(pass_, corpus.segment(segment_id))
        if issues:
            raise ValueError("; ".join(str(i) for i in issues))
    return pass_


def parse_annotations(data: bytes, corpus: Corpus) -> list:
    """Parse an annotation-pass stream, validating every span against the corpus."""
    diagnostics = []
    text = _decode(data, diagnostics)
    passes = []
    seen_keys = {}
    if text is not None:
        for locator, line in _jsonl_records(text):
            if line.strip() == "":
                diagnostics.append(Diagnostic(locator, "blank line"))
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                diagnostics.append(Diagnostic(locator, f"invalid JSON: {exc.msg}"))
                continue
            try:
                pass_ = pass_from_obj(obj, corpus=corpus)
            except ValueError as exc:
                diagnostics.append(Diagnostic(locator, str(exc)))
                continue
            if pass_.key in seen_keys:
                diagnostics.append(Diagnostic(
                    locator,
                    f"duplicate pass for (segment, annotator, round) {pass_.key!r} "
                    f"(first seen at {seen_keys[pass_.key]})"))
            else:
                seen_keys[pass_.key] = locator
                passes.append(pass_)
    if diagnostics:
        raise IngestError("annotation parse failed", diagnostics)
    return passes


def export_annotations(passes: Iterable[AnnotationPass]) -> bytes:
    """Serialize passes as canonical JSONL in the given order."""
    out = io.StringIO()
    for pass_ in passes:
        out.write(json.dumps(pass_to_obj(pass_), ensure_ascii=False, separators=(",", ":")))
        out.write("\n")
    return out.getvalue().encode("utf-8")


class TranslationError(ValueError):
    pass


class TranslationProvider(Protocol):
    """Produces exactly one MT string per segment, in order."""

    def translate(self, segments: Sequence[Segment]) -> list: ...


@dataclass(frozen=True)
class FileTranslations:
    """Translations read from a JSONL file of {id, mt} records, keyed by segment id."""

    mt_by_id: Mapping[str, str]

    @classmethod
    def load(cls, data: bytes) -> "FileTranslations":
        diagnostics = []
        text = _decode(data, diagnostics)
        mapping = {}
        if text is not None:
            for locator, line in _jsonl_records(text):
                if line.strip() == "":
                    diagnostics.append(Diagnostic(locator, "blank line"))
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    diagnostics.append(Diagnostic(locator, f"invalid JSON: {exc.msg}"))
                    continue
                try:
                    _require_fields(obj, ("id", "mt"))
                except ValueError as exc:
                    diagnostics.append(Diagnostic(locator, str(exc)))
                    continue
                if not isinstance(obj["id"], str) or not isinstance(obj["mt"], str):
                    diagnostics.append(Diagnostic(locator, "id and mt must be strings"))
                    continue
                if obj["id"] in mapping:
                    diagnostics.append(Diagnostic(locator, f"duplicate id {obj['id']!r}"))
                    continue
                mapping[obj["id"]] = obj["mt"]
        if diagnostics:
            raise IngestError("translation file parse failed", diagnostics)
        return cls(mt_by_id=mapping)

    def translate(self, segments: Sequence[Segment]) -> list:
        missing = [seg.id for seg in segments if seg.id not in self.mt_by_id]
        if missing:
            raise TranslationError(f"no translation for segment id(s): {', '.join(missing)}")
        return [self.mt_by_id[seg.id] for seg in segments]


class IdentityTranslations:
    """Copies source text into the target; useful for plumbing tests."""

    def translate(self, segments: Sequence[Segment]) -> list:
        return [seg.source_text for seg in segments]


def attach_translations(corpus: Corpus, provider: TranslationProvider) -> Corpus:
    """Return a new corpus with mt_text filled for every segment; all-or-nothing."""
    outputs = provider.translate(corpus.segments)
    if len(outputs) != len(corpus.segments):
        raise TranslationError(
            f"provider returned {len(outputs)} translations for {len(corpus.segments)} segments")
    for mt in outputs:
        if not isinstance(mt, str):
            raise TranslationError("provider returned a non-string translation")
    segments = tuple(
        dataclasses.replace(seg, mt_text=mt) for seg, mt in zip(corpus.segments, outputs)
    )
    return Corpus(name=corpus.name, segments=segments, provenance=corpus.provenance)
