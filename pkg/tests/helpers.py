"""Deterministic random fixture generators shared across the test suite."""

import random
import string

from emoteval.ingestion import Corpus
from emoteval.model import (
    AnnotationPass,
    CauseTag,
    EmotionLabel,
    ErrorAnnotation,
    ErrorType,
    Segment,
    Severity,
    Side,
    Span,
)

# Latin, CJK (incl. the slang tokens that matter in this register), emoji,
# quotes, commas, embedded newlines: everything the wire formats must survive.
RICH_CHARS = (
    "abcdefgXYZ 0123456789"
    "你好世界尼玛吓死宝宝了居然竟然特么还是真是醉了折腾气死我"
    "😂🤣❤️👍🏼🇬🇧"
    "\"'`,;:!?！？。、～·—\n\r\t"
)


def rand_text(rng: random.Random, min_len=1, max_len=30) -> str:
    n = rng.randint(min_len, max_len)
    return "".join(rng.choice(RICH_CHARS) for _ in range(n))


def rand_segment(rng: random.Random, sid: str, emotion=None, allow_empty_mt=True) -> Segment:
    emotion = emotion or rng.choice(list(EmotionLabel))
    mt = "" if (allow_empty_mt and rng.random() < 0.05) else rand_text(rng)
    return Segment(id=sid, source_text=rand_text(rng), emotion=emotion, mt_text=mt)


def rand_corpus(rng: random.Random, n: int, name="corpus", allow_empty_mt=True) -> Corpus:
    segments = tuple(
        rand_segment(rng, f"seg-{i:05d}", allow_empty_mt=allow_empty_mt) for i in range(n)
    )
    return Corpus(name=name, segments=segments, provenance="synthetic")


def corpus_with_proportions(rng: random.Random, total: int, proportions: dict,
                            name="corpus") -> Corpus:
    """Corpus whose label counts are exactly proportions * total (must divide evenly)."""
    segments = []
    i = 0
    for label, share in proportions.items():
        count = int(total * share)
        for _ in range(count):
            segments.append(rand_segment(rng, f"seg-{i:05d}", emotion=label))
            i += 1
    assert i == total, "proportions must resolve to whole segment counts"
    rng.shuffle(segments)
    return Corpus(name=name, segments=tuple(segments), provenance="synthetic")


def rand_span(rng: random.Random, segment: Segment) -> Span:
    sides = [Side.SOURCE] if not segment.mt_text else [Side.SOURCE, Side.TARGET]
    side = rng.choice(sides)
    text = segment.text_for(side)
    start = rng.randrange(len(text))
    end = rng.randint(start + 1, len(text))
    return Span(side=side, start=start, end=end)


def rand_error(rng: random.Random, segment: Segment, annotator_id="a1", round=1) -> ErrorAnnotation:
    spans = tuple(rand_span(rng, segment) for _ in range(rng.randint(1, 3)))
    tags = frozenset(rng.sample(list(CauseTag), rng.randint(0, 2)))
    return ErrorAnnotation(
        segment_id=segment.id,
        annotator_id=annotator_id,
        round=round,
        error_type=rng.choice(list(ErrorType)),
        severity=rng.choice(list(Severity)),
        spans=spans,
        cause_tags=tags,
        note=rand_text(rng, 0, 10) if rng.random() < 0.3 else "",
    )


def rand_pass(rng: random.Random, segment: Segment, annotator_id="a1", round=1,
              p_error=0.7) -> AnnotationPass:
    n_errors = rng.randint(1, 3) if rng.random() < p_error else 0
    errors = tuple(rand_error(rng, segment, annotator_id, round) for _ in range(n_errors))
    return AnnotationPass(segment_id=segment.id, annotator_id=annotator_id,
                          round=round, errors=errors, completed=True)


def passes_for(rng: random.Random, corpus: Corpus, annotator_id="a1", round=1,
               p_error=0.7) -> list:
    return [rand_pass(rng, seg, annotator_id, round, p_error) for seg in corpus.segments]
