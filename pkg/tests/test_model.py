"""Domain type invariants: enums, severity order, schemes, span validation."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from emoteval.model import (
    AnnotationPass,
    CauseTag,
    DEFAULT_SCHEME,
    EmotionLabel,
    ErrorAnnotation,
    ErrorType,
    Segment,
    Severity,
    SeverityScheme,
    SEVERITY_ORDER,
    Side,
    Span,
    severity_weight,
    validate_annotation,
    validate_pass,
)


def make_segment(source="abcd", mt="wxyz", sid="s1", emotion=EmotionLabel.JOY):
    return Segment(id=sid, source_text=source, emotion=emotion, mt_text=mt)


def make_error(sid="s1", spans=(Span(Side.SOURCE, 0, 1),), **kw):
    defaults = dict(segment_id=sid, annotator_id="a1", round=1,
                    error_type=ErrorType.MISTRANSLATION, severity=Severity.MAJOR,
                    spans=tuple(spans))
    defaults.update(kw)
    return ErrorAnnotation(**defaults)


class TestEnums:
    def test_exactly_six_emotions(self):
        assert [e.value for e in EmotionLabel] == [
            "anger", "fear", "joy", "sadness", "surprise", "neutral"]

    def test_exactly_five_error_types(self):
        assert [t.value for t in ErrorType] == [
            "addition", "mistranslation", "omission", "untranslated", "source_error"]

    def test_exactly_three_severities(self):
        assert [s.value for s in Severity] == ["minor", "major", "critical"]

    @pytest.mark.parametrize("enum_cls", [EmotionLabel, ErrorType, Severity, CauseTag, Side])
    def test_parse_format_identity(self, enum_cls):
        for member in enum_cls:
            assert enum_cls.parse(member.value) is member

    @pytest.mark.parametrize("enum_cls", [EmotionLabel, ErrorType, Severity, CauseTag, Side])
    def test_parse_rejects_unknown(self, enum_cls):
        with pytest.raises(ValueError, match="unknown"):
            enum_cls.parse("happy")

    def test_severity_total_order(self):
        assert Severity.MINOR < Severity.MAJOR < Severity.CRITICAL
        assert Severity.CRITICAL > Severity.MINOR
        assert max(Severity) is Severity.CRITICAL
        assert sorted([Severity.CRITICAL, Severity.MINOR, Severity.MAJOR]) == list(SEVERITY_ORDER)


class TestSeverityScheme:
    def test_default_weights(self):
        assert severity_weight(Severity.CRITICAL, DEFAULT_SCHEME) == 10
        assert severity_weight(Severity.MAJOR, DEFAULT_SCHEME) == 5
        assert severity_weight(Severity.MINOR, DEFAULT_SCHEME) == 1

    def test_default_weight_strictly_monotone(self):
        weights = [severity_weight(s, DEFAULT_SCHEME) for s in SEVERITY_ORDER]
        assert weights == sorted(weights)
        assert len(set(weights)) == 3

    def test_custom_scheme(self):
        scheme = SeverityScheme.from_weights(Fraction(7, 2), 2, 1)
        assert severity_weight(Severity.CRITICAL, scheme) == Fraction(7, 2)

    @pytest.mark.parametrize("c,m,n", [(1, 5, 10), (10, 5, 0), (0, 0, 0), (5, 10, 1)])
    def test_rejects_non_monotone_or_zero(self, c, m, n):
        with pytest.raises(ValueError):
            SeverityScheme.from_weights(c, m, n)


class TestSpan:
    def test_full_text_span_accepts(self):
        err = make_error(spans=[Span(Side.SOURCE, 0, 4)])
        assert validate_annotation(err, make_segment()) == []

    def test_empty_span_rejected(self):
        err = make_error(spans=[Span(Side.SOURCE, 3, 3)])
        issues = validate_annotation(err, make_segment())
        assert [i.code for i in issues] == ["empty_span"]

    def test_out_of_bounds_rejected(self):
        err = make_error(spans=[Span(Side.TARGET, 0, 5)])
        issues = validate_annotation(err, make_segment(mt="wxyz"))
        assert [i.code for i in issues] == ["span_out_of_bounds"]
        assert "length 4" in issues[0].message

    def test_offsets_count_scalar_values_not_bytes(self):
        seg = make_segment(source="吓死宝宝了", mt="ok 😂")
        assert validate_annotation(make_error(spans=[Span(Side.SOURCE, 0, 5)]), seg) == []
        assert validate_annotation(make_error(spans=[Span(Side.SOURCE, 0, 6)]), seg) != []
        # one emoji = one scalar value
        assert validate_annotation(make_error(spans=[Span(Side.TARGET, 3, 4)]), seg) == []
        assert Span(Side.TARGET, 3, 4).extract(seg) == "😂"

    def test_negative_or_reversed_offsets_unconstructible(self):
        with pytest.raises(ValueError):
            Span(Side.SOURCE, -1, 2)
        with pytest.raises(ValueError):
            Span(Side.SOURCE, 3, 1)

    def test_empty_span_list_rejected(self):
        issues = validate_annotation(make_error(spans=[]), make_segment())
        assert [i.code for i in issues] == ["empty_spans"]

    def test_id_mismatch_rejected(self):
        issues = validate_annotation(make_error(sid="other"), make_segment())
        assert [i.code for i in issues] == ["id_mismatch"]

    def test_mixed_side_spans_allowed(self):
        err = make_error(spans=[Span(Side.SOURCE, 0, 2), Span(Side.TARGET, 1, 3)])
        assert validate_annotation(err, make_segment()) == []


class TestPassInvariants:
    def test_pass_key_consistency_enforced(self):
        err = make_error(sid="s1")
        with pytest.raises(ValueError, match="does not match"):
            AnnotationPass(segment_id="s2", annotator_id="a1", round=1, errors=(err,))

    def test_zero_error_pass_is_valid(self):
        p = AnnotationPass(segment_id="s1", annotator_id="a1", round=1)
        assert not p.has_errors
        assert validate_pass(p, make_segment()) == []

    def test_round_must_be_positive(self):
        with pytest.raises(ValueError):
            AnnotationPass(segment_id="s1", annotator_id="a1", round=0)

    def test_segment_requires_nonempty_source(self):
        with pytest.raises(ValueError):
            Segment(id="x", source_text="", emotion=EmotionLabel.JOY)


@given(
    start=st.integers(min_value=0, max_value=20),
    length=st.integers(min_value=1, max_value=20),
    text=st.text(alphabet="ab字😂", min_size=1, max_size=40),
)
def test_span_validation_matches_bounds_arithmetic(start, length, text):
    seg = make_segment(source=text, mt=text)
    span = Span(Side.SOURCE, start, start + length)
    issues = validate_annotation(make_error(spans=[span]), seg)
    assert (issues == []) == (start + length <= len(text))
