"""Corpus/annotation parsing, export round-trips, diagnostics, translation providers."""

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emoteval.ingestion import (
    Corpus,
    FileTranslations,
    IdentityTranslations,
    IngestError,
    TranslationError,
    attach_translations,
    export_annotations,
    export_corpus,
    parse_annotations,
    parse_corpus,
    pass_from_obj,
    pass_to_obj,
)
from emoteval.model import EmotionLabel, Segment, Side, Span

from helpers import passes_for, rand_corpus

TEXT_ALPHABET = "ab字尼玛😂\"',\n\r 。！"


def segment_strategy(sid):
    text = st.text(alphabet=TEXT_ALPHABET, min_size=1, max_size=20)
    return st.builds(
        Segment,
        id=st.just(sid),
        source_text=text,
        emotion=st.sampled_from(EmotionLabel),
        mt_text=st.text(alphabet=TEXT_ALPHABET, max_size=20),
    )


corpus_strategy = st.integers(min_value=0, max_value=8).flatmap(
    lambda n: st.tuples(*[segment_strategy(f"id-{i}") for i in range(n)])
).map(lambda segs: Corpus(name="corpus", segments=segs, provenance=""))


class TestCorpusJsonl:
    def test_single_line_example(self):
        line = json.dumps({"id": "1", "source": "吓死宝宝了", "emotion": "fear",
                           "mt": "Scared the baby to death"}, ensure_ascii=False)
        corpus = parse_corpus(line.encode("utf-8") + b"\n")
        assert len(corpus) == 1
        seg = corpus.segments[0]
        assert seg.source_text == "吓死宝宝了"
        assert seg.emotion is EmotionLabel.FEAR
        assert seg.mt_text == "Scared the baby to death"

    def test_empty_input(self):
        assert len(parse_corpus(b"")) == 0

    def test_invalid_label_names_line(self):
        lines = (b'{"id":"1","source":"x","emotion":"happy","mt":""}\n')
        with pytest.raises(IngestError) as exc:
            parse_corpus(lines)
        assert "line 1" in str(exc.value)
        assert "happy" in str(exc.value)

    def test_duplicate_id_diagnostic(self):
        lines = (b'{"id":"1","source":"x","emotion":"joy","mt":""}\n'
                 b'{"id":"1","source":"y","emotion":"fear","mt":""}\n')
        with pytest.raises(IngestError) as exc:
            parse_corpus(lines)
        assert "line 2" in str(exc.value)
        assert "duplicate" in str(exc.value)

    def test_missing_field_diagnostic(self):
        with pytest.raises(IngestError) as exc:
            parse_corpus(b'{"id":"1","source":"x","emotion":"joy"}\n')
        assert "missing field" in str(exc.value)
        assert "mt" in str(exc.value)

    def test_every_bad_line_reported(self):
        lines = (b'{"id":"1","source":"x","emotion":"joy","mt":""}\n'
                 b'not json\n'
                 b'{"id":"2","source":"","emotion":"joy","mt":""}\n')
        with pytest.raises(IngestError) as exc:
            parse_corpus(lines)
        assert "line 2" in str(exc.value) and "line 3" in str(exc.value)

    def test_bom_stripped_with_warning(self, caplog):
        data = "﻿" + json.dumps({"id": "1", "source": "x", "emotion": "joy", "mt": ""})
        with caplog.at_level("WARNING"):
            corpus = parse_corpus(data.encode("utf-8") + b"\n")
        assert len(corpus) == 1
        assert any("BOM" in message for message in caplog.messages)

    def test_malformed_encoding_diagnostic(self):
        with pytest.raises(IngestError) as exc:
            parse_corpus(b"\xff\xfe\x00bad")
        assert "UTF-8" in str(exc.value)

    def test_export_is_byte_deterministic(self):
        rng = random.Random(7)
        corpus = rand_corpus(rng, 20)
        assert export_corpus(corpus) == export_corpus(corpus)

    def test_export_key_order_fixed(self):
        corpus = parse_corpus(b'{"id":"1","source":"x","emotion":"joy","mt":"y"}\n')
        assert export_corpus(corpus) == b'{"id":"1","source":"x","emotion":"joy","mt":"y"}\n'


@settings(max_examples=120)
@given(corpus_strategy)
def test_corpus_jsonl_round_trip(corpus):
    data = export_corpus(corpus, format="jsonl")
    parsed = parse_corpus(data, format="jsonl", name=corpus.name, provenance=corpus.provenance)
    assert parsed == corpus
    assert export_corpus(parsed) == data


@settings(max_examples=120)
@given(corpus_strategy)
def test_corpus_csv_round_trip(corpus):
    data = export_corpus(corpus, format="csv")
    parsed = parse_corpus(data, format="csv", name=corpus.name, provenance=corpus.provenance)
    assert parsed == corpus
    assert export_corpus(parsed, format="csv") == data


class TestCorpusCsv:
    def test_header_required(self):
        with pytest.raises(IngestError) as exc:
            parse_corpus(b"a,b,c,d\n1,x,joy,\n", format="csv")
        assert "header" in str(exc.value)

    def test_quoted_newline_in_text(self):
        data = b'id,source,emotion,mt\n1,"line one\nline two",joy,"mt\ntext"\n'
        corpus = parse_corpus(data, format="csv")
        assert corpus.segments[0].source_text == "line one\nline two"
        assert corpus.segments[0].mt_text == "mt\ntext"

    def test_record_locator_in_errors(self):
        data = b"id,source,emotion,mt\n1,x,joy,\n2,y,happy,\n"
        with pytest.raises(IngestError) as exc:
            parse_corpus(data, format="csv")
        assert "record 2" in str(exc.value)


class TestAnnotations:
    def corpus(self):
        return parse_corpus(
            b'{"id":"s1","source":"abcd","emotion":"joy","mt":"wxyz"}\n'
            b'{"id":"s2","source":"\xe5\x90\x93\xe6\xad\xbb","emotion":"fear","mt":""}\n')

    def pass_obj(self, **overrides):
        obj = {
            "segment_id": "s1", "annotator_id": "a1", "round": 1, "completed": True,
            "errors": [{
                "type": "mistranslation", "severity": "major",
                "spans": [{"side": "source", "start": 0, "end": 2}],
                "cause_tags": ["polysemy"], "note": "",
            }],
        }
        obj.update(overrides)
        return obj

    def test_zero_error_pass_valid(self):
        data = json.dumps(self.pass_obj(errors=[])).encode() + b"\n"
        passes = parse_annotations(data, self.corpus())
        assert len(passes) == 1
        assert passes[0].completed and not passes[0].has_errors

    def test_round_trip(self):
        data = json.dumps(self.pass_obj()).encode() + b"\n"
        passes = parse_annotations(data, self.corpus())
        exported = export_annotations(passes)
        assert parse_annotations(exported, self.corpus()) == passes
        assert export_annotations(parse_annotations(exported, self.corpus())) == exported

    def test_span_beyond_target_rejected(self):
        bad = self.pass_obj()
        bad["errors"][0]["spans"] = [{"side": "target", "start": 0, "end": 5}]
        with pytest.raises(IngestError) as exc:
            parse_annotations(json.dumps(bad).encode() + b"\n", self.corpus())
        assert "s1" in str(exc.value) and "[0, 5)" in str(exc.value)

    def test_unknown_segment_rejected(self):
        bad = self.pass_obj(segment_id="zzz")
        with pytest.raises(IngestError) as exc:
            parse_annotations(json.dumps(bad).encode() + b"\n", self.corpus())
        assert "zzz" in str(exc.value)

    def test_duplicate_pass_key_rejected(self):
        line = json.dumps(self.pass_obj()).encode()
        with pytest.raises(IngestError) as exc:
            parse_annotations(line + b"\n" + line + b"\n", self.corpus())
        assert "duplicate pass" in str(exc.value)

    def test_empty_span_list_rejected(self):
        bad = self.pass_obj()
        bad["errors"][0]["spans"] = []
        with pytest.raises(IngestError):
            parse_annotations(json.dumps(bad).encode() + b"\n", self.corpus())

    def test_full_record_round_trip_preserves_created_at(self):
        import datetime as dt
        ts = dt.datetime(2024, 5, 30, 12, 0, tzinfo=dt.timezone.utc)
        obj = self.pass_obj()
        pass_ = pass_from_obj(obj, corpus=self.corpus(), created_at=ts)
        assert pass_.errors[0].created_at == ts
        again = pass_from_obj(pass_to_obj(pass_), corpus=self.corpus(), created_at=ts)
        assert again == pass_


def test_annotation_round_trip_randomized():
    rng = random.Random(99)
    corpus = rand_corpus(rng, 30)
    passes = passes_for(rng, corpus)
    data = export_annotations(passes)
    assert parse_annotations(data, corpus) == passes
    assert export_annotations(parse_annotations(data, corpus)) == data


class TestTranslations:
    def corpus(self):
        return parse_corpus(
            b'{"id":"1","source":"one","emotion":"joy","mt":""}\n'
            b'{"id":"2","source":"two","emotion":"fear","mt":""}\n')

    def test_file_backed_complete(self):
        provider = FileTranslations.load(b'{"id":"1","mt":"uno"}\n{"id":"2","mt":"dos"}\n')
        out = attach_translations(self.corpus(), provider)
        assert [s.mt_text for s in out.segments] == ["uno", "dos"]
        assert [s.source_text for s in out.segments] == ["one", "two"]

    def test_missing_id_names_it(self):
        provider = FileTranslations.load(b'{"id":"1","mt":"uno"}\n')
        with pytest.raises(TranslationError, match="2"):
            attach_translations(self.corpus(), provider)

    def test_identity_provider(self):
        out = attach_translations(self.corpus(), IdentityTranslations())
        assert all(s.mt_text == s.source_text for s in out.segments)

    def test_no_partial_mutation_on_failure(self):
        corpus = self.corpus()
        provider = FileTranslations.load(b'{"id":"1","mt":"uno"}\n')
        with pytest.raises(TranslationError):
            attach_translations(corpus, provider)
        assert all(s.mt_text == "" for s in corpus.segments)

    def test_wrong_length_rejected(self):
        class Broken:
            def translate(self, segments):
                return ["only one"]

        with pytest.raises(TranslationError, match="1 translations for 2"):
            attach_translations(self.corpus(), Broken())
