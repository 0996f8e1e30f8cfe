import pytest
from hypothesis import given
from hypothesis import strategies as st

from grounding.exceptions import SchemaMismatch
from grounding.outputs import (
    HighlightPayload,
    ParsedOutput,
    Schema,
    Task,
    emit_output,
    extract_answer,
    parse_output,
)
from grounding.temporal import TimeInterval

G, H = Task.GROUNDING, Task.HIGHLIGHT


class TestParse:
    def test_think_answer(self):
        parsed = parse_output("<Think>x</Think><Answer>[3.2, 7.8]</Answer>", Schema.THINK_ANSWER, G)
        assert parsed.well_formed
        assert parsed.think_text == "x"
        assert parsed.answer_payload == TimeInterval(3.2, 7.8)

    def test_tags_case_insensitive(self):
        parsed = parse_output("<answer>[3.2, 7.8]</answer>", Schema.ANSWER_ONLY, G)
        assert parsed.well_formed
        assert parsed.answer_payload == TimeInterval(3.2, 7.8)

    def test_reversed_interval_is_well_formed_without_payload(self):
        parsed = parse_output("<Answer>[7.8, 3.2]</Answer>", Schema.ANSWER_ONLY, G)
        assert parsed.well_formed
        assert parsed.answer_payload is None

    def test_surrounding_whitespace(self):
        raw = "  <Think>a\nb</Think>\n <Answer> [1, 2] </Answer>\n"
        parsed = parse_output(raw, Schema.THINK_ANSWER, G)
        assert parsed.well_formed
        assert parsed.think_text == "a\nb"

    @pytest.mark.parametrize(
        "raw, schema",
        [
            ("<Answer>[1.0, 2.5]</Answer>", Schema.THINK_ANSWER),
            ("<Think>x</Think><Answer>[1.0, 2.5]</Answer>", Schema.ANSWER_ONLY),
            ("<Think>x</Think><Answer>[1.0, 2.5]", Schema.THINK_ANSWER),
            ("The event happens at [1.000, 2.500].", Schema.ANSWER_ONLY),
            ("<Answer>[1.0; 2.5]</Answer>", Schema.ANSWER_ONLY),
            ("<Answer>1.0, 2.5</Answer>", Schema.ANSWER_ONLY),
        ],
    )
    def test_malformed(self, raw, schema):
        parsed = parse_output(raw, schema, G)
        assert not parsed.well_formed
        assert parsed.answer_payload is None

    def test_highlight_pairs(self):
        parsed = parse_output("<Answer>[(0, 0.5), (3, 1.0)]</Answer>", Schema.ANSWER_ONLY, H)
        assert parsed.answer_payload == HighlightPayload(((0, 0.5), (3, 1.0)))
        assert parsed.answer_payload.salient_clips() == frozenset({0, 3})

    def test_highlight_duplicate_clip_has_no_payload(self):
        parsed = parse_output("<Answer>[(1, 0.5), (1, 0.7)]</Answer>", Schema.ANSWER_ONLY, H)
        assert parsed.well_formed
        assert parsed.answer_payload is None

    def test_highlight_score_out_of_range_has_no_payload(self):
        parsed = parse_output("<Answer>[(1, 1.5)]</Answer>", Schema.ANSWER_ONLY, H)
        assert parsed.well_formed
        assert parsed.answer_payload is None

    def test_bytes_are_decoded(self):
        parsed = parse_output(b"<Answer>[1, 2]</Answer>", Schema.ANSWER_ONLY, G)
        assert parsed.answer_payload == TimeInterval(1.0, 2.0)

    def test_non_text_is_malformed(self):
        assert not parse_output(None, Schema.ANSWER_ONLY, G).well_formed

    def test_oversized_clip_index_has_no_payload(self):
        raw = "<Answer>[(" + "1" * 5000 + ", 0.5)]</Answer>"
        parsed = parse_output(raw, Schema.ANSWER_ONLY, H)
        assert parsed.well_formed
        assert parsed.answer_payload is None
        assert extract_answer(raw, Schema.ANSWER_ONLY, H) is None

    @given(st.one_of(st.text(), st.binary()), st.sampled_from(list(Schema)), st.sampled_from(list(Task)))
    def test_parser_is_total(self, raw, schema, task):
        parsed = parse_output(raw, schema, task)
        assert isinstance(parsed, ParsedOutput)
        if not parsed.well_formed:
            assert parsed.answer_payload is None


class TestEmit:
    def test_think_answer(self):
        raw = emit_output(TimeInterval(1.0, 2.5), "a", Schema.THINK_ANSWER)
        assert raw == "<Think>a</Think><Answer>[1.000, 2.500]</Answer>"

    def test_zero_interval(self):
        assert emit_output(TimeInterval(0.0, 0.0), None, Schema.ANSWER_ONLY) == "<Answer>[0.000, 0.000]</Answer>"

    def test_think_under_answer_only_rejected(self):
        with pytest.raises(SchemaMismatch):
            emit_output(TimeInterval(0.0, 1.0), "a", Schema.ANSWER_ONLY)

    def test_highlight(self):
        raw = emit_output(HighlightPayload(((2, 1.0), (3, 0.25))))
        assert raw == "<Answer>[(2, 1.000), (3, 0.250)]</Answer>"

    def test_missing_think_renders_empty_block(self):
        raw = emit_output(TimeInterval(1.0, 2.5), None, Schema.THINK_ANSWER)
        assert raw == "<Think></Think><Answer>[1.000, 2.500]</Answer>"
        assert parse_output(raw, Schema.THINK_ANSWER, G).think_text == ""

    @pytest.mark.parametrize("think", ["a</Think>b", "</think>", "x </THINK> y"])
    def test_think_with_closing_tag_rejected(self, think):
        with pytest.raises(SchemaMismatch):
            emit_output(TimeInterval(0.0, 1.0), think, Schema.THINK_ANSWER)

    @given(st.text(st.characters(max_codepoint=127)).filter(lambda t: "</think>" not in t.lower()))
    def test_think_text_round_trips(self, think):
        raw = emit_output(TimeInterval(1.0, 2.5), think, Schema.THINK_ANSWER)
        parsed = parse_output(raw, Schema.THINK_ANSWER, G)
        assert parsed.think_text == think
        assert parsed.answer_payload == TimeInterval(1.0, 2.5)

    @given(
        st.integers(min_value=0, max_value=10 ** 6),
        st.integers(min_value=0, max_value=10 ** 6),
        st.sampled_from(list(Schema)),
    )
    def test_emitted_text_parses_back(self, a, b, schema):
        interval = TimeInterval(min(a, b) / 1000, max(a, b) / 1000)
        think = "reasoning" if schema is Schema.THINK_ANSWER else None
        parsed = parse_output(emit_output(interval, think, schema), schema, G)
        assert parsed.well_formed
        assert parsed.answer_payload == interval


class TestExtractAnswer:
    def test_falls_back_to_other_schema(self):
        raw = "<Answer>[1.0, 2.5]</Answer>"
        assert extract_answer(raw, Schema.THINK_ANSWER, G) == TimeInterval(1.0, 2.5)

    def test_nothing_to_extract(self):
        assert extract_answer("The event happens at [1.000, 2.500].", Schema.ANSWER_ONLY, G) is None
