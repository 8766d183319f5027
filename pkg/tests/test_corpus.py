import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imdner.corpus import (
    DEFAULT_LABELS,
    EntitySpan,
    LabelSet,
    Sentence,
    Token,
    corpus_stats,
    parse_conll,
    serialize_conll,
    spans_to_tags,
    split_corpus,
    tags_to_spans,
    tokenize_raw,
)
from imdner.errors import ParseError, SchemaError, TaggingError, ValidationError


class TestLabelSet:
    def test_default_is_the_12_label_schema(self):
        assert LabelSet().labels == DEFAULT_LABELS
        assert len(DEFAULT_LABELS) == 12
        assert DEFAULT_LABELS[0] == "Bacterial_Infection"
        assert DEFAULT_LABELS[-1] == "Viral_Infection"

    def test_num_tags(self):
        assert LabelSet().num_tags == 25
        assert LabelSet(("A",)).num_tags == 3

    def test_rejects_duplicates_and_bad_names(self):
        with pytest.raises(ValidationError):
            LabelSet(("A", "A"))
        with pytest.raises(ValidationError):
            LabelSet(("9bad",))
        with pytest.raises(ValidationError):
            LabelSet(())

    def test_tag_vocabulary_order(self):
        ls = LabelSet(("Symptom", "Treatment"))
        assert ls.tags == ("O", "B-Symptom", "I-Symptom", "B-Treatment", "I-Treatment")
        assert ls.tag_index("I-Treatment") == 4


class TestParseConll:
    def test_minimal_single_token(self):
        docs = parse_conll("SLE\tB-Immune_Mediated_Disease\n")
        assert len(docs) == 1
        assert len(docs[0].sentences) == 1
        tok = docs[0].sentences[0].tokens[0]
        assert (tok.text, tok.tag) == ("SLE", "B-Immune_Mediated_Disease")

    def test_empty_input(self):
        assert parse_conll("") == []
        assert parse_conll(b"\n\n") == []

    def test_docstart_splits_documents(self):
        text = (
            "fever\tB-Symptom\n\n"
            "rash\tB-Symptom\n\n"
            "-DOCSTART-\n\n"
            "cough\tB-Symptom\n\n"
        )
        docs = parse_conll(text, name="f")
        assert [len(d.sentences) for d in docs] == [2, 1]
        assert [d.id for d in docs] == ["f#0", "f#1"]

    def test_single_document_gets_the_file_name(self):
        docs = parse_conll("a\tO\n", name="notes.conll")
        assert docs[0].id == "notes.conll"

    def test_malformed_line_reports_line_number(self):
        with pytest.raises(ParseError, match="line 3"):
            parse_conll("a\tO\nb\tO\nbad line without tab\n")

    def test_unknown_label_rejected(self):
        with pytest.raises(SchemaError, match="Made_Up"):
            parse_conll("a\tB-Made_Up\n")

    def test_i_after_o_rejected(self):
        with pytest.raises(TaggingError):
            parse_conll("a\tO\nb\tI-Symptom\n")

    def test_i_after_different_label_rejected(self):
        with pytest.raises(TaggingError):
            parse_conll("a\tB-Symptom\nb\tI-Treatment\n")

    def test_serialize_round_trip(self, toy_corpus, toy_labels):
        text = serialize_conll(toy_corpus)
        again = parse_conll(text, toy_labels, name="toy")
        assert [[s.texts for s in d.sentences] for d in again] == [
            [s.texts for s in d.sentences] for d in toy_corpus
        ]
        assert [[s.tags for s in d.sentences] for d in again] == [
            [s.tags for s in d.sentences] for d in toy_corpus
        ]


class TestSpanCodec:
    def test_all_o_gives_no_spans(self):
        assert tags_to_spans(["O", "O", "O"]) == []

    def test_basic_decode(self):
        spans = tags_to_spans(["B-Symptom", "I-Symptom", "O", "B-Treatment"])
        assert spans == [EntitySpan(0, 0, 2, "Symptom"), EntitySpan(0, 3, 4, "Treatment")]

    def test_adjacent_b_opens_new_span(self):
        spans = tags_to_spans(["B-Symptom", "B-Symptom"])
        assert spans == [EntitySpan(0, 0, 1, "Symptom"), EntitySpan(0, 1, 2, "Symptom")]

    def test_encode_empty(self):
        assert spans_to_tags(3, []) == ["O", "O", "O"]

    def test_encode_basic(self):
        tags = spans_to_tags(4, [EntitySpan(0, 1, 3, "Biomarker")])
        assert tags == ["O", "B-Biomarker", "I-Biomarker", "O"]

    def test_encode_rejects_overlap(self):
        with pytest.raises(ValidationError):
            spans_to_tags(2, [EntitySpan(0, 0, 1, "Symptom"), EntitySpan(0, 0, 2, "Symptom")])

    def test_encode_rejects_out_of_bounds(self):
        with pytest.raises(ValidationError):
            spans_to_tags(2, [EntitySpan(0, 1, 3, "Symptom")])

    @given(st.data())
    @settings(max_examples=200, deadline=None)
    def test_round_trip_property(self, data):
        length = data.draw(st.integers(1, 50))
        labels = ["Symptom", "Treatment", "Biomarker"]
        spans = []
        cursor = 0
        while cursor < length:
            start = data.draw(st.integers(cursor, length))
            if start >= length:
                break
            end = data.draw(st.integers(start + 1, length))
            spans.append(EntitySpan(0, start, end, data.draw(st.sampled_from(labels))))
            cursor = end
        taken = data.draw(st.permutations(spans)) if spans else []
        tags = spans_to_tags(length, taken)
        assert tags_to_spans(tags) == sorted(spans)


class TestSplit:
    def _docs(self, n):
        return parse_conll(
            "\n-DOCSTART-\n\n".join(f"tok{i}\tO\n" for i in range(n)), name="d"
        )

    def test_counts_and_disjointness(self):
        docs = self._docs(10)
        train, test = split_corpus(docs, 0.2, seed=42)
        assert (len(train), len(test)) == (8, 2)
        ids = {d.id for d in train} | {d.id for d in test}
        assert ids == {d.id for d in docs}
        assert not ({d.id for d in train} & {d.id for d in test})

    def test_determinism(self):
        docs = self._docs(10)
        a = split_corpus(docs, 0.3, seed=7)
        b = split_corpus(docs, 0.3, seed=7)
        assert [d.id for d in a[0]] == [d.id for d in b[0]]
        assert [d.id for d in a[1]] == [d.id for d in b[1]]

    def test_five_docs_fraction_point_two(self):
        train, test = split_corpus(self._docs(5), 0.2, seed=0)
        assert (len(train), len(test)) == (4, 1)

    def test_minimum_one_test_document(self):
        train, test = split_corpus(self._docs(3), 0.01, seed=0)
        assert len(test) == 1

    def test_requires_two_documents(self):
        with pytest.raises(ValidationError):
            split_corpus(self._docs(1), 0.2, seed=0)

    def test_rejects_bad_fraction(self):
        with pytest.raises(ValidationError):
            split_corpus(self._docs(4), 1.5, seed=0)


class TestCorpusStats:
    def test_empty(self):
        stats = corpus_stats([])
        assert (stats.document_count, stats.sentence_count, stats.token_count) == (0, 0, 0)
        assert stats.entity_counts == {}

    def test_toy_corpus_hand_tally(self, toy_corpus):
        stats = corpus_stats(toy_corpus)
        assert stats.document_count == 4
        assert stats.sentence_count == 20
        assert stats.token_count == 102
        assert stats.entity_counts == {"Symptom": 11, "Treatment": 8, "Biomarker": 8}

    def test_additivity(self, toy_corpus):
        a = corpus_stats(toy_corpus[:2])
        b = corpus_stats(toy_corpus[2:])
        whole = corpus_stats(toy_corpus)
        assert whole.document_count == a.document_count + b.document_count
        assert whole.sentence_count == a.sentence_count + b.sentence_count
        assert whole.token_count == a.token_count + b.token_count
        for lab in set(a.entity_counts) | set(b.entity_counts):
            assert whole.entity_counts[lab] == a.entity_counts.get(lab, 0) + b.entity_counts.get(lab, 0)


class TestTokenizeRaw:
    def test_simple_sentence(self):
        sents = tokenize_raw("Fever persisted.")
        assert len(sents) == 1
        assert sents[0].texts == ["Fever", "persisted", "."]
        assert all(t.tag == "O" for t in sents[0].tokens)

    def test_punctuation_and_hyphens(self):
        sents = tokenize_raw("ANA (positive), anti-dsDNA high.")
        tokens = sents[0].texts
        for expected in ["(", "positive", ")", ",", "anti-dsDNA"]:
            assert expected in tokens

    def test_empty(self):
        assert tokenize_raw("") == []

    def test_sentence_boundaries(self):
        sents = tokenize_raw("Fever rose. Rash appeared! Was it SLE? Yes.")
        assert len(sents) == 4


class TestTypes:
    def test_token_rejects_whitespace(self):
        with pytest.raises(ValidationError):
            Token("two words")
        with pytest.raises(ValidationError):
            Token("")

    def test_sentence_rejects_invalid_bio(self):
        with pytest.raises(TaggingError):
            Sentence((Token("a", "I-Symptom"),))
        with pytest.raises(ValidationError):
            Sentence(())

    def test_span_bounds(self):
        with pytest.raises(ValidationError):
            EntitySpan(0, 2, 2, "Symptom")
