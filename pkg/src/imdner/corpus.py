"""Corpus model: tokens, BIO tags, entity spans, CoNLL I/O, splits and stats.

All values are plain frozen dataclasses, immutable after construction and
safe to share across threads.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, SchemaError, TaggingError, ValidationError

# Table of the 12 entity categories, in canonical order.
DEFAULT_LABELS = (
    "Bacterial_Infection",
    "Biomarker",
    "Fungal_Infection",
    "Geographical_Location",
    "Immune_Mediated_Disease",
    "Other_Disease_Disorder",
    "Other_Test",
    "Rad_Test",
    "Symptom",
    "Test_Result",
    "Treatment",
    "Viral_Infection",
)

_LABEL_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class LabelSet:
    """Ordered set of entity labels defining the tag vocabulary.

    The tag vocabulary is "O" at index 0, then B-/I- pairs in label order,
    so num_tags == 2 * len(labels) + 1.
    """

    labels: tuple[str, ...] = DEFAULT_LABELS

    def __post_init__(self):
        if not self.labels:
            raise ValidationError("label set must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("duplicate labels in label set")
        for lab in self.labels:
            if not _LABEL_RE.match(lab):
                raise ValidationError(f"invalid label name: {lab!r}")
        object.__setattr__(self, "labels", tuple(self.labels))

    def __contains__(self, label):
        return label in self.labels

    def __len__(self):
        return len(self.labels)

    @property
    def tags(self) -> tuple[str, ...]:
        out = ["O"]
        for lab in self.labels:
            out.append(f"B-{lab}")
            out.append(f"I-{lab}")
        return tuple(out)

    @property
    def num_tags(self) -> int:
        return 2 * len(self.labels) + 1

    def tag_index(self, tag: str) -> int:
        try:
            return self.tags.index(tag)
        except ValueError:
            raise SchemaError(f"unknown tag {tag!r}") from None


def _split_tag(tag):
    """Return (prefix, label) where prefix is 'O', 'B' or 'I'."""
    if tag == "O":
        return "O", None
    if tag.startswith("B-") or tag.startswith("I-"):
        return tag[0], tag[2:]
    raise TaggingError(f"malformed tag {tag!r}")


def _check_tag(tag, labels: LabelSet):
    prefix, label = _split_tag(tag)
    if label is not None and label not in labels:
        raise SchemaError(f"unknown label {label!r} in tag {tag!r}")
    return prefix, label


def validate_bio(tags, labels: LabelSet | None = None, where=""):
    """Raise TaggingError if the tag sequence is not BIO-valid."""
    prev_prefix, prev_label = "O", None
    for i, tag in enumerate(tags):
        if labels is not None:
            prefix, label = _check_tag(tag, labels)
        else:
            prefix, label = _split_tag(tag)
        if prefix == "I":
            if prev_prefix == "O" or prev_label != label:
                loc = f" at token {i}" + (f" ({where})" if where else "")
                raise TaggingError(f"{tag} follows {'O' if prev_prefix == 'O' else prev_prefix + '-' + str(prev_label)}{loc}")
        prev_prefix, prev_label = prefix, label


@dataclass(frozen=True)
class Token:
    text: str
    tag: str = "O"

    def __post_init__(self):
        if not self.text or any(c.isspace() for c in self.text):
            raise ValidationError(f"token text must be non-empty and whitespace-free: {self.text!r}")
        _split_tag(self.tag)


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValidationError("sentence must contain at least one token")
        validate_bio([t.tag for t in self.tokens])

    def __len__(self):
        return len(self.tokens)

    @property
    def texts(self):
        return [t.text for t in self.tokens]

    @property
    def tags(self):
        return [t.tag for t in self.tokens]


@dataclass(frozen=True)
class Document:
    id: str
    sentences: tuple[Sentence, ...]

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if not self.sentences:
            raise ValidationError(f"document {self.id!r} has no sentences")


@dataclass(frozen=True, order=True)
class EntitySpan:
    """Half-open token range [start, end) with a label, within one sentence."""

    sentence_index: int
    start: int
    end: int
    label: str

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValidationError(f"bad span bounds [{self.start}, {self.end})")


@dataclass(frozen=True)
class CorpusStats:
    document_count: int
    sentence_count: int
    token_count: int
    entity_counts: dict[str, int] = field(default_factory=dict)


def tags_to_spans(sentence: Sentence | list[str], sentence_index: int = 0) -> list[EntitySpan]:
    """Decode a BIO-valid tag sequence into sorted, non-overlapping spans."""
    tags = sentence.tags if isinstance(sentence, Sentence) else list(sentence)
    spans = []
    open_start, open_label = None, None
    for i, tag in enumerate(tags):
        prefix, label = _split_tag(tag)
        if open_start is not None and (prefix != "I" or label != open_label):
            spans.append(EntitySpan(sentence_index, open_start, i, open_label))
            open_start, open_label = None, None
        if prefix == "B":
            open_start, open_label = i, label
    if open_start is not None:
        spans.append(EntitySpan(sentence_index, open_start, len(tags), open_label))
    return spans


def spans_to_tags(length: int, spans: list[EntitySpan]) -> list[str]:
    """Encode spans as a BIO tag list; inverse of tags_to_spans."""
    tags = ["O"] * length
    occupied = [False] * length
    for s in sorted(spans):
        if s.end > length:
            raise ValidationError(f"span {s} out of bounds for length {length}")
        if any(occupied[s.start:s.end]):
            raise ValidationError(f"span {s} overlaps another span")
        for i in range(s.start, s.end):
            occupied[i] = True
        tags[s.start] = f"B-{s.label}"
        for i in range(s.start + 1, s.end):
            tags[i] = f"I-{s.label}"
    return tags


DOCSTART = "-DOCSTART-"


def parse_conll(data: bytes | str, labels: LabelSet | None = None, name: str = "corpus") -> list[Document]:
    """Parse CoNLL-style text: one `token<TAB>tag` per line, blank line ends a
    sentence, a -DOCSTART- line starts a new document."""
    labels = labels or LabelSet()
    if isinstance(data, bytes):
        data = data.decode("utf-8")

    groups: list[list[Sentence]] = []
    cur_sentences: list[Sentence] = []
    cur_tokens: list[Token] = []

    def close_sentence(line_no):
        nonlocal cur_tokens
        if cur_tokens:
            tags = [t.tag for t in cur_tokens]
            validate_bio(tags, labels, where=f"{name} near line {line_no}")
            cur_sentences.append(Sentence(tuple(cur_tokens)))
            cur_tokens = []

    def close_document():
        nonlocal cur_sentences
        if cur_sentences:
            groups.append(cur_sentences)
            cur_sentences = []

    line_no = 0
    for line_no, line in enumerate(data.split("\n"), start=1):
        if line.strip() == "":
            close_sentence(line_no)
            continue
        if line == DOCSTART:
            close_sentence(line_no)
            close_document()
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(f"expected 2 tab-separated fields, got {len(fields)}: {line!r}", line=line_no)
        text, tag = fields
        _check_tag(tag, labels)
        try:
            cur_tokens.append(Token(text, tag))
        except ValidationError as e:
            raise ParseError(str(e), line=line_no) from e
    close_sentence(line_no)
    close_document()

    if len(groups) == 1:
        return [Document(name, tuple(groups[0]))]
    return [Document(f"{name}#{k}", tuple(g)) for k, g in enumerate(groups)]


def serialize_conll(docs: list[Document]) -> str:
    """Inverse of parse_conll (document ids are not preserved in the format)."""
    chunks = []
    for d, doc in enumerate(docs):
        if d > 0:
            chunks.append(f"{DOCSTART}\n\n")
        for sent in doc.sentences:
            for tok in sent.tokens:
                chunks.append(f"{tok.text}\t{tok.tag}\n")
            chunks.append("\n")
    return "".join(chunks)


def split_corpus(docs: list[Document], test_fraction: float, seed: int):
    """Document-level train/test split, deterministic for a given seed."""
    if len(docs) < 2:
        raise ValidationError("need at least 2 documents to split")
    if not (0.0 < test_fraction < 1.0):
        raise ValidationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n_test = int(np.floor(test_fraction * len(docs) + 0.5))
    n_test = max(1, min(n_test, len(docs) - 1))
    perm = np.random.default_rng(seed).permutation(len(docs))
    test_idx = set(int(i) for i in perm[:n_test])
    train = [d for i, d in enumerate(docs) if i not in test_idx]
    test = [d for i, d in enumerate(docs) if i in test_idx]
    return train, test


def corpus_stats(docs: list[Document]) -> CorpusStats:
    entity_counts: dict[str, int] = {}
    sentence_count = 0
    token_count = 0
    for doc in docs:
        for sent in doc.sentences:
            sentence_count += 1
            token_count += len(sent)
            for span in tags_to_spans(sent):
                entity_counts[span.label] = entity_counts.get(span.label, 0) + 1
    return CorpusStats(len(docs), sentence_count, token_count, entity_counts)


_SENT_BOUNDARY = re.compile(r"(?<=[.!?])\s+")
_PUNCT = set(string.punctuation)


def _split_token(word: str) -> list[str]:
    """Peel leading/trailing punctuation into their own tokens.

    Internal hyphens and slashes are left alone so forms like "anti-dsDNA"
    survive intact.
    """
    leading, trailing = [], []
    core = word
    while len(core) > 1 and core[0] in _PUNCT:
        leading.append(core[0])
        core = core[1:]
    while len(core) > 1 and core[-1] in _PUNCT:
        trailing.append(core[-1])
        core = core[:-1]
    return leading + [core] + list(reversed(trailing))


def tokenize_raw(text: str) -> list[Sentence]:
    """Tokenize raw text into untagged (all-"O") sentences."""
    sentences = []
    for chunk in _SENT_BOUNDARY.split(text):
        words = chunk.split()
        if not words:
            continue
        tokens = []
        for w in words:
            tokens.extend(Token(p) for p in _split_token(w))
        sentences.append(Sentence(tuple(tokens)))
    return sentences
