"""Fixed word-embedding tables and character vocabularies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Document
from .errors import FormatError, ValidationError


@dataclass
class EmbeddingTable:
    """Word -> vector lookup, total over all strings.

    Lookup order: exact match, then lowercased match, then the unk vector.
    Vectors are never trained; the unk vector is the zero vector.
    """

    dim: int
    vectors: dict[str, np.ndarray]
    unk_vector: np.ndarray = None

    def __post_init__(self):
        if self.unk_vector is None:
            self.unk_vector = np.zeros(self.dim)
        for word, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise ValidationError(f"vector for {word!r} has shape {vec.shape}, expected ({self.dim},)")

    def lookup(self, word: str) -> np.ndarray:
        vec = self.vectors.get(word)
        if vec is None:
            vec = self.vectors.get(word.lower())
        return vec if vec is not None else self.unk_vector

    def __len__(self):
        return len(self.vectors)


def load_embeddings(data: bytes | str) -> EmbeddingTable:
    """Parse the text embedding format: optional `<count> <dim>` header, then
    one `<word> <v1> ... <vdim>` line per word."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = [ln for ln in data.split("\n")]

    vectors: dict[str, np.ndarray] = {}
    dim = None
    start = 0

    # Header detection: exactly two integer fields.
    if lines and lines[0].strip():
        fields = lines[0].split()
        if len(fields) == 2:
            try:
                int(fields[0]), int(fields[1])
                start = 1
            except ValueError:
                pass

    for line_no in range(start, len(lines)):
        line = lines[line_no].strip()
        if not line:
            continue
        fields = line.split(" ")
        if len(fields) < 2:
            raise FormatError(f"expected a word and at least one value: {line!r}", line=line_no + 1)
        word = fields[0]
        try:
            vec = np.array([float(x) for x in fields[1:]])
        except ValueError:
            raise FormatError(f"non-numeric vector component: {line!r}", line=line_no + 1) from None
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise FormatError(f"vector of length {len(vec)}, expected {dim}", line=line_no + 1)
        vectors[word] = vec

    if dim is None:
        raise FormatError("embedding file contains no vectors")
    return EmbeddingTable(dim=dim, vectors=vectors)


@dataclass(frozen=True)
class CharVocab:
    """Character alphabet plus reserved unk and pad entries.

    Characters occupy indices [0, len(chars)); unk and pad follow.
    """

    chars: tuple[str, ...]
    index: dict[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "chars", tuple(self.chars))
        if len(set(self.chars)) != len(self.chars):
            raise ValidationError("duplicate characters in vocabulary")
        object.__setattr__(self, "index", {c: i for i, c in enumerate(self.chars)})

    @property
    def unk_index(self) -> int:
        return len(self.chars)

    @property
    def pad_index(self) -> int:
        return len(self.chars) + 1

    def __len__(self):
        return len(self.chars) + 2

    def encode(self, text: str) -> list[int]:
        unk = self.unk_index
        return [self.index.get(c, unk) for c in text]


def build_char_vocab(docs: list[Document]) -> CharVocab:
    """Collect every character of every token, sorted by code point."""
    chars = set()
    for doc in docs:
        for sent in doc.sentences:
            for tok in sent.tokens:
                chars.update(tok.text)
    if not chars:
        raise ValidationError("cannot build a character vocabulary from an empty corpus")
    return CharVocab(tuple(sorted(chars)))
