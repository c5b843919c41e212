"""Segment featurization: a TF-IDF block over a fitted vocabulary joined
with a block of boolean keyword indicators.

Weighting matches the common library default so results stay comparable:
idf(t) = ln((1 + N) / (1 + df(t))) + 1 with raw term counts, then the
TF-IDF block is scaled to unit Euclidean norm. Indicator columns are 0/1
substring tests over the normalized segment.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import EmptyCorpus
from .labels import CLASSIFIER_LABEL_SET
from .policy_text import normalize_segment

MIN_TOKEN_LEN = 2


def tokenize(text: str) -> list[str]:
    """Whitespace tokens of an already-normalized segment."""
    return [t for t in text.split() if len(t) >= MIN_TOKEN_LEN]


def _data_path(name: str) -> Path:
    return Path(str(resources.files("privaudit").joinpath("data", name)))


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Vendored stopword list, one token per line."""
    p = Path(path) if path else _data_path("stopwords.txt")
    return frozenset(
        line.strip() for line in p.read_text(encoding="utf-8").splitlines() if line.strip()
    )


@dataclass
class Vocabulary:
    """Token universe fitted on a training corpus.

    Column indices are dense 0..V-1 in lexicographic token order, and no
    stopword ever becomes a token.
    """

    index: dict[str, int]
    document_frequency: dict[str, int]
    n_documents: int
    stopwords: frozenset[str] = frozenset()

    def __len__(self) -> int:
        return len(self.index)

    def idf(self, token: str) -> float:
        df = self.document_frequency[token]
        return math.log((1 + self.n_documents) / (1 + df)) + 1.0

    def to_dict(self) -> dict:
        # Flat layout {token: [index, df], "n_documents": N}. Safe because
        # normalized tokens are letters only and cannot collide with the key.
        out: dict = {t: [i, self.document_frequency[t]] for t, i in self.index.items()}
        out["n_documents"] = self.n_documents
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        n_documents = int(data["n_documents"])
        index = {}
        df = {}
        for token, pair in data.items():
            if token == "n_documents":
                continue
            index[token] = int(pair[0])
            df[token] = int(pair[1])
        return cls(index, df, n_documents)


def fit_vocabulary(
    corpus: list[str], stopwords: frozenset[str] = frozenset()
) -> Vocabulary:
    """Fit a vocabulary on normalized segment texts.

    Document frequency counts segments containing a token at least once.
    An all-empty corpus yields an empty vocabulary, not an error.
    """
    if not corpus:
        raise EmptyCorpus("cannot fit a vocabulary on an empty corpus")
    df: Counter[str] = Counter()
    for doc in corpus:
        for token in set(tokenize(doc)) - stopwords:
            df[token] += 1
    index = {t: i for i, t in enumerate(sorted(df))}
    return Vocabulary(index, dict(df), len(corpus), frozenset(stopwords))


def tfidf_vector(segment: str, vocab: Vocabulary) -> dict[int, float]:
    """Sparse unit-norm TF-IDF values for one normalized segment.

    Tokens outside the vocabulary are ignored; a segment with no known
    tokens yields the empty vector (norm step skipped).
    """
    counts = Counter(t for t in tokenize(segment) if t in vocab.index)
    values = {vocab.index[t]: c * vocab.idf(t) for t, c in counts.items()}
    norm = math.sqrt(sum(v * v for v in values.values()))
    if norm:
        values = {i: v / norm for i, v in values.items()}
    return values


@dataclass
class KeywordCatalog:
    """Hand-crafted trigger strings, one indicator column per trigger.

    `columns` holds (label, normalized trigger) in column order: labels
    sorted lexicographically, triggers in their listed order. `raw` keeps
    the original mapping for round-tripping.
    """

    columns: tuple[tuple[str, str], ...]
    raw: dict[str, list[str]]

    def __len__(self) -> int:
        return len(self.columns)

    @classmethod
    def from_mapping(cls, mapping: dict[str, list[str]]) -> "KeywordCatalog":
        columns = []
        for label in sorted(mapping):
            if label not in CLASSIFIER_LABEL_SET:
                raise ValueError(f"unknown catalog label: {label}")
            for trigger in mapping[label]:
                normalized = normalize_segment(trigger)
                if not normalized:
                    raise ValueError(f"trigger {trigger!r} normalizes to nothing")
                columns.append((label, normalized))
        return cls(tuple(columns), {k: list(v) for k, v in mapping.items()})

    @classmethod
    def load(cls, path: str | Path | None = None) -> "KeywordCatalog":
        p = Path(path) if path else _data_path("keyword_catalog.json")
        return cls.from_mapping(json.loads(p.read_text(encoding="utf-8")))


def indicator_vector(segment: str, catalog: KeywordCatalog) -> list[int]:
    """1 per catalog column whose trigger occurs as a substring."""
    return [1 if trigger in segment else 0 for _, trigger in catalog.columns]


@dataclass(frozen=True)
class FeatureVector:
    """Sparse concatenation of the TF-IDF and indicator blocks.

    Columns below `tfidf_dim` belong to the TF-IDF block; the rest are
    indicators. `entries` is sorted by column index.
    """

    entries: tuple[tuple[int, float], ...]
    tfidf_dim: int
    total_dim: int


def featurize(segment: str, vocab: Vocabulary, catalog: KeywordCatalog) -> FeatureVector:
    """Full feature vector for one normalized segment."""
    entries = sorted(tfidf_vector(segment, vocab).items())
    base = len(vocab)
    entries += [
        (base + j, 1.0)
        for j, flag in enumerate(indicator_vector(segment, catalog))
        if flag
    ]
    return FeatureVector(tuple(entries), base, base + len(catalog))
