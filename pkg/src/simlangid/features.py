"""Character/word n-gram extraction and sparse count or TF-IDF vectors.

Character n-grams slide over the raw sequence of Unicode code points,
whitespace included, with no boundary padding.  Word n-grams run over
whitespace tokens joined with a reserved separator.  Vocabularies assign
dense ids lexicographically so models serialize portably.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

from .corpus import Dataset
from .errors import ConfigError

# Joins word n-gram tokens: U+001F unit separator, vanishingly unlikely in text.
WORD_SEP = "\x1f"


@dataclass(frozen=True)
class FeatureConfig:
    """Which n-gram features to extract and how to weight them."""

    char_orders: tuple[int, ...] = (6,)
    word_orders: tuple[int, ...] = ()
    lowercase: bool = False
    min_doc_freq: int = 1
    weighting: str = "counts"  # "counts" | "tfidf"

    def __post_init__(self):
        object.__setattr__(self, "char_orders", tuple(sorted(set(self.char_orders))))
        object.__setattr__(self, "word_orders", tuple(sorted(set(self.word_orders))))
        if not self.char_orders and not self.word_orders:
            raise ConfigError("at least one char or word n-gram order is required")
        if any(n < 1 for n in self.char_orders + self.word_orders):
            raise ConfigError("n-gram orders must be >= 1")
        if self.min_doc_freq < 1:
            raise ConfigError("min_doc_freq must be >= 1")
        if self.weighting not in ("counts", "tfidf"):
            raise ConfigError(f"unknown weighting {self.weighting!r}")

    def to_dict(self) -> dict:
        return {
            "char_orders": list(self.char_orders),
            "word_orders": list(self.word_orders),
            "lowercase": self.lowercase,
            "min_doc_freq": self.min_doc_freq,
            "weighting": self.weighting,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FeatureConfig":
        return cls(
            char_orders=tuple(doc.get("char_orders", ())),
            word_orders=tuple(doc.get("word_orders", ())),
            lowercase=bool(doc.get("lowercase", False)),
            min_doc_freq=int(doc.get("min_doc_freq", 1)),
            weighting=doc.get("weighting", "counts"),
        )


def extract_char_ngrams(text: str, n: int) -> Counter:
    """All length-n windows over the text's code points; short texts yield nothing."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def extract_word_ngrams(text: str, n: int) -> Counter:
    """N-grams over whitespace tokens, joined with WORD_SEP."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    tokens = text.split()
    if n == 1:
        return Counter(tokens)
    return Counter(WORD_SEP.join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def extract_features(text: str, cfg: FeatureConfig) -> Counter:
    """Combined feature multiset for one text (lowercasing applied here).

    Feature strings from different extractors are merged as-is; with the
    default char-only configs no collisions are possible.
    """
    if cfg.lowercase:
        text = text.lower()
    feats: Counter = Counter()
    for n in cfg.char_orders:
        feats.update(extract_char_ngrams(text, n))
    for n in cfg.word_orders:
        feats.update(extract_word_ngrams(text, n))
    return feats


@dataclass(frozen=True)
class Vocabulary:
    """Feature strings indexed 0..V-1 (lexicographic) plus document frequencies."""

    features: tuple[str, ...]
    doc_freq: tuple[int, ...]
    n_docs: int

    def __post_init__(self):
        if len(self.features) != len(self.doc_freq):
            raise ConfigError("features/doc_freq length mismatch")
        if self.n_docs < 1:
            raise ConfigError("n_docs must be >= 1")
        for df in self.doc_freq:
            if not 1 <= df <= self.n_docs:
                raise ConfigError(f"doc_freq {df} outside [1, {self.n_docs}]")
        object.__setattr__(self, "_ids", {f: i for i, f in enumerate(self.features)})

    def __len__(self) -> int:
        return len(self.features)

    def get(self, feature: str):
        """Dense id for a feature, or None when out of vocabulary."""
        return self._ids.get(feature)


def build_vocabulary(ds: Dataset, cfg: FeatureConfig) -> Vocabulary:
    """Vocabulary over all features of ``ds`` with document frequency >= cfg.min_doc_freq."""
    if len(ds) == 0:
        raise ConfigError("cannot build a vocabulary from an empty dataset")
    df: Counter = Counter()
    for inst in ds.instances:
        df.update(set(extract_features(inst.text, cfg)))
    kept = sorted(f for f, c in df.items() if c >= cfg.min_doc_freq)
    if not kept:
        raise ConfigError(
            f"empty vocabulary: no feature reaches min_doc_freq={cfg.min_doc_freq}"
        )
    return Vocabulary(tuple(kept), tuple(df[f] for f in kept), len(ds))


@dataclass(frozen=True)
class FeatureVector:
    """Sparse vector: parallel (ids, weights), ids strictly increasing, no zeros."""

    ids: tuple[int, ...]
    weights: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.ids)

    def items(self):
        return zip(self.ids, self.weights)


def vectorize(text: str, vocab: Vocabulary, cfg: FeatureConfig) -> FeatureVector:
    """Sparse vector of in-vocabulary features.

    counts mode: raw term counts.  tfidf mode: tf * (ln((1+n_docs)/(1+df)) + 1),
    then L2-normalized.  Out-of-vocabulary features are dropped.
    """
    counts = extract_features(text, cfg)
    pairs = []
    for feat, c in counts.items():
        fid = vocab.get(feat)
        if fid is not None:
            pairs.append((fid, float(c)))
    if not pairs:
        return FeatureVector((), ())
    pairs.sort()
    ids = tuple(i for i, _ in pairs)
    weights = [c for _, c in pairs]
    if cfg.weighting == "tfidf":
        weights = [
            c * (math.log((1 + vocab.n_docs) / (1 + vocab.doc_freq[i])) + 1.0)
            for i, c in zip(ids, weights)
        ]
        norm = math.sqrt(sum(w * w for w in weights))
        weights = [w / norm for w in weights]
    return FeatureVector(ids, tuple(weights))


def vocabulary_to_dict(vocab: Vocabulary) -> dict:
    return {
        "n_docs": vocab.n_docs,
        "features": [
            {"feature": f, "id": i, "doc_freq": vocab.doc_freq[i]}
            for i, f in enumerate(vocab.features)
        ],
    }


def vocabulary_from_dict(doc: Mapping) -> Vocabulary:
    entries = doc.get("features")
    if not isinstance(entries, list) or not entries:
        raise ConfigError('vocabulary document needs a non-empty "features" array')
    by_id = {}
    for entry in entries:
        by_id[int(entry["id"])] = (entry["feature"], int(entry["doc_freq"]))
    if sorted(by_id) != list(range(len(entries))):
        raise ConfigError("vocabulary ids must be 0..V-1 with no gaps")
    feats = tuple(by_id[i][0] for i in range(len(entries)))
    dfs = tuple(by_id[i][1] for i in range(len(entries)))
    return Vocabulary(feats, dfs, int(doc["n_docs"]))
