"""Community x feature matrices and tertile discretization.

Features are unigram words, whole hashtags, and (optionally) topic
proportions. Raw values are per-community counts or relative frequencies;
``fit_bins`` learns nearest-rank tertile cut points over the training
communities and ``apply_bins`` maps raw values into ordinal bins {0,1,2}.
"""

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils import check_array

from .corpus import CommunityCorpus
from .exceptions import FoodquizError, FormatError
from .text import tokenize

RAW_COUNT = "raw_count"
RELATIVE_FREQUENCY = "relative_frequency"
NORMALIZATIONS = (RAW_COUNT, RELATIVE_FREQUENCY)

WORD = "word"
HASHTAG = "hashtag"
TOPIC = "topic"


@dataclass(frozen=True, order=True)
class FeatureId:
    kind: str
    key: str

    def __post_init__(self):
        # feature ids key every answer map and tree traversal; cache the hash
        object.__setattr__(self, "_hash", hash((self.kind, self.key)))

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return f"{self.kind}:{self.key}"

    @classmethod
    def parse(cls, s: str) -> "FeatureId":
        kind, _, key = s.partition(":")
        if kind not in (WORD, HASHTAG, TOPIC) or not key:
            raise FormatError(f"bad feature id '{s}'")
        return cls(kind, key)


class TertileDiscretizer(TransformerMixin, BaseEstimator):
    """Discretize each column into 3 ordinal bins by nearest-rank tertiles.

    For a column with sorted values v[0..n-1], the cut points are
    t1 = v[floor((n-1)/3)] and t2 = v[floor(2(n-1)/3)], and a value x maps
    to bin = (x > t1) + (x > t2). A constant column gets t1 == t2 and all
    training values bin to 0.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        n = X.shape[0]
        v = np.sort(X, axis=0)
        self.t1_ = v[(n - 1) // 3].copy()
        self.t2_ = v[(2 * (n - 1)) // 3].copy()
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        if not hasattr(self, "t1_"):
            raise NotFittedError("TertileDiscretizer is not fitted")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return (X > self.t1_).astype(np.int8) + (X > self.t2_).astype(np.int8)


@dataclass
class RawMatrix:
    """Per-community raw feature values plus the vocabulary that defines them."""

    communities: list[str]
    features: list[FeatureId]
    values: np.ndarray  # shape (n_communities, n_features), float64
    normalization: str
    min_count: int
    topic_top_tokens: dict[str, list[str]] = field(default_factory=dict)

    def column(self, feature: FeatureId) -> np.ndarray:
        return self.values[:, self.features.index(feature)]

    def value(self, community: str, feature: FeatureId) -> float:
        return float(self.values[self.communities.index(community), self.features.index(feature)])


@dataclass
class FeatureSpace:
    """Ordered features with fitted tertile thresholds."""

    features: list[FeatureId]
    t1: np.ndarray
    t2: np.ndarray
    normalization: str
    min_count: int
    topic_top_tokens: dict[str, list[str]] = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self._index = {f: i for i, f in enumerate(self.features)}
        if np.any(self.t1 > self.t2):
            raise FoodquizError("tertile thresholds violate t1 <= t2")

    def index_of(self, feature: FeatureId) -> int:
        return self._index[feature]

    def __contains__(self, feature: FeatureId) -> bool:
        return feature in self._index

    def thresholds(self, feature: FeatureId) -> tuple[float, float]:
        i = self._index[feature]
        return float(self.t1[i]), float(self.t2[i])

    def bin_value(self, feature: FeatureId, raw: float) -> int:
        t1, t2 = self.thresholds(feature)
        return int(raw > t1) + int(raw > t2)

    def bin_row(self, row: dict[FeatureId, float]) -> dict[FeatureId, int]:
        """Bin an unseen row with training thresholds; absent features raw 0."""
        return {f: self.bin_value(f, row.get(f, 0.0)) for f in self.features}

    def to_dict(self) -> dict:
        out = {
            "features": [
                {"kind": f.kind, "key": f.key, "t1": float(a), "t2": float(b)}
                for f, a, b in zip(self.features, self.t1, self.t2)
            ],
            "normalization": self.normalization,
            "min_count": self.min_count,
        }
        if self.topic_top_tokens:
            out["topics"] = self.topic_top_tokens
        if self.provenance:
            out["provenance"] = self.provenance
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "FeatureSpace":
        feats = [FeatureId(e["kind"], e["key"]) for e in obj["features"]]
        return cls(
            features=feats,
            t1=np.array([e["t1"] for e in obj["features"]], dtype=np.float64),
            t2=np.array([e["t2"] for e in obj["features"]], dtype=np.float64),
            normalization=obj["normalization"],
            min_count=obj["min_count"],
            topic_top_tokens=obj.get("topics", {}),
            provenance=obj.get("provenance", {}),
        )

    def save(self, path: str | Path) -> None:
        from .canonical import dumps

        Path(path).write_text(dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "FeatureSpace":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class BinnedMatrix:
    """Ordinal bins per community, keeping the raw matrix for audit."""

    communities: list[str]
    features: list[FeatureId]
    bins: np.ndarray  # shape (n_communities, n_features), int8
    raw_values: np.ndarray

    def row(self, community: str) -> dict[FeatureId, int]:
        i = self.communities.index(community)
        return {f: int(b) for f, b in zip(self.features, self.bins[i])}

    def bin(self, community: str, feature: FeatureId) -> int:
        return int(self.bins[self.communities.index(community), self.features.index(feature)])


def count_features(
    corpus: CommunityCorpus,
    min_count: int = 3,
    normalization: str = RELATIVE_FREQUENCY,
) -> RawMatrix:
    """Count word/hashtag features per community.

    Tokens with a global count below ``min_count`` are excluded.
    relative_frequency divides each count by the community's total token
    count (communities with no tokens get 0).
    """
    if normalization not in NORMALIZATIONS:
        raise FoodquizError(f"unknown normalization '{normalization}'")
    if corpus.total_documents() == 0:
        raise FoodquizError("corpus has no documents")

    communities = corpus.communities()
    per_community: dict[str, Counter] = {c: Counter() for c in communities}
    totals: dict[str, int] = {c: 0 for c in communities}
    global_counts: Counter = Counter()
    for community in communities:
        for doc in corpus.documents[community]:
            toks = tokenize(doc.text)
            per_community[community].update(toks)
            totals[community] += len(toks)
            global_counts.update(toks)

    vocab = sorted(t for t, n in global_counts.items() if n >= min_count)
    if not vocab:
        raise FoodquizError(
            f"no features survive min_count={min_count} "
            f"(distinct tokens: {len(global_counts)}, "
            f"max global count: {max(global_counts.values(), default=0)})"
        )
    features = sorted(
        FeatureId(HASHTAG if t.startswith("#") else WORD, t) for t in vocab
    )

    values = np.zeros((len(communities), len(features)), dtype=np.float64)
    for i, community in enumerate(communities):
        counts = per_community[community]
        for j, feat in enumerate(features):
            values[i, j] = counts.get(feat.key, 0)
        if normalization == RELATIVE_FREQUENCY and totals[community] > 0:
            values[i] /= totals[community]

    return RawMatrix(
        communities=communities,
        features=features,
        values=values,
        normalization=normalization,
        min_count=min_count,
    )


def append_topic_features(raw: RawMatrix, community_topics: np.ndarray, top_tokens: dict[str, list[str]]) -> RawMatrix:
    """Extend a raw matrix with per-community topic proportion columns.

    ``community_topics`` rows must align with ``raw.communities``; topic
    proportions are already in [0,1] so normalization does not touch them.
    """
    if community_topics.shape[0] != len(raw.communities):
        raise FoodquizError("topic matrix rows do not match communities")
    k = community_topics.shape[1]
    topic_features = [FeatureId(TOPIC, str(i)) for i in range(k)]
    return RawMatrix(
        communities=raw.communities,
        features=raw.features + topic_features,
        values=np.hstack([raw.values, community_topics.astype(np.float64)]),
        normalization=raw.normalization,
        min_count=raw.min_count,
        topic_top_tokens=dict(top_tokens),
    )


def fit_bins(raw: RawMatrix, provenance: dict | None = None) -> FeatureSpace:
    """Fit per-feature tertile thresholds over the training communities."""
    if not raw.communities:
        raise FoodquizError("cannot fit bins with zero communities")
    disc = TertileDiscretizer().fit(raw.values)
    return FeatureSpace(
        features=list(raw.features),
        t1=disc.t1_,
        t2=disc.t2_,
        normalization=raw.normalization,
        min_count=raw.min_count,
        topic_top_tokens=dict(raw.topic_top_tokens),
        provenance=provenance or {},
    )


def apply_bins(raw: RawMatrix, space: FeatureSpace) -> BinnedMatrix:
    """Bin a raw matrix with fitted thresholds.

    Columns are aligned by feature id; a feature the row set lacks is
    treated as raw 0.
    """
    aligned = np.zeros((len(raw.communities), len(space.features)), dtype=np.float64)
    present = {f: j for j, f in enumerate(raw.features)}
    for i, feat in enumerate(space.features):
        j = present.get(feat)
        if j is not None:
            aligned[:, i] = raw.values[:, j]
    bins = (aligned > space.t1).astype(np.int8) + (aligned > space.t2).astype(np.int8)
    return BinnedMatrix(
        communities=list(raw.communities),
        features=list(space.features),
        bins=bins,
        raw_values=aligned,
    )
