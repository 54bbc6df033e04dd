"""Compact random forest over ordinal 3-bin features.

Every internal node tests ``bin(feature) > t`` with t in {0, 1}; trees are
shallow by construction (default 7 trees, depth 3). Training, bootstrap
resampling, and per-split feature subsampling all draw from seed streams
derived from the params seed, so a fixed seed reproduces the forest byte
for byte.
"""

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils import check_array

from . import canonical
from .corpus import CommunityLabels
from .exceptions import FoodquizError, FormatError
from .features import BinnedMatrix, FeatureId

GINI = "gini"
INFO_GAIN = "info_gain"
CRITERIA = (GINI, INFO_GAIN)


def derive_seed(*parts: int) -> int:
    """Stable 64-bit seed from integer parts (tree/fold seed streams)."""
    return int(np.random.SeedSequence(entropy=list(parts)).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 7
    max_depth: int = 3
    feature_subsample: Optional[int] = None  # None = ceil(sqrt(n_features))
    bootstrap: bool = True
    seed: int = 0
    split_criterion: str = GINI

    def __post_init__(self):
        if self.n_trees < 1:
            raise FoodquizError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise FoodquizError("max_depth must be >= 1")
        if self.split_criterion not in CRITERIA:
            raise FoodquizError(f"unknown split criterion '{self.split_criterion}'")
        if self.seed < 0:
            raise FoodquizError("seed must be a non-negative 64-bit integer")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "feature_subsample": self.feature_subsample,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
            "split_criterion": self.split_criterion,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ForestParams":
        return cls(**obj)


@dataclass
class DecisionNode:
    """Internal predicate node or leaf; leaves carry the class counts.

    ``feature`` is a FeatureId in a trained Forest; inside the bare
    estimator it is the integer column index.
    """

    feature: Optional[FeatureId | int] = None
    threshold: Optional[int] = None  # predicate is bin(feature) > threshold
    left: Optional["DecisionNode"] = None  # predicate false
    right: Optional["DecisionNode"] = None  # predicate true
    label: Optional[bool] = None
    counts: Optional[tuple[int, int]] = None  # (n_false, n_true)

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"label": self.label, "counts": list(self.counts or (0, 0))}
        return {
            "feature": {"kind": self.feature.kind, "key": self.feature.key},
            "t": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "DecisionNode":
        if "feature" in obj:
            return cls(
                feature=FeatureId(obj["feature"]["kind"], obj["feature"]["key"]),
                threshold=int(obj["t"]),
                left=cls.from_dict(obj["left"]),
                right=cls.from_dict(obj["right"]),
            )
        return cls(label=bool(obj["label"]), counts=tuple(obj.get("counts", (0, 0))))


@dataclass(frozen=True)
class Prediction:
    label: bool
    votes_true: int
    votes_total: int
    tree_labels: tuple[bool, ...]
    tie: bool = False


def _impurity(n_false: int, n_true: int, criterion: str) -> float:
    n = n_false + n_true
    if n == 0:
        return 0.0
    p = n_true / n
    if criterion == GINI:
        return 1.0 - p * p - (1.0 - p) * (1.0 - p)
    h = 0.0
    for q in (p, 1.0 - p):
        if q > 0.0:
            h -= q * math.log2(q)
    return h


def split_gain(column, labels, t: int, criterion: str = GINI) -> float:
    """Impurity reduction of the predicate ``bin > t`` on one column.

    An empty side contributes zero-weighted impurity, so a non-separating
    predicate has gain 0.
    """
    if t not in (0, 1):
        raise FoodquizError(f"threshold must be 0 or 1, got {t}")
    column = np.asarray(column)
    labels = np.asarray(labels, dtype=bool)
    n = labels.size
    if n == 0:
        return 0.0
    parent = _impurity(int((~labels).sum()), int(labels.sum()), criterion)
    mask = column > t
    weighted = 0.0
    for side in (mask, ~mask):
        m = int(side.sum())
        if m:
            t_count = int(labels[side].sum())
            weighted += (m / n) * _impurity(m - t_count, t_count, criterion)
    return max(parent - weighted, 0.0)


class BinnedForestClassifier(ClassifierMixin, BaseEstimator):
    """Random forest over int bins {0,1,2} with boolean labels.

    Split candidates are the two ordinal cuts t in {0,1} on each sampled
    feature; ties between equal-gain splits break toward the lowest
    (feature index, t), which keeps training auditable.
    """

    def __init__(
        self,
        n_trees=7,
        max_depth=3,
        feature_subsample=None,
        bootstrap=True,
        seed=0,
        split_criterion=GINI,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.feature_subsample = feature_subsample
        self.bootstrap = bootstrap
        self.seed = seed
        self.split_criterion = split_criterion

    def fit(self, X, y):
        params = ForestParams(
            n_trees=self.n_trees,
            max_depth=self.max_depth,
            feature_subsample=self.feature_subsample,
            bootstrap=self.bootstrap,
            seed=self.seed,
            split_criterion=self.split_criterion,
        )
        X = check_array(X, dtype=np.int64)
        y = np.asarray(y, dtype=bool)
        if y.shape[0] != X.shape[0]:
            raise FoodquizError("X and y row counts differ")
        n, n_features = X.shape
        k = params.feature_subsample or math.ceil(math.sqrt(n_features))
        k = min(k, n_features)
        if len(np.unique(y)) < 2:
            warnings.warn("single-class training set: every tree is one leaf", stacklevel=2)

        self.trees_ = []
        for tree_idx in range(params.n_trees):
            rng = np.random.default_rng(derive_seed(params.seed, 1, tree_idx))
            idx = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
            self.trees_.append(self._grow(X, y, idx, 0, rng, k, params))
        self.n_features_in_ = n_features
        return self

    def _grow(self, X, y, idx, depth, rng, k, params) -> DecisionNode:
        sub = y[idx]
        n_true = int(sub.sum())
        n_false = sub.size - n_true
        counts = (n_false, n_true)
        # majority label; exact tie resolves to False deterministically
        label = n_true > n_false
        if depth >= params.max_depth or n_true == 0 or n_false == 0:
            return DecisionNode(label=label, counts=counts)

        candidates = np.sort(rng.choice(X.shape[1], size=k, replace=False))
        best_gain, best = 0.0, None
        for f in candidates:
            col = X[idx, f]
            for t in (0, 1):
                gain = split_gain(col, sub, t, params.split_criterion)
                if gain > best_gain:
                    best_gain, best = gain, (int(f), t)
        if best is None:
            return DecisionNode(label=label, counts=counts)

        f, t = best
        mask = X[idx, f] > t
        return DecisionNode(
            feature=f,
            threshold=t,
            left=self._grow(X, y, idx[~mask], depth + 1, rng, k, params),
            right=self._grow(X, y, idx[mask], depth + 1, rng, k, params),
        )

    def _tree_vote(self, node: DecisionNode, row: np.ndarray) -> bool:
        while not node.is_leaf:
            node = node.right if row[node.feature] > node.threshold else node.left
        return bool(node.label)

    def predict(self, X):
        if not hasattr(self, "trees_"):
            raise NotFittedError("BinnedForestClassifier is not fitted")
        X = check_array(X, dtype=np.int64)
        votes = np.zeros(X.shape[0], dtype=np.int64)
        for tree in self.trees_:
            votes += [self._tree_vote(tree, row) for row in X]
        return votes * 2 > len(self.trees_)


@dataclass
class Forest:
    """Trained forest with feature-id predicates and a training fingerprint."""

    params: ForestParams
    trees: list[DecisionNode]
    fingerprint: str
    feature_space_features: list[FeatureId] = field(default_factory=list)

    def internal_nodes(self) -> Iterator[DecisionNode]:
        def walk(node):
            if not node.is_leaf:
                yield node
                yield from walk(node.left)
                yield from walk(node.right)

        for tree in self.trees:
            yield from walk(tree)

    def predict(self, row: dict[FeatureId, int]) -> Prediction:
        """Majority vote over trees; a missing feature reads as bin 0.

        An even split predicts False and is flagged as a tie (cannot occur
        with an odd tree count).
        """
        tree_labels = []
        for tree in self.trees:
            node = tree
            while not node.is_leaf:
                b = row.get(node.feature, 0)
                node = node.right if b > node.threshold else node.left
            tree_labels.append(bool(node.label))
        votes_true = sum(tree_labels)
        total = len(tree_labels)
        return Prediction(
            label=votes_true * 2 > total,
            votes_true=votes_true,
            votes_total=total,
            tree_labels=tuple(tree_labels),
            tie=votes_true * 2 == total,
        )

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "trees": [t.to_dict() for t in self.trees],
            "fingerprint": self.fingerprint,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Forest":
        return cls(
            params=ForestParams.from_dict(obj["params"]),
            trees=[DecisionNode.from_dict(t) for t in obj["trees"]],
            fingerprint=obj["fingerprint"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(canonical.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Forest":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls.from_dict(obj)
        except (json.JSONDecodeError, KeyError) as exc:
            raise FormatError(f"bad forest file {path}: {exc}") from exc


def training_fingerprint(matrix: BinnedMatrix, labels: CommunityLabels, params: ForestParams) -> str:
    return canonical.fingerprint(
        {
            "communities": matrix.communities,
            "features": [str(f) for f in matrix.features],
            "bins": matrix.bins.tolist(),
            "labels": {c: labels.labels[c] for c in matrix.communities},
            "params": params.to_dict(),
        }
    )


def _remap_features(node: DecisionNode, features: list[FeatureId]) -> DecisionNode:
    if node.is_leaf:
        return node
    return DecisionNode(
        feature=features[node.feature],
        threshold=node.threshold,
        left=_remap_features(node.left, features),
        right=_remap_features(node.right, features),
    )


def train_forest(matrix: BinnedMatrix, labels: CommunityLabels, params: ForestParams) -> Forest:
    """Grow the forest on a binned community matrix."""
    if len(matrix.communities) < 2:
        raise FoodquizError("need at least 2 communities to train")
    missing = [c for c in matrix.communities if c not in labels.labels]
    if missing:
        raise FoodquizError(f"communities without labels: {missing}")
    y = np.array([labels.labels[c] for c in matrix.communities], dtype=bool)
    est = BinnedForestClassifier(**params.to_dict()).fit(matrix.bins, y)
    trees = [_remap_features(t, matrix.features) for t in est.trees_]
    return Forest(
        params=params,
        trees=trees,
        fingerprint=training_fingerprint(matrix, labels, params),
        feature_space_features=list(matrix.features),
    )


def majority_baseline(labels) -> float:
    """Accuracy of always predicting the most frequent class."""
    if isinstance(labels, CommunityLabels):
        values = list(labels.labels.values())
    else:
        values = [bool(v) for v in labels]
    if not values:
        return 0.0
    n_true = sum(values)
    return max(n_true, len(values) - n_true) / len(values)


@dataclass
class LoocvFold:
    community: str
    actual: bool
    predicted: bool
    votes_true: int
    votes_total: int

    @property
    def correct(self) -> bool:
        return self.actual == self.predicted


@dataclass
class LoocvResult:
    accuracy: float
    baseline: float
    folds: list[LoocvFold]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "baseline": self.baseline,
            "folds": [
                {
                    "community": f.community,
                    "actual": f.actual,
                    "predicted": f.predicted,
                    "votes_true": f.votes_true,
                    "votes_total": f.votes_total,
                    "correct": f.correct,
                }
                for f in self.folds
            ],
        }


def loocv(matrix: BinnedMatrix, labels: CommunityLabels, params: ForestParams) -> LoocvResult:
    """Leave-one-out cross-validation with fold-specific seed streams."""
    n = len(matrix.communities)
    if n < 2:
        raise FoodquizError("LOOCV needs at least 2 rows")
    y = np.array([labels.labels[c] for c in matrix.communities], dtype=bool)
    folds = []
    for i in range(n):
        keep = np.arange(n) != i
        fold_params = replace(params, seed=derive_seed(params.seed, 2, i))
        est = BinnedForestClassifier(**fold_params.to_dict()).fit(matrix.bins[keep], y[keep])
        row = matrix.bins[i].astype(np.int64)
        tree_labels = [est._tree_vote(t, row) for t in est.trees_]
        votes_true = sum(tree_labels)
        folds.append(
            LoocvFold(
                community=matrix.communities[i],
                actual=bool(y[i]),
                predicted=votes_true * 2 > len(tree_labels),
                votes_true=votes_true,
                votes_total=len(tree_labels),
            )
        )
    accuracy = sum(f.correct for f in folds) / n
    return LoocvResult(accuracy=accuracy, baseline=majority_baseline(y), folds=folds)
