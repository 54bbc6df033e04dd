"""Compile a trained forest into a three-choice Likert questionnaire.

Each distinct feature used by any decision node becomes exactly one
question; the forest's trees are mirrored with nodes rewritten to
reference question ids. Drafting is template-driven and a human-editable
overrides file is merged on top (the semi-automated step), after which
``validate_quiz`` re-checks that every decision node is covered.
"""

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from . import canonical
from .exceptions import CompileError, FormatError
from .features import HASHTAG, TOPIC, WORD, FeatureId
from .forest import DecisionNode, Forest

FOOD = "food"
NON_FOOD = "non_food"

AUTO_DRAFT = "auto_draft"
HUMAN_EDITED = "human_edited"


def question_id(feature: FeatureId) -> str:
    """Stable content-derived id, so text edits never break tree references."""
    return "q" + hashlib.sha256(str(feature).encode("utf-8")).hexdigest()[:12]


@dataclass
class TemplateBank:
    """Question patterns per feature class plus the food-word list."""

    patterns: dict[str, dict]  # class -> {"pattern": str, "choices": [3 labels]}
    food_words: set[str]
    images: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, obj: dict) -> "TemplateBank":
        patterns = {}
        for name in (FOOD, NON_FOOD, TOPIC):
            if name in obj:
                entry = obj[name]
                if len(entry.get("choices", [])) != 3:
                    raise FormatError(f"template '{name}' must have exactly 3 choices")
                patterns[name] = {"pattern": entry["pattern"], "choices": list(entry["choices"])}
        return cls(
            patterns=patterns,
            food_words={w.lower() for w in obj.get("food_words", [])},
            images=dict(obj.get("images", {})),
        )

    @classmethod
    def load(cls, path: str | Path) -> "TemplateBank":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def default(cls) -> "TemplateBank":
        text = resources.files("foodquiz.data").joinpath("templates.json").read_text("utf-8")
        return cls.from_dict(json.loads(text))

    def classify(self, feature: FeatureId) -> str:
        if feature.kind == TOPIC:
            return TOPIC
        if feature.kind == WORD and feature.key in self.food_words:
            return FOOD
        return NON_FOOD


@dataclass
class Question:
    id: str
    feature: FeatureId
    text: str
    choices: list[str]  # choice i maps to bin i
    source: str = AUTO_DRAFT
    image: Optional[str] = None

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "feature": {"kind": self.feature.kind, "key": self.feature.key},
            "text": self.text,
            "choices": [{"label": c, "bin": i} for i, c in enumerate(self.choices)],
            "source": self.source,
        }
        if self.image:
            out["image"] = self.image
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "Question":
        if sorted(c["bin"] for c in obj["choices"]) != [0, 1, 2]:
            raise FormatError(f"question {obj.get('id')}: choice bins must be exactly 0,1,2")
        choices = sorted(obj["choices"], key=lambda c: c["bin"])
        return cls(
            id=obj["id"],
            feature=FeatureId(obj["feature"]["kind"], obj["feature"]["key"]),
            text=obj["text"],
            choices=[c["label"] for c in choices],
            source=obj.get("source", AUTO_DRAFT),
            image=obj.get("image"),
        )


@dataclass
class QuizNode:
    """Mirror of a forest node with the predicate keyed by question id."""

    question_id: Optional[str] = None
    threshold: Optional[int] = None
    left: Optional["QuizNode"] = None
    right: Optional["QuizNode"] = None
    label: Optional[bool] = None

    @property
    def is_leaf(self) -> bool:
        return self.question_id is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"label": self.label}
        return {
            "question": self.question_id,
            "t": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "QuizNode":
        if "question" in obj:
            return cls(
                question_id=obj["question"],
                threshold=int(obj["t"]),
                left=cls.from_dict(obj["left"]),
                right=cls.from_dict(obj["right"]),
            )
        return cls(label=bool(obj["label"]))


@dataclass
class QuizSpec:
    questions: list[Question]
    trees: list[QuizNode]
    forest_fingerprint: str

    def __post_init__(self):
        self.question_by_id = {q.id: q for q in self.questions}

    def internal_nodes(self):
        def walk(node):
            if not node.is_leaf:
                yield node
                yield from walk(node.left)
                yield from walk(node.right)

        for tree in self.trees:
            yield from walk(tree)

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.forest_fingerprint,
            "questions": [q.to_dict() for q in self.questions],
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "QuizSpec":
        return cls(
            questions=[Question.from_dict(q) for q in obj["questions"]],
            trees=[QuizNode.from_dict(t) for t in obj["trees"]],
            forest_fingerprint=obj["fingerprint"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(canonical.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "QuizSpec":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError) as exc:
            raise FormatError(f"bad quiz file {path}: {exc}") from exc


def extract_predicates(forest: Forest) -> tuple[set[tuple[FeatureId, int]], set[FeatureId]]:
    """The forest's predicate inventory and its distinct features."""
    predicates = {(n.feature, n.threshold) for n in forest.internal_nodes()}
    return predicates, {f for f, _ in predicates}


def _features_in_order(forest: Forest) -> list[FeatureId]:
    seen: dict[FeatureId, None] = {}
    for node in forest.internal_nodes():
        seen.setdefault(node.feature)
    return list(seen)


def _draft(feature: FeatureId, bank: TemplateBank, topic_summaries) -> tuple[Optional[Question], bool]:
    cls = bank.classify(feature)
    entry = bank.patterns.get(cls)
    if entry is None:
        return None, False
    if cls == FOOD:
        text = entry["pattern"].format(food=feature.key)
        needs_review = False
    else:
        if feature.kind == TOPIC:
            tops = (topic_summaries or {}).get(feature.key)
            if tops:
                listed = ", ".join(tops[:3])
                desc = f"involve foods like {listed}"
            else:
                desc = f"relate to topic {feature.key}"
        elif feature.kind == HASHTAG:
            desc = f"would be tagged {feature.key}"
        else:
            desc = f"include {feature.key}"
        text = entry["pattern"].format(description=desc)
        needs_review = True
    q = Question(
        id=question_id(feature),
        feature=feature,
        text=text,
        choices=list(entry["choices"]),
        source=AUTO_DRAFT,
        image=bank.images.get(feature.key),
    )
    return q, needs_review


def load_overrides(path: str | Path) -> dict:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(obj, dict):
        raise FormatError("overrides file must be a JSON object keyed by 'kind:key'")
    return obj


@dataclass
class CompileReport:
    auto_drafted: list[str] = field(default_factory=list)
    human_edited: list[str] = field(default_factory=list)
    needs_review: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "auto_drafted": self.auto_drafted,
            "human_edited": self.human_edited,
            "needs_review": self.needs_review,
        }


def _mirror(node: DecisionNode) -> QuizNode:
    if node.is_leaf:
        return QuizNode(label=node.label)
    return QuizNode(
        question_id=question_id(node.feature),
        threshold=node.threshold,
        left=_mirror(node.left),
        right=_mirror(node.right),
    )


def compile_quiz(
    forest: Forest,
    bank: TemplateBank | None = None,
    overrides: dict | None = None,
    topic_summaries: dict[str, list[str]] | None = None,
) -> tuple[QuizSpec, CompileReport]:
    """Draft one question per distinct decision feature and mirror the trees.

    ``overrides`` maps "kind:key" to {"text", "choices"?, "image"?} and wins
    over the template draft. A feature with neither a matching template nor
    an override fails compilation, listing every such feature.
    """
    bank = bank or TemplateBank.default()
    overrides = overrides or {}
    report = CompileReport()
    questions: list[Question] = []
    missing: list[str] = []

    for feature in _features_in_order(forest):
        key = str(feature)
        ov = overrides.get(key)
        drafted, needs_review = _draft(feature, bank, topic_summaries)
        if ov is not None:
            choices = ov.get("choices")
            if choices is None:
                choices = drafted.choices if drafted else None
            if choices is None or len(choices) != 3:
                missing.append(key)
                continue
            questions.append(
                Question(
                    id=question_id(feature),
                    feature=feature,
                    text=ov["text"],
                    choices=list(choices),
                    source=HUMAN_EDITED,
                    image=ov.get("image", drafted.image if drafted else None),
                )
            )
            report.human_edited.append(key)
        elif drafted is not None:
            questions.append(drafted)
            report.auto_drafted.append(key)
            if needs_review:
                report.needs_review.append(key)
        else:
            missing.append(key)

    if missing:
        raise CompileError(
            "no template or override for feature(s): " + ", ".join(missing), missing=missing
        )

    spec = QuizSpec(
        questions=questions,
        trees=[_mirror(t) for t in forest.trees],
        forest_fingerprint=forest.fingerprint,
    )
    return spec, report


@dataclass
class CoverageReport:
    ok: bool
    failures: list[str]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "failures": self.failures}


def _structurally_equal(qnode: QuizNode, fnode: DecisionNode) -> bool:
    if qnode.is_leaf != fnode.is_leaf:
        return False
    if qnode.is_leaf:
        return qnode.label == fnode.label
    return (
        qnode.question_id == question_id(fnode.feature)
        and qnode.threshold == fnode.threshold
        and _structurally_equal(qnode.left, fnode.left)
        and _structurally_equal(qnode.right, fnode.right)
    )


def validate_quiz(spec: QuizSpec, forest: Forest | None = None) -> CoverageReport:
    """Check node coverage, the choice/bin bijection, and (optionally) that
    the spec mirrors the given forest. Content problems are returned as a
    failure list, never raised."""
    failures: list[str] = []

    seen_features: set[FeatureId] = set()
    for q in spec.questions:
        if len(q.choices) != 3:
            failures.append(f"question {q.id}: expected 3 choices, got {len(q.choices)}")
        if q.feature in seen_features:
            failures.append(f"duplicate question for feature {q.feature}")
        seen_features.add(q.feature)
        if q.id != question_id(q.feature):
            failures.append(f"question {q.id}: id does not match feature {q.feature}")

    referenced: set[str] = set()
    for node in spec.internal_nodes():
        referenced.add(node.question_id)
        if node.question_id not in spec.question_by_id:
            failures.append(f"orphaned node: no question with id {node.question_id}")
        if node.threshold not in (0, 1):
            failures.append(f"node {node.question_id}: threshold {node.threshold} not in {{0,1}}")
    for q in spec.questions:
        if q.id not in referenced:
            failures.append(f"question {q.id} ({q.feature}) maps to no decision node")

    if forest is not None:
        if spec.forest_fingerprint != forest.fingerprint:
            failures.append(
                f"fingerprint mismatch: quiz {spec.forest_fingerprint[:12]}... "
                f"vs forest {forest.fingerprint[:12]}..."
            )
        elif len(spec.trees) != len(forest.trees) or not all(
            _structurally_equal(q, f) for q, f in zip(spec.trees, forest.trees)
        ):
            failures.append("quiz trees do not mirror the forest trees")

    return CoverageReport(ok=not failures, failures=failures)
