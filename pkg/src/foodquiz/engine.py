"""Adaptive quiz sessions: tree-traversal question selection and voting.

Answers are keyed by feature, not by node, so one answer resolves every
predicate on that feature across all trees -- the dedup that lets a small
question set cover a larger node count. Selection order is fixed (tree
index, then path order), which makes a session a pure function of its
answer transcript.
"""

import random
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from . import canonical
from .exceptions import EngineError, FoodquizError
from .features import FeatureId
from .forest import Prediction
from .quizkit import Question, QuizSpec, validate_quiz

IN_PROGRESS = "in_progress"
COMPLETE = "complete"


@dataclass
class TranscriptEntry:
    question_id: str
    choice_index: int
    timestamp: float


@dataclass
class Session:
    session_id: str
    spec: QuizSpec
    answers: dict[FeatureId, int] = field(default_factory=dict)
    transcript: list[TranscriptEntry] = field(default_factory=list)
    status: str = IN_PROGRESS
    prediction: Optional[Prediction] = None

    def to_dict(self, include_timestamps: bool = True) -> dict:
        entry = lambda e: (
            {"question": e.question_id, "choice": e.choice_index, "ts": e.timestamp}
            if include_timestamps
            else {"question": e.question_id, "choice": e.choice_index}
        )
        out = {
            "session_id": self.session_id,
            "fingerprint": self.spec.forest_fingerprint,
            "status": self.status,
            "transcript": [entry(e) for e in self.transcript],
            "prediction": None,
        }
        if self.prediction is not None:
            out["prediction"] = {
                "label": self.prediction.label,
                "votes_true": self.prediction.votes_true,
                "votes_total": self.prediction.votes_total,
                "tree_labels": list(self.prediction.tree_labels),
                "tie": self.prediction.tie,
            }
        return out

    def state_digest(self) -> str:
        """Timestamp-free canonical state, for engine/API equivalence checks."""
        return canonical.dumps(self.to_dict(include_timestamps=False))


def _feature_of(spec: QuizSpec, question_id: str) -> FeatureId:
    return spec.question_by_id[question_id].feature


def _predict(spec: QuizSpec, answers: dict[FeatureId, int]) -> Prediction:
    tree_labels = []
    for tree in spec.trees:
        node = tree
        while not node.is_leaf:
            b = answers.get(_feature_of(spec, node.question_id), 0)
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


def start_session(spec: QuizSpec, session_id: str | None = None) -> Session:
    """Open a session on a structurally valid spec.

    A spec whose trees are all leaves completes immediately with the
    majority of the leaf labels. Validation runs once per spec object.
    """
    if not getattr(spec, "_session_validated", False):
        report = validate_quiz(spec)
        if not report.ok:
            raise FoodquizError("invalid quiz spec: " + "; ".join(report.failures))
        spec._session_validated = True
    session = Session(session_id=session_id or uuid.uuid4().hex, spec=spec)
    _refresh(session)
    return session


def next_question(session: Session) -> Optional[Question]:
    """First unanswered feature along the trees' answered prefixes.

    Trees are scanned in index order; within a tree the answered
    predicates are followed from the root. Returns None when every tree
    reaches a leaf (session done).
    """
    for tree in session.spec.trees:
        node = tree
        while not node.is_leaf:
            feature = _feature_of(session.spec, node.question_id)
            if feature not in session.answers:
                return session.spec.question_by_id[node.question_id]
            node = node.right if session.answers[feature] > node.threshold else node.left
    return None


def _refresh(session: Session) -> None:
    if next_question(session) is None:
        session.status = COMPLETE
        session.prediction = _predict(session.spec, session.answers)
    else:
        session.status = IN_PROGRESS
        session.prediction = None


def answer(
    session: Session,
    question_id: str,
    choice_index: int,
    timestamp: float | None = None,
) -> Session:
    """Record one answer (choice i maps to bin i); duplicates are rejected."""
    question = session.spec.question_by_id.get(question_id)
    if question is None:
        raise EngineError("unknown_question", f"no question with id {question_id}")
    if not isinstance(choice_index, int) or not 0 <= choice_index <= 2:
        raise EngineError("bad_choice", f"choice_index must be 0, 1 or 2, got {choice_index!r}")
    if question.feature in session.answers:
        raise EngineError("already_answered", f"question {question_id} already answered")
    session.answers[question.feature] = choice_index
    session.transcript.append(
        TranscriptEntry(
            question_id=question_id,
            choice_index=choice_index,
            timestamp=time.time() if timestamp is None else timestamp,
        )
    )
    _refresh(session)
    return session


def predict_session(session: Session) -> Prediction:
    """The completed session's majority vote (equals the forest's vote)."""
    if session.status != COMPLETE:
        raise EngineError("incomplete", "session has unanswered decision nodes")
    return session.prediction


def replay(spec: QuizSpec, transcript: list[TranscriptEntry], session_id: str) -> Session:
    """Rebuild a session from its recorded transcript."""
    session = start_session(spec, session_id=session_id)
    for e in transcript:
        answer(session, e.question_id, e.choice_index, timestamp=e.timestamp)
    return session


Policy = Callable[[Question], Sequence[float]]


def uniform_policy(question: Question) -> Sequence[float]:
    return (1.0, 1.0, 1.0)


def always_policy(choice: int) -> Policy:
    def policy(question: Question) -> Sequence[float]:
        w = [0.0, 0.0, 0.0]
        w[choice] = 1.0
        return w

    return policy


POLICIES: dict[str, Policy] = {
    "uniform": uniform_policy,
    "always0": always_policy(0),
    "always1": always_policy(1),
    "always2": always_policy(2),
}


def simulate_session(
    spec: QuizSpec,
    policy: Policy,
    seed: int,
    session_id: str | None = None,
) -> Session:
    """Run a full session, drawing each choice from the policy's weights.

    Deterministic per (spec, policy, seed); timestamps are the step index
    so serialized simulations are byte-reproducible.
    """
    rng = random.Random(seed)
    session = start_session(spec, session_id=session_id)
    step = 0
    while (question := next_question(session)) is not None:
        w = list(policy(question))
        total = sum(w)
        if len(w) != 3 or total <= 0 or min(w) < 0:
            raise FoodquizError(f"policy returned bad weights for {question.id}: {w}")
        u = rng.random() * total
        choice = 0 if u < w[0] else (1 if u < w[0] + w[1] else 2)
        answer(session, question.id, choice, timestamp=float(step))
        step += 1
    return session
