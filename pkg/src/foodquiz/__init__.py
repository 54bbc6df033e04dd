"""foodquiz: community food-language classifier compiled into an adaptive quiz.

Pipeline: load a hashtag-filtered corpus and overweight-rate labels, build
a tertile-binned feature matrix (words, hashtags, optional LDA topics),
train a small random forest, compile its decision nodes into a 3-choice
Likert questionnaire, serve the quiz over HTTP, and evaluate predictions
against self-reported BMI.
"""

__version__ = "0.1.0"

from .corpus import CommunityCorpus, CommunityLabels, load_documents, load_labels
from .engine import Session, answer, next_question, predict_session, simulate_session, start_session
from .features import (
    BinnedMatrix,
    FeatureId,
    FeatureSpace,
    TertileDiscretizer,
    apply_bins,
    count_features,
    fit_bins,
)
from .forest import (
    BinnedForestClassifier,
    Forest,
    ForestParams,
    Prediction,
    loocv,
    majority_baseline,
    split_gain,
    train_forest,
)
from .lda import CollapsedGibbsLDA, TopicModel, train_lda
from .quizkit import QuizSpec, TemplateBank, compile_quiz, extract_predicates, validate_quiz
from .stats import (
    AccuracyReport,
    RespondentRecord,
    accuracy_report,
    bmi,
    demographics_summary,
    engagement_stats,
    export_anonymized,
    label_individual,
)

__all__ = [
    "CommunityCorpus",
    "CommunityLabels",
    "load_documents",
    "load_labels",
    "FeatureId",
    "FeatureSpace",
    "BinnedMatrix",
    "TertileDiscretizer",
    "count_features",
    "fit_bins",
    "apply_bins",
    "CollapsedGibbsLDA",
    "TopicModel",
    "train_lda",
    "BinnedForestClassifier",
    "Forest",
    "ForestParams",
    "Prediction",
    "train_forest",
    "split_gain",
    "loocv",
    "majority_baseline",
    "QuizSpec",
    "TemplateBank",
    "compile_quiz",
    "extract_predicates",
    "validate_quiz",
    "Session",
    "start_session",
    "next_question",
    "answer",
    "predict_session",
    "simulate_session",
    "RespondentRecord",
    "AccuracyReport",
    "bmi",
    "label_individual",
    "accuracy_report",
    "engagement_stats",
    "demographics_summary",
    "export_anonymized",
]
