"""Seeded generators for synthetic corpora, forests, and respondents.

The real training corpus is external, so evaluation of the pipeline is
property-based: plant a known signal, run the full pipeline, and check
that it is recovered. Everything here is deterministic per seed.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import DEFAULT_MEAL_HASHTAGS, CommunityCorpus, CommunityLabels, Document
from .engine import Policy, simulate_session, uniform_policy
from .features import FeatureId, HASHTAG, TOPIC, WORD
from .forest import DecisionNode, Forest, ForestParams, derive_seed
from . import canonical
from .quizkit import TemplateBank
from .stats import RespondentRecord


@dataclass
class PlantedCorpus:
    corpus: CommunityCorpus
    labels: CommunityLabels
    predictive_tokens: list[str]
    noise_tokens: list[str]


def planted_corpus(
    seed: int,
    n_communities: int = 51,
    n_predictive: int = 10,
    n_noise: int = 200,
    docs_per_community: int = 40,
    tokens_per_doc: int = 12,
) -> PlantedCorpus:
    """Corpus where predictive tokens are frequent only in positive communities.

    Overweight rates are distinct by construction, so the label split is
    floor((n-1)/2) positives against the median.
    """
    rng = np.random.default_rng(seed)
    names = [f"C{i:02d}" for i in range(n_communities)]
    order = rng.permutation(n_communities)  # decouple rate order from name order
    rates = {names[i]: 20.0 + 0.5 * float(order[i]) for i in range(n_communities)}
    labels = CommunityLabels.from_rates(rates)

    predictive = [f"signal{i:02d}" for i in range(n_predictive)]
    noise = [f"filler{i:03d}" for i in range(n_noise)]
    tokens = predictive + noise

    pos_p = np.concatenate(
        [np.full(n_predictive, 0.5 / n_predictive), np.full(n_noise, 0.5 / n_noise)]
    )
    neg_p = np.concatenate(
        [np.full(n_predictive, 0.08 / n_predictive), np.full(n_noise, 0.92 / n_noise)]
    )

    documents = {}
    for c in names:
        p = pos_p if labels.labels[c] else neg_p
        docs = []
        for _ in range(docs_per_community):
            draw = rng.choice(len(tokens), size=tokens_per_doc - 1, p=p)
            words = " ".join(tokens[j] for j in draw)
            docs.append(Document(c, f"{words} #dinner"))
        documents[c] = docs
    corpus = CommunityCorpus(documents=documents, hashtag_filter=frozenset(DEFAULT_MEAL_HASHTAGS))
    return PlantedCorpus(
        corpus=corpus, labels=labels, predictive_tokens=predictive, noise_tokens=noise
    )


def write_planted_corpus(planted: PlantedCorpus, corpus_path, labels_path) -> None:
    planted.corpus.to_jsonl(corpus_path)
    with open(labels_path, "w", encoding="utf-8") as fh:
        fh.write("community,overweight_rate\n")
        for c in sorted(planted.labels.rates):
            fh.write(f"{c},{planted.labels.rates[c]}\n")


def planted_topics(
    seed: int,
    n_docs: int = 120,
    doc_len: int = 25,
    vocab_size: int = 30,
) -> tuple[list[list[str]], np.ndarray]:
    """Documents drawn from two disjoint token distributions.

    Returns (docs, planted_phi) where planted_phi rows are the two true
    topic-token distributions over the sorted vocabulary.
    """
    rng = np.random.default_rng(seed)
    vocab = [f"tok{i:03d}" for i in range(vocab_size)]
    half = vocab_size // 2
    phi = np.zeros((2, vocab_size))
    phi[0, :half] = 1.0 / half
    phi[1, half:] = 1.0 / (vocab_size - half)
    docs = []
    for d in range(n_docs):
        topic = d % 2
        draw = rng.choice(vocab_size, size=doc_len, p=phi[topic])
        docs.append([vocab[j] for j in draw])
    return docs, phi


_NON_FOOD_WORDS = ["hot", "supper", "brunch", "homemade", "leftovers", "spicy", "organic", "diner"]
_HASHTAGS = ["#cook", "#foodie", "#yum", "#healthy", "#homecooked", "#takeout"]


def feature_pool(include_topics: bool = True) -> list[FeatureId]:
    """A mixed pool of plausible features for random forests."""
    bank = TemplateBank.default()
    pool = [FeatureId(WORD, w) for w in sorted(bank.food_words)]
    pool += [FeatureId(WORD, w) for w in _NON_FOOD_WORDS]
    pool += [FeatureId(HASHTAG, h) for h in _HASHTAGS]
    if include_topics:
        pool += [FeatureId(TOPIC, str(k)) for k in range(4)]
    return pool


def random_forest(
    seed: int,
    n_trees: int = 7,
    max_depth: int = 3,
    pool: list[FeatureId] | None = None,
    internal_prob: float = 0.8,
) -> Forest:
    """A structurally random forest (not trained); for engine/quiz tests."""
    rng = np.random.default_rng(seed)
    pool = pool or feature_pool()

    def grow(depth: int) -> DecisionNode:
        if depth >= max_depth or rng.random() > internal_prob:
            return DecisionNode(label=bool(rng.integers(0, 2)), counts=(0, 0))
        feature = pool[int(rng.integers(0, len(pool)))]
        return DecisionNode(
            feature=feature,
            threshold=int(rng.integers(0, 2)),
            left=grow(depth + 1),
            right=grow(depth + 1),
        )

    trees = [grow(0) for _ in range(n_trees)]
    params = ForestParams(n_trees=n_trees, max_depth=max_depth, seed=seed)
    fingerprint = canonical.fingerprint(
        {"trees": [t.to_dict() for t in trees], "params": params.to_dict()}
    )
    return Forest(params=params, trees=trees, fingerprint=fingerprint)


_LOCATIONS = [
    "Tucson, AZ",
    "Phoenix, Arizona",
    "Portland, OR",
    "Austin, Texas",
    "New York",
    "London, UK",
    "Toronto, Canada",
    "Berlin, Germany",
    "a small town",
    None,
]

_COMMENTS_WRONG = [
    "You got me wrong, I eat very healthily!",
    "Way off. Interesting quiz though.",
    "Incorrect, but fun.",
]
_COMMENTS_RIGHT = [
    "Spot on, nice work!",
    "Correct. Good job.",
]


def simulate_records(
    spec,
    n: int,
    policy: Policy | None = None,
    seed: int = 0,
    salt: str = "simulation",
) -> list[RespondentRecord]:
    """Simulate n completed sessions with synthetic voluntary demographics.

    Respondents skip fields at realistic rates; comments are more likely
    when the prediction disagrees with the synthetic BMI. Deterministic
    per seed (timestamps are step indices).
    """
    from .canonical import salted_hash
    from .stats import DEFAULT_CUTOFF, label_individual

    policy = policy or uniform_policy
    rng = np.random.default_rng(derive_seed(seed, 4))
    records = []
    for i in range(n):
        session = simulate_session(
            spec, policy, seed=derive_seed(seed, 3, i), session_id=f"sim-{seed}-{i:06d}"
        )
        height = weight = age = None
        if rng.random() < 0.92:
            height = float(np.clip(rng.normal(1.73, 0.10), 1.40, 2.10))
            weight = float(np.clip(rng.normal(74.0, 16.0), 40.0, 180.0))
        if rng.random() < 0.88:
            age = float(np.clip(rng.normal(26.0, 9.0), 18.0, 90.0))
        gender = ["female", "male", "other", "undisclosed"][
            int(rng.choice(4, p=[0.42, 0.42, 0.04, 0.12]))
        ]
        location = _LOCATIONS[int(rng.integers(0, len(_LOCATIONS)))]
        handles = {}
        if rng.random() < 0.3:
            handles["twitter"] = salted_hash(salt, f"@user{i}")
        comment = None
        if height is not None:
            actual = label_individual(weight / height**2, DEFAULT_CUTOFF)
            wrong = session.prediction.label != actual
            if wrong and rng.random() < 0.10:
                comment = _COMMENTS_WRONG[int(rng.integers(0, len(_COMMENTS_WRONG)))]
            elif not wrong and rng.random() < 0.01:
                comment = _COMMENTS_RIGHT[int(rng.integers(0, len(_COMMENTS_RIGHT)))]
        records.append(
            RespondentRecord(
                session_id=session.session_id,
                transcript=[(e.question_id, e.choice_index) for e in session.transcript],
                prediction=session.prediction,
                height=round(height, 2) if height is not None else None,
                weight=round(weight, 1) if weight is not None else None,
                age=round(age, 0) if age is not None else None,
                gender=gender,
                location=location,
                handles=handles,
                comment=comment,
            )
        )
    return records
