"""Latent topic features via a collapsed Gibbs sampler.

The sampler is deliberately plain: one serial sweep per iteration over
every token, counts in integer arrays, and a numpy Generator seeded once,
so a fixed seed reproduces the model bit for bit.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .corpus import CommunityCorpus
from .exceptions import FoodquizError
from .text import tokenize


class CollapsedGibbsLDA(TransformerMixin, BaseEstimator):
    """Collapsed Gibbs LDA over documents given as token lists.

    Parameters follow common practice for this sampler family:
    ``alpha=None`` means the symmetric prior 50/n_topics.
    """

    def __init__(self, n_topics=50, alpha=None, beta=0.01, iterations=500, seed=0):
        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.iterations = iterations
        self.seed = seed

    def fit(self, docs, y=None, on_iteration=None):
        """Run the sampler.

        docs: sequence of token lists. ``on_iteration(i, topic_totals)``
        is called after every sweep (used by conservation tests).
        """
        if self.n_topics < 2:
            raise FoodquizError("n_topics must be >= 2")
        if self.iterations < 1:
            raise FoodquizError("iterations must be >= 1")
        vocab = sorted({t for doc in docs for t in doc})
        if not vocab:
            raise FoodquizError("empty vocabulary")
        if self.n_topics > len(vocab):
            raise FoodquizError(
                f"n_topics={self.n_topics} exceeds vocabulary size {len(vocab)}"
            )
        k = self.n_topics
        alpha = 50.0 / k if self.alpha is None else float(self.alpha)
        beta = float(self.beta)
        word_index = {w: i for i, w in enumerate(vocab)}
        v = len(vocab)
        ids = [np.array([word_index[t] for t in doc], dtype=np.int64) for doc in docs]

        rng = np.random.default_rng(self.seed)
        n_dk = np.zeros((len(ids), k), dtype=np.int64)
        n_kw = np.zeros((k, v), dtype=np.int64)
        n_k = np.zeros(k, dtype=np.int64)
        z = []
        for d, doc in enumerate(ids):
            zd = rng.integers(0, k, size=len(doc))
            z.append(zd)
            for w, t in zip(doc, zd):
                n_dk[d, t] += 1
                n_kw[t, w] += 1
                n_k[t] += 1

        v_beta = v * beta
        for it in range(self.iterations):
            for d, doc in enumerate(ids):
                zd = z[d]
                row = n_dk[d]
                for i in range(len(doc)):
                    w = doc[i]
                    t = zd[i]
                    row[t] -= 1
                    n_kw[t, w] -= 1
                    n_k[t] -= 1
                    p = (row + alpha) * (n_kw[:, w] + beta) / (n_k + v_beta)
                    cum = np.cumsum(p)
                    t = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
                    zd[i] = t
                    row[t] += 1
                    n_kw[t, w] += 1
                    n_k[t] += 1
            if on_iteration is not None:
                on_iteration(it, n_k.copy())

        self.vocabulary_ = vocab
        self.topic_word_ = (n_kw + beta) / (n_k + v_beta)[:, None]
        doc_lengths = np.array([len(doc) for doc in ids], dtype=np.float64)
        self.doc_topic_ = (n_dk + alpha) / (doc_lengths + k * alpha)[:, None]
        self.alpha_ = alpha
        return self

    def transform(self, docs=None):
        """Document-topic proportions for the training documents."""
        if not hasattr(self, "doc_topic_"):
            raise NotFittedError("CollapsedGibbsLDA is not fitted")
        return self.doc_topic_


@dataclass
class TopicModel:
    """A fitted topic model plus the community of each training document."""

    n_topics: int
    alpha: float
    beta: float
    iterations: int
    seed: int
    vocabulary: list[str]
    phi: np.ndarray  # (K, V) topic-token distributions
    theta: np.ndarray  # (D, K) document-topic distributions
    doc_communities: list[str] = field(default_factory=list)

    def community_topic_matrix(self, communities: list[str]) -> np.ndarray:
        """Mean document-topic proportions per community (aligned rows).

        A community with no documents gets the uniform prior mean 1/K.
        """
        out = np.full((len(communities), self.n_topics), 1.0 / self.n_topics)
        groups: dict[str, list[int]] = {}
        for d, c in enumerate(self.doc_communities):
            groups.setdefault(c, []).append(d)
        for i, c in enumerate(communities):
            idx = groups.get(c)
            if idx:
                out[i] = self.theta[idx].mean(axis=0)
        return out

    def top_tokens(self, n: int = 20) -> dict[str, list[str]]:
        """Top-n tokens per topic, for human labeling of topic questions."""
        out = {}
        for k in range(self.n_topics):
            order = np.argsort(-self.phi[k], kind="stable")[:n]
            out[str(k)] = [self.vocabulary[i] for i in order]
        return out


def train_lda(
    corpus: CommunityCorpus,
    n_topics: int,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 500,
    seed: int = 0,
    on_iteration=None,
) -> TopicModel:
    """Fit topics on a corpus; documents iterate in community-sorted order."""
    docs, doc_communities = [], []
    for community in corpus.communities():
        for doc in corpus.documents[community]:
            docs.append(tokenize(doc.text))
            doc_communities.append(community)
    est = CollapsedGibbsLDA(
        n_topics=n_topics, alpha=alpha, beta=beta, iterations=iterations, seed=seed
    ).fit(docs, on_iteration=on_iteration)
    return TopicModel(
        n_topics=n_topics,
        alpha=est.alpha_,
        beta=beta,
        iterations=iterations,
        seed=seed,
        vocabulary=est.vocabulary_,
        phi=est.topic_word_,
        theta=est.doc_topic_,
        doc_communities=doc_communities,
    )
