"""Acceptance suite: one test per release criterion, each with a stated
runtime budget and a PASS/FAIL line on stdout (run with -s to watch)."""

import functools
import json
import time

import numpy as np
import pytest

from foodquiz import canonical, engine, stats
from foodquiz.cli import main as cli_main
from foodquiz.engine import simulate_session, uniform_policy
from foodquiz.features import TertileDiscretizer, apply_bins, count_features, fit_bins
from foodquiz.forest import ForestParams, Prediction, loocv
from foodquiz.lda import CollapsedGibbsLDA
from foodquiz.quizkit import TemplateBank, compile_quiz, extract_predicates, question_id, validate_quiz
from foodquiz.service import SessionStore, create_app
from foodquiz.synthetic import planted_corpus, planted_topics, random_forest, write_planted_corpus

from .conftest import BRUNCH, COOK, CURRY, FRUIT, make_forest, published_tree
from .helpers import oracle_bin, oracle_tertiles, realized_paths
from .test_lda import greedy_match_cosines


def criterion(name: str, budget_s: float):
    """Print one PASS/FAIL line per criterion and enforce its time budget."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {name}: FAIL ({time.perf_counter() - start:.2f}s)")
                raise
            elapsed = time.perf_counter() - start
            verdict = "PASS" if elapsed < budget_s else "FAIL (over time budget)"
            print(f"ACCEPTANCE {name}: {verdict} ({elapsed:.2f}s, budget {budget_s:.0f}s)")
            assert elapsed < budget_s, f"{name} exceeded {budget_s}s budget"

        return run

    return wrap


@criterion("published-tree-fidelity", budget_s=1.0)
def test_published_tree_fidelity():
    forest = make_forest([published_tree()])
    # the encoded tree is the published one, node for node
    root = forest.trees[0]
    assert (root.feature, root.threshold) == (FRUIT, 1)
    assert (root.left.feature, root.left.threshold) == (COOK, 0)
    assert root.left.left.is_leaf and root.left.left.label is True
    assert (root.left.right.feature, root.left.right.threshold) == (CURRY, 1)
    assert root.left.right.left.label is False and root.left.right.right.label is True
    assert (root.right.feature, root.right.threshold) == (BRUNCH, 1)
    assert root.right.left.label is False and root.right.right.label is True

    labeled_paths = [
        ({FRUIT: 0, COOK: 0}, True),
        ({FRUIT: 0, COOK: 1, CURRY: 2}, True),
        ({FRUIT: 0, COOK: 1, CURRY: 0}, False),
        ({FRUIT: 0, COOK: 1, CURRY: 1}, False),
        ({FRUIT: 2, BRUNCH: 2}, True),
        ({FRUIT: 2, BRUNCH: 0}, False),
        ({FRUIT: 2, BRUNCH: 1}, False),
    ]
    for row, expected in labeled_paths:
        assert forest.predict(row).label is expected, (row, expected)


@criterion("accuracy-decomposition", budget_s=1.0)
def test_accuracy_decomposition():
    # 1000 records constructed with class proportions (17.7%, 82.3%) and
    # class accuracies (16.0%, 92.2%)
    records = []
    heavy_n, heavy_correct = 177, round(0.160 * 177)  # 28
    light_n, light_correct = 823, round(0.922 * 823)  # 759
    i = 0
    for n, n_correct, heavy in ((heavy_n, heavy_correct, True), (light_n, light_correct, False)):
        for j in range(n):
            actual = heavy  # bmi >= cutoff
            correct = j < n_correct
            predicted = actual if correct else (not actual)
            b = 32.0 if heavy else 22.0
            records.append(
                stats.RespondentRecord(
                    session_id=f"r{i}",
                    prediction=Prediction(predicted, 4 if predicted else 3, 7, ()),
                    height=1.70,
                    weight=b * 1.70 * 1.70,
                )
            )
            i += 1

    report = stats.accuracy_report(records, cutoff=28.7)
    assert abs(report.overall - 0.787) <= 0.001, report.overall
    by_name = {c.name: c for c in report.classes}
    assert by_name["bmi>=28.7"].proportion == pytest.approx(0.177)
    assert by_name["bmi<28.7"].proportion == pytest.approx(0.823)
    assert by_name["bmi>=28.7"].accuracy == pytest.approx(0.160, abs=0.002)
    assert by_name["bmi<28.7"].accuracy == pytest.approx(0.922, abs=0.001)
    decomposed = sum(c.proportion * c.accuracy for c in report.classes)
    assert abs(report.overall - decomposed) < 1e-9


@criterion("engagement-ratio", budget_s=1.0)
def test_engagement_ratio():
    def rec(i, correct, comment):
        return stats.RespondentRecord(
            session_id=f"e{i}",
            prediction=Prediction(correct, 4, 7, ()),  # actual label True below
            height=1.70,
            weight=32.0 * 1.70 * 1.70,  # bmi 32 -> actual True
            comment="said something" if comment else None,
        )

    records = [rec(i, True, i < 3) for i in range(744)]
    records += [rec(1000 + i, False, i < 13) for i in range(201)]
    es = stats.engagement_stats(records)
    assert (es.n_correct, es.comments_correct) == (744, 3)
    assert (es.n_incorrect, es.comments_incorrect) == (201, 13)
    assert es.rate_correct * 100 == pytest.approx(0.40, abs=0.005)
    assert es.rate_incorrect * 100 == pytest.approx(6.47, abs=0.005)
    assert es.ratio == pytest.approx(16.0, abs=0.5)


@criterion("planted-corpus-surrogate", budget_s=120.0)
def test_planted_corpus_surrogate():
    for seed in range(10):
        planted = planted_corpus(seed)
        raw = count_features(planted.corpus, min_count=3)
        space = fit_bins(raw)
        binned = apply_bins(raw, space)
        result = loocv(binned, planted.labels, ForestParams(seed=seed))
        assert result.accuracy >= 0.75, (seed, result.accuracy)
        assert 0.45 <= result.baseline <= 0.56, (seed, result.baseline)
        # qualitative ordering from the evaluation table: forest >> baseline
        assert result.accuracy > result.baseline + 0.15


@criterion("discretization-oracle", budget_s=10.0)
def test_discretization_oracle():
    rng = np.random.default_rng(2024)
    for trial in range(1000):
        n = int(rng.integers(1, 101))
        if trial % 3 == 0:
            values = rng.integers(0, 12, size=n).astype(float)  # heavy ties
        elif trial % 3 == 1:
            values = rng.normal(0, 100, size=n)
        else:
            values = rng.permutation(n).astype(float)  # distinct
        t1, t2 = oracle_tertiles(values.tolist())
        disc = TertileDiscretizer().fit(values.reshape(-1, 1))
        assert (disc.t1_[0], disc.t2_[0]) == (t1, t2)
        bins = disc.transform(values.reshape(-1, 1)).ravel()
        assert all(b == oracle_bin(x, t1, t2) for x, b in zip(values, bins))
        if len(set(values.tolist())) == n:
            for b in (0, 1, 2):
                assert abs(int((bins == b).sum()) - n / 3) <= 1


@criterion("quiz-compilation-soundness", budget_s=60.0)
def test_quiz_compilation_soundness():
    bank = TemplateBank.default()
    rng = np.random.default_rng(7)
    for spec_idx in range(100):
        forest = random_forest(spec_idx)
        spec, _ = compile_quiz(forest, bank)
        report = validate_quiz(spec, forest)
        assert report.ok, (spec_idx, report.failures)

        predicates, features = extract_predicates(forest)
        internal = sum(1 for _ in forest.internal_nodes())
        assert len(spec.questions) == len(features) <= internal <= 49

        for s in range(1000):
            session = simulate_session(spec, uniform_policy, seed=int(rng.integers(0, 2**32)))
            asked = [e.question_id for e in session.transcript]
            assert len(asked) == len(set(asked)), "a feature was asked twice"
            paths = realized_paths(spec, session.answers)
            assert set(session.answers) == set().union(*(f for _, f in paths))
            assert max(len(f) for _, f in paths) <= len(asked) <= sum(d for d, _ in paths)


@criterion("engine-forest-equivalence", budget_s=30.0)
def test_engine_forest_equivalence():
    bank = TemplateBank.default()
    rng = np.random.default_rng(11)
    total = 0
    for forest_idx in range(10):
        forest = random_forest(500 + forest_idx, n_trees=7)
        spec, _ = compile_quiz(forest, bank)
        for s in range(1000):
            session = simulate_session(spec, uniform_policy, seed=int(rng.integers(0, 2**32)))
            expected = forest.predict(session.answers)
            assert session.prediction == expected
            assert session.prediction.votes_true + (
                session.prediction.votes_total - session.prediction.votes_true
            ) == 7
            total += 1
    assert total == 10000


@criterion("lda-recovery", budget_s=60.0)
def test_lda_recovery():
    docs, planted_phi = planted_topics(seed=2, n_docs=120, doc_len=25)
    est = CollapsedGibbsLDA(n_topics=2, alpha=0.5, iterations=120, seed=31).fit(docs)
    assert np.allclose(est.topic_word_.sum(axis=1), 1.0, atol=1e-9)
    assert np.allclose(est.doc_topic_.sum(axis=1), 1.0, atol=1e-9)
    cosines = greedy_match_cosines(est.topic_word_, planted_phi)
    assert all(c >= 0.8 for c in cosines), cosines

    again = CollapsedGibbsLDA(n_topics=2, alpha=0.5, iterations=120, seed=31).fit(docs)
    assert est.topic_word_.tobytes() == again.topic_word_.tobytes()
    assert est.doc_topic_.tobytes() == again.doc_topic_.tobytes()


@criterion("service-durability-equivalence", budget_s=30.0)
def test_service_durability_equivalence(published_spec, tmp_path):
    import concurrent.futures

    from fastapi.testclient import TestClient

    app = create_app(published_spec, data_dir=tmp_path / "svc")
    with TestClient(app) as client:
        # scripted transcript via the API
        sid = client.post("/api/sessions").json()["session_id"]
        script = [(question_id(FRUIT), 0), (question_id(COOK), 1), (question_id(CURRY), 2)]
        for qid, choice in script:
            assert (
                client.post(
                    f"/api/sessions/{sid}/answers",
                    json={"question_id": qid, "choice_index": choice},
                ).status_code
                == 200
            )
        # equals a direct engine run
        direct = engine.start_session(published_spec, session_id=sid)
        for qid, choice in script:
            engine.answer(direct, qid, choice)
        store = app.state.store
        assert store.get(sid).state_digest() == direct.state_digest()
        assert client.get(f"/api/sessions/{sid}/result").json()["prediction"] == "overweight"

        # kill-and-replay: acknowledged events survive a restart
        snapshot = store.state_snapshot()
        reborn = SessionStore(published_spec, store.data_dir)
        assert reborn.state_snapshot() == snapshot
        reborn.close()

        # racing duplicate answers: exactly one 200 and one 409
        for _ in range(5):
            rid = client.post("/api/sessions").json()["session_id"]
            payload = {"question_id": question_id(FRUIT), "choice_index": 0}
            with concurrent.futures.ThreadPoolExecutor(max_workers=2) as pool:
                codes = sorted(
                    f.result().status_code
                    for f in [
                        pool.submit(
                            client.post, f"/api/sessions/{rid}/answers", json=payload
                        )
                        for _ in range(2)
                    ]
                )
            assert codes == [200, 409]


@criterion("end-to-end-determinism", budget_s=180.0)
def test_end_to_end_determinism(tmp_path):
    inputs = tmp_path / "inputs"
    inputs.mkdir()
    planted = planted_corpus(seed=6, n_communities=15, n_predictive=5, n_noise=40, docs_per_community=15)
    write_planted_corpus(planted, inputs / "corpus.jsonl", inputs / "labels.csv")

    def pipeline(out_dir):
        out_dir.mkdir()
        assert cli_main(
            ["train", "--corpus", str(inputs / "corpus.jsonl"), "--labels", str(inputs / "labels.csv"),
             "--out-dir", str(out_dir), "--seed", "7",
             "--lda-topics", "3", "--lda-iterations", "30"]
        ) == 0
        assert cli_main(
            ["compile-quiz", "--forest", str(out_dir / "forest.json"),
             "--featurespace", str(out_dir / "featurespace.json"),
             "--out", str(out_dir / "quiz.json"), "--report", str(out_dir / "draft.json")]
        ) == 0
        assert cli_main(
            ["simulate", "--quiz", str(out_dir / "quiz.json"), "--n", "1000", "--seed", "7",
             "--out", str(out_dir / "records.jsonl")]
        ) == 0
        assert cli_main(
            ["eval", "--records", str(out_dir / "records.jsonl"), "--out-dir", str(out_dir / "reports")]
        ) == 0

    a, b = tmp_path / "a", tmp_path / "b"
    pipeline(a)
    pipeline(b)

    artifacts = [
        "forest.json",
        "featurespace.json",
        "loocv_report.json",
        "quiz.json",
        "draft.json",
        "records.jsonl",
        "reports/accuracy.json",
        "reports/engagement.json",
        "reports/demographics_age.csv",
        "reports/demographics_bmi.csv",
        "reports/demographics_completeness.csv",
    ]
    for rel in artifacts:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), f"{rel} differs between runs"

    # train is itself deterministic: artifact bytes identical run to run
    forest_a = json.loads((a / "forest.json").read_text())
    assert forest_a["params"]["seed"] == 7
    assert canonical.dumps(forest_a) == canonical.dumps(json.loads((b / "forest.json").read_text()))
