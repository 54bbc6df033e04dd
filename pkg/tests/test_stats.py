import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from foodquiz.exceptions import FoodquizError, ImplausibleAnthropometry
from foodquiz.forest import Prediction
from foodquiz.stats import (
    KG_PER_LB,
    RespondentRecord,
    accuracy_report,
    bmi,
    coarsen_location,
    demographics_summary,
    engagement_stats,
    export_anonymized,
    label_individual,
    load_records,
    records_from_export,
    save_records,
    to_kg,
)

from .helpers import oracle_accuracy_tally


def pred(label: bool) -> Prediction:
    return Prediction(label=label, votes_true=4 if label else 3, votes_total=7, tree_labels=())


def record(i, label_pred, bmi_value=None, comment=None, **kw):
    height = weight = None
    if bmi_value is not None:
        height = 1.70
        weight = bmi_value * height * height
    return RespondentRecord(
        session_id=f"s{i}",
        prediction=pred(label_pred),
        height=height,
        weight=weight,
        comment=comment,
        **kw,
    )


def test_bmi_round_numbers():
    assert bmi(100.0, 2.0) == pytest.approx(25.0)


def test_bmi_table_mean_row():
    assert bmi(74.4, 1.73) == pytest.approx(24.86, abs=0.005)
    # consistent with the published mean BMI of 24.9 within 0.05
    assert abs(bmi(74.4, 1.73) - 24.9) < 0.05


def test_bmi_imperial_conversion():
    value = bmi(164, 68, weight_unit="lbs", height_unit="in")
    assert value == pytest.approx(24.94, abs=0.005)


def test_bmi_rejects_implausible():
    with pytest.raises(ImplausibleAnthropometry):
        bmi(1000.0, 1.8)
    with pytest.raises(ImplausibleAnthropometry):
        bmi(80.0, 3.5)
    with pytest.raises(ImplausibleAnthropometry):
        bmi(80.0, 0.4)


def test_label_boundary_inclusive():
    assert label_individual(28.7) is True
    assert label_individual(28.69) is False
    assert label_individual(24.9) is False


@given(st.floats(min_value=21, max_value=399))
def test_unit_roundtrip(kg):
    assert to_kg(kg / KG_PER_LB, "lbs") == pytest.approx(kg, rel=1e-9)


def test_bmi_monotone_in_weight_and_height():
    assert bmi(80, 1.8) > bmi(70, 1.8)
    assert bmi(80, 1.7) > bmi(80, 1.8)


def test_accuracy_report_all_correct():
    records = [record(i, True, bmi_value=30.0) for i in range(3)]
    records += [record(10 + i, False, bmi_value=22.0) for i in range(5)]
    report = accuracy_report(records)
    assert report.overall == 1.0
    assert all(c.accuracy == 1.0 for c in report.classes)
    assert report.n_missing == 0


def test_accuracy_report_matches_brute_force_tally():
    rng = np.random.default_rng(13)
    records, preds, actuals = [], [], []
    for i in range(1000):
        b = float(rng.uniform(18, 40))
        p = bool(rng.random() > 0.5)
        records.append(record(i, p, bmi_value=b))
        preds.append(p)
        actuals.append(b >= 28.7)
    report = accuracy_report(records)
    overall, per_acc, per_prop = oracle_accuracy_tally(preds, actuals)
    assert report.overall == pytest.approx(overall, abs=1e-12)
    by_name = {c.name: c for c in report.classes}
    assert by_name["bmi>=28.7"].accuracy == pytest.approx(per_acc[True])
    assert by_name["bmi<28.7"].accuracy == pytest.approx(per_acc[False])
    assert by_name["bmi>=28.7"].proportion == pytest.approx(per_prop[True])


def test_accuracy_report_decomposition_identity():
    rng = np.random.default_rng(99)
    records = [
        record(i, bool(rng.random() > 0.6), bmi_value=float(rng.uniform(18, 40)))
        for i in range(500)
    ]
    report = accuracy_report(records)
    total = sum(c.proportion * c.accuracy for c in report.classes if c.accuracy is not None)
    assert abs(report.overall - total) < 1e-9
    assert sum(c.proportion for c in report.classes) == pytest.approx(1.0)


def test_accuracy_report_counts_missing():
    records = [record(0, True, bmi_value=30.0), RespondentRecord(session_id="x", prediction=pred(True))]
    report = accuracy_report(records)
    assert report.n_scored == 1 and report.n_missing == 1


def test_accuracy_report_requires_scored_records():
    with pytest.raises(FoodquizError):
        accuracy_report([RespondentRecord(session_id="x")])


def test_engagement_published_counts():
    records = []
    # 744 correct predictions, 3 commented
    for i in range(744):
        records.append(record(i, False, bmi_value=22.0, comment="hi" if i < 3 else None))
    # 201 incorrect, 13 commented
    for i in range(201):
        records.append(record(1000 + i, True, bmi_value=22.0, comment="hm" if i < 13 else None))
    stats = engagement_stats(records)
    assert stats.rate_correct == pytest.approx(0.0040, abs=5e-5)
    assert stats.rate_incorrect == pytest.approx(0.0647, abs=5e-5)
    assert stats.ratio == pytest.approx(16.0, abs=0.5)


def test_engagement_no_comments_ratio_undefined():
    records = [record(0, False, bmi_value=22.0), record(1, True, bmi_value=22.0)]
    stats = engagement_stats(records)
    assert stats.rate_correct == 0.0 and stats.rate_incorrect == 0.0
    assert stats.ratio is None


def test_engagement_equal_rates():
    records = [
        record(0, False, bmi_value=22.0, comment="a"),
        record(1, False, bmi_value=22.0),
        record(2, True, bmi_value=22.0, comment="b"),
        record(3, True, bmi_value=22.0),
    ]
    assert engagement_stats(records).ratio == pytest.approx(1.0)


def test_demographics_completeness_counts():
    records = [record(i, False, bmi_value=22.0, age=30.0) for i in range(4)]
    records += [record(10 + i, False) for i in range(6)]
    tables = demographics_summary(records)
    rows = {r[0]: r for r in tables["completeness"][1:]}
    assert rows["age"] == ["age", 4, 10]
    assert rows["bmi"] == ["bmi", 4, 10]


def test_demographics_empty_records_headers_only():
    tables = demographics_summary([])
    assert tables["age"] == [["bin_start", "bin_end", "count"]]
    assert tables["gender"][0] == ["gender", "count"]


def test_demographics_hand_tally():
    records = [
        record(0, False, bmi_value=22.0, age=25.0, gender="female"),
        record(1, False, bmi_value=23.0, age=25.0, gender="female"),
        record(2, False, bmi_value=31.0, age=47.0, gender="male"),
        record(3, False, age=62.0),
    ]
    tables = demographics_summary(records)
    age_counts = {(r[0], r[1]): r[2] for r in tables["age"][1:]}
    assert age_counts[(20, 30)] == 2 and age_counts[(40, 50)] == 1 and age_counts[(60, 70)] == 1
    bmi_counts = {(r[0], r[1]): r[2] for r in tables["bmi"][1:]}
    assert bmi_counts[(22, 24)] == 2 and bmi_counts[(30, 32)] == 1
    gender = {r[0]: r[1] for r in tables["gender"][1:]}
    assert gender == {"female": 2, "male": 1, "other": 0, "undisclosed": 1}


def test_coarsen_location():
    assert coarsen_location("Tucson, Arizona") == "US/Arizona"
    assert coarsen_location("Portland, OR") == "US/Oregon"
    assert coarsen_location("to be or not to be") == "other"  # lowercase 'or' never matches
    assert coarsen_location("London, UK") == "GB/*"
    assert coarsen_location("the moon") == "other"
    assert coarsen_location(None) is None
    assert coarsen_location("  ") is None


def test_export_hides_raw_handles():
    r = RespondentRecord(
        session_id="abc",
        prediction=pred(True),
        handles={"twitter": "@realuser"},
        location="Tucson, Arizona",
    )
    rows = export_anonymized([r], salt="s1")
    import json

    text = json.dumps(rows)
    assert "realuser" not in text and "abc" not in text
    assert rows[0]["location"] == "US/Arizona"


def test_export_salt_linkability():
    r = RespondentRecord(session_id="abc", handles={"twitter": "@u"})
    a = export_anonymized([r], salt="s1")[0]
    b = export_anonymized([r], salt="s1")[0]
    c = export_anonymized([r], salt="s2")[0]
    assert a["handles"] == b["handles"] and a["respondent"] == b["respondent"]
    assert a["handles"] != c["handles"] and a["respondent"] != c["respondent"]


def test_export_requires_salt():
    with pytest.raises(FoodquizError):
        export_anonymized([], salt="")


def test_export_reimport_accuracy_unchanged():
    rng = np.random.default_rng(4)
    records = [
        record(i, bool(rng.random() > 0.5), bmi_value=float(rng.uniform(18, 40)))
        for i in range(200)
    ]
    before = accuracy_report(records)
    rows = export_anonymized(records, salt="roundtrip")
    after = accuracy_report(records_from_export(rows))
    assert before.overall == after.overall
    assert [c.accuracy for c in before.classes] == [c.accuracy for c in after.classes]


def test_records_jsonl_roundtrip(tmp_path):
    records = [record(0, True, bmi_value=30.0, age=26.0, gender="other", comment="hey")]
    path = tmp_path / "records.jsonl"
    save_records(records, path)
    loaded = load_records(path)
    assert loaded[0].to_dict() == records[0].to_dict()
    assert loaded[0].bmi == pytest.approx(records[0].bmi)


def test_record_rejects_implausible():
    with pytest.raises(ImplausibleAnthropometry):
        RespondentRecord(session_id="x", height=1.8, weight=1000.0)
