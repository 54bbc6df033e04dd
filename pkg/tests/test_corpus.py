import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from foodquiz.corpus import (
    CommunityLabels,
    load_documents,
    load_labels,
    matches_filter,
    normalize_hashtag_filter,
)
from foodquiz.exceptions import FormatError

FILTER = frozenset({"#breakfast", "#dinner"})


def write_jsonl(path, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def test_direct_filter_match(tmp_path):
    path = tmp_path / "c.jsonl"
    write_jsonl(path, [{"community": "AZ", "text": "eggs and toast #breakfast"}])
    corpus = load_documents(path, FILTER)
    assert corpus.sizes() == {"AZ": 1}
    assert corpus.report.kept == 1


def test_filter_miss_discarded(tmp_path):
    path = tmp_path / "c.jsonl"
    write_jsonl(path, [{"community": "AZ", "text": "eggs and toast"}])
    corpus = load_documents(path, FILTER)
    assert corpus.sizes() == {}
    assert corpus.report.discarded_no_hashtag == 1


def test_nine_line_fixture(tmp_path):
    # 5 matching lines across 2 communities, 4 misses
    rows = [
        {"community": "AZ", "text": "pancakes #breakfast"},
        {"community": "AZ", "text": "no tags here"},
        {"community": "TX", "text": "brisket #dinner tonight"},
        {"community": "AZ", "text": "omelette #Breakfast"},
        {"community": "TX", "text": "plain words breakfast"},  # bare word: no match
        {"community": "AZ", "text": "toast #breakfast again"},
        {"community": "TX", "text": "tacos #dinner"},
        {"community": "AZ", "text": "lunch break"},
        {"community": "TX", "text": "nothing again"},
    ]
    path = tmp_path / "c.jsonl"
    write_jsonl(path, rows)
    corpus = load_documents(path, FILTER)
    assert corpus.sizes() == {"AZ": 3, "TX": 2}
    assert corpus.report.discarded_no_hashtag == 4


def test_matching_case_insensitive_and_anchored():
    assert matches_filter("i love #BREAKFAST", FILTER)
    assert not matches_filter("i love breakfast", FILTER)
    assert normalize_hashtag_filter({"Breakfast"}) == frozenset({"#breakfast"})


def test_roundtrip_idempotent(tmp_path):
    rows = [
        {"community": "AZ", "text": "pancakes #breakfast"},
        {"community": "TX", "text": "tacos #dinner"},
        {"community": "TX", "text": "ignored"},
    ]
    first = tmp_path / "a.jsonl"
    write_jsonl(first, rows)
    corpus1 = load_documents(first, FILTER)
    second = tmp_path / "b.jsonl"
    corpus1.to_jsonl(second)
    corpus2 = load_documents(second, FILTER)
    assert corpus1.documents == corpus2.documents
    assert corpus2.report.discarded_no_hashtag == 0


def test_malformed_line_names_line_number(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"community":"AZ","text":"x #dinner"}\nnot json\n')
    with pytest.raises(FormatError, match="line 2"):
        load_documents(path, FILTER)


def test_unknown_community_collected_not_fatal(tmp_path):
    path = tmp_path / "c.jsonl"
    write_jsonl(
        path,
        [
            {"community": "AZ", "text": "x #dinner"},
            {"community": "??", "text": "y #dinner"},
        ],
    )
    corpus = load_documents(path, FILTER, known_communities={"AZ", "TX"})
    assert corpus.sizes() == {"AZ": 1, "TX": 0}
    assert corpus.report.rejected_unknown_community == [(2, "??")]
    assert corpus.report.empty_communities == ["TX"]


def test_labels_strict_greater():
    labels = CommunityLabels.from_rates({"A": 30.0, "B": 25.0, "C": 20.0})
    assert labels.median == 25.0
    assert labels.labels == {"A": True, "B": False, "C": False}


def test_labels_even_count_median():
    labels = CommunityLabels.from_rates({"A": 30.0, "B": 20.0, "C": 20.0, "D": 10.0})
    assert labels.median == 20.0
    assert labels.labels == {"A": True, "B": False, "C": False, "D": False}


def test_51_distinct_rates():
    rates = {f"S{i:02d}": 10.0 + i for i in range(51)}
    labels = CommunityLabels.from_rates(rates)
    assert labels.label_counts() == (25, 26)


def test_median_tie_flag():
    labels = CommunityLabels.from_rates({"A": 30.0, "B": 25.0, "C": 20.0}, tie_positive=True)
    assert labels.labels == {"A": True, "B": True, "C": False}


@given(st.lists(st.floats(min_value=0, max_value=100), min_size=1, max_size=80, unique=True))
def test_label_balance_property(rates):
    # floor(n/2) positives: odd n leaves the median element negative; even n
    # splits strictly around the midpoint mean.
    labels = CommunityLabels.from_rates({f"c{i}": r for i, r in enumerate(rates)})
    n_true, n_false = labels.label_counts()
    assert n_true == len(rates) // 2
    assert n_false - n_true in (0, 1)


def test_load_labels_csv(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("community,overweight_rate\nA,30\nB,25\nC,20\n")
    labels = load_labels(path)
    assert labels.labels == {"A": True, "B": False, "C": False}


def test_load_labels_duplicate_fatal(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("community,overweight_rate\nA,30\nA,25\n")
    with pytest.raises(FormatError, match="duplicate"):
        load_labels(path)


def test_load_labels_range_fatal(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("community,overweight_rate\nA,101\n")
    with pytest.raises(FormatError, match="outside"):
        load_labels(path)
