from hypothesis import given
from hypothesis import strategies as st

from foodquiz.text import hashtags, tokenize


def test_basic_rules():
    assert tokenize("Fruit salad! #Breakfast http://t.co/x") == ["fruit", "salad", "#breakfast"]


def test_mention_and_bare_punctuation_dropped():
    assert tokenize("@amy mac & cheese") == ["mac", "cheese"]


def test_empty():
    assert tokenize("") == []


def test_urls_and_www():
    assert tokenize("see www.example.com and HTTPS://x.y") == ["see", "and"]


def test_hashtag_kept_whole_and_lowercased():
    assert tokenize('loving "#Cook"!') == ["loving", "#cook"]
    assert hashtags(tokenize("#Dinner time #DINNER")) == {"#dinner"}


def test_edge_punctuation_stripped():
    assert tokenize("(eggs), toast...") == ["eggs", "toast"]


@given(st.text(max_size=200))
def test_idempotent(text):
    once = tokenize(text)
    assert tokenize(" ".join(once)) == once
