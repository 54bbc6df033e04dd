"""Tweet-style tokenization: lowercased unigrams plus whole hashtag tokens."""

import re

_LEAD_JUNK = re.compile(r"^[^\w#@]+")
_TRAIL_JUNK = re.compile(r"[^\w]+$")
_EDGE_JUNK = re.compile(r"^[^\w]+|[^\w]+$")


def tokenize(text: str) -> list[str]:
    """Tokenize a post into lowercased word and hashtag tokens.

    URLs and @-mentions are dropped. Tokens starting with ``#`` are kept
    whole (hashtag features); other tokens get punctuation stripped from
    both edges. Empty input yields an empty list.
    """
    tokens = []
    for piece in text.split():
        low = piece.lower()
        if low.startswith("http") or low.startswith("www."):
            continue
        low = _LEAD_JUNK.sub("", low)
        if not low or low.startswith("@"):
            continue
        if low.startswith("#"):
            tok = _TRAIL_JUNK.sub("", low)
            if len(tok) > 1:
                tokens.append(tok)
        else:
            tok = _EDGE_JUNK.sub("", low)
            if tok:
                tokens.append(tok)
    return tokens


def hashtags(tokens: list[str]) -> set[str]:
    """The hashtag tokens within an already-tokenized post."""
    return {t for t in tokens if t.startswith("#")}
