"""Community-grouped document loading and binary community labels.

Input formats:
  corpus.jsonl  one ``{"community": "<id>", "text": "<post>"}`` object per line
  labels.csv    header ``community,overweight_rate`` with rates in [0, 100]
"""

import csv
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import FormatError
from .text import hashtags, tokenize

# Default admission filter; configurable everywhere it is used.
DEFAULT_MEAL_HASHTAGS = frozenset(
    {"#breakfast", "#brunch", "#lunch", "#dinner", "#supper", "#snack", "#meal"}
)


@dataclass(frozen=True)
class Document:
    community_id: str
    text: str


@dataclass
class LoadReport:
    kept: int = 0
    discarded_no_hashtag: int = 0
    rejected_unknown_community: list[tuple[int, str]] = field(default_factory=list)
    empty_communities: list[str] = field(default_factory=list)


@dataclass
class CommunityCorpus:
    """Documents grouped by community, admitted by a meal-hashtag filter."""

    documents: dict[str, list[Document]]
    hashtag_filter: frozenset[str]
    report: LoadReport = field(default_factory=LoadReport)

    def communities(self) -> list[str]:
        return sorted(self.documents)

    def sizes(self) -> dict[str, int]:
        return {c: len(docs) for c, docs in self.documents.items()}

    def total_documents(self) -> int:
        return sum(len(docs) for docs in self.documents.values())

    def to_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for community in self.communities():
                for doc in self.documents[community]:
                    fh.write(
                        json.dumps(
                            {"community": doc.community_id, "text": doc.text},
                            ensure_ascii=False,
                        )
                        + "\n"
                    )


def normalize_hashtag_filter(tags) -> frozenset[str]:
    out = set()
    for tag in tags:
        tag = tag.strip().lower()
        if not tag:
            continue
        if not tag.startswith("#"):
            tag = "#" + tag
        out.add(tag)
    return frozenset(out)


def matches_filter(text: str, hashtag_filter: frozenset[str]) -> bool:
    """True iff the post contains at least one admitted hashtag token.

    Matching is case-insensitive and anchored to ``#``-prefixed tokens;
    the bare word never matches.
    """
    return bool(hashtags(tokenize(text)) & hashtag_filter)


def load_documents(
    path: str | Path,
    hashtag_filter=DEFAULT_MEAL_HASHTAGS,
    known_communities: set[str] | None = None,
) -> CommunityCorpus:
    """Load a JSONL corpus, keeping lines that match the hashtag filter.

    When ``known_communities`` is given, lines from other communities are
    collected into the corpus report (not fatal), and communities with
    zero admitted documents are reported rather than dropped.
    """
    hashtag_filter = normalize_hashtag_filter(hashtag_filter)
    report = LoadReport()
    grouped: dict[str, list[Document]] = {}
    if known_communities is not None:
        grouped = {c: [] for c in sorted(known_communities)}

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "community" not in obj or "text" not in obj:
                raise FormatError(f"line {lineno}: expected object with 'community' and 'text'")
            community, text = obj["community"], obj["text"]
            if not isinstance(community, str) or not isinstance(text, str):
                raise FormatError(f"line {lineno}: 'community' and 'text' must be strings")
            if not text.strip():
                raise FormatError(f"line {lineno}: empty text")
            if known_communities is not None and community not in known_communities:
                report.rejected_unknown_community.append((lineno, community))
                continue
            if not matches_filter(text, hashtag_filter):
                report.discarded_no_hashtag += 1
                continue
            grouped.setdefault(community, []).append(Document(community, text))
            report.kept += 1

    report.empty_communities = sorted(c for c, docs in grouped.items() if not docs)
    return CommunityCorpus(documents=grouped, hashtag_filter=hashtag_filter, report=report)


@dataclass
class CommunityLabels:
    """Per-community overweight rates binarized against the median rate."""

    rates: dict[str, float]
    median: float
    labels: dict[str, bool]
    tie_positive: bool = False

    @classmethod
    def from_rates(cls, rates: dict[str, float], tie_positive: bool = False) -> "CommunityLabels":
        if not rates:
            raise FormatError("no communities in labels")
        med = float(statistics.median(rates.values()))
        labels = {
            c: (r > med) or (tie_positive and r == med) for c, r in rates.items()
        }
        return cls(rates=dict(rates), median=med, labels=labels, tie_positive=tie_positive)

    def communities(self) -> list[str]:
        return sorted(self.rates)

    def label_counts(self) -> tuple[int, int]:
        """(count_true, count_false)."""
        n_true = sum(self.labels.values())
        return n_true, len(self.labels) - n_true


def load_labels(path: str | Path, tie_positive: bool = False) -> CommunityLabels:
    """Load labels.csv and binarize rates against the median community."""
    rates: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != [
            "community",
            "overweight_rate",
        ]:
            raise FormatError("labels.csv must have header 'community,overweight_rate'")
        for lineno, row in enumerate(reader, start=2):
            community = (row["community"] or "").strip()
            if not community:
                raise FormatError(f"line {lineno}: empty community id")
            if community in rates:
                raise FormatError(f"line {lineno}: duplicate community '{community}'")
            try:
                rate = float(row["overweight_rate"])
            except (TypeError, ValueError) as exc:
                raise FormatError(f"line {lineno}: rate does not parse") from exc
            if not 0.0 <= rate <= 100.0:
                raise FormatError(f"line {lineno}: rate {rate} outside [0, 100]")
            rates[community] = rate
    return CommunityLabels.from_rates(rates, tie_positive=tie_positive)
