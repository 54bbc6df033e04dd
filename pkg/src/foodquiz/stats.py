"""Respondent records and evaluation statistics.

BMI is weight(kg) / height(m)^2; the individual label is BMI >= cutoff
(default 28.7, configurable). Accuracy reports decompose overall accuracy
into per-class proportion x accuracy, and the identity
overall = sum(p_c * a_c) is checked on every report.
"""

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .canonical import salted_hash
from .exceptions import FoodquizError, FormatError, ImplausibleAnthropometry
from .forest import Prediction

DEFAULT_CUTOFF = 28.7

KG_PER_LB = 0.45359237
M_PER_IN = 0.0254

HEIGHT_RANGE_M = (0.5, 2.8)
WEIGHT_RANGE_KG = (20.0, 400.0)

GENDERS = ("female", "male", "other", "undisclosed")

AGE_EDGES = list(range(0, 110, 10))
BMI_EDGES = list(range(10, 62, 2))


def to_kg(weight: float, unit: str = "kg") -> float:
    if unit == "kg":
        return float(weight)
    if unit in ("lb", "lbs"):
        return float(weight) * KG_PER_LB
    raise FoodquizError(f"unknown weight unit '{unit}'")


def to_m(height: float, unit: str = "m") -> float:
    if unit == "m":
        return float(height)
    if unit == "cm":
        return float(height) / 100.0
    if unit in ("in", "inch", "inches"):
        return float(height) * M_PER_IN
    raise FoodquizError(f"unknown height unit '{unit}'")


def bmi(weight: float, height: float, weight_unit: str = "kg", height_unit: str = "m") -> float:
    """Body mass index, rejecting implausible anthropometry."""
    w = to_kg(weight, weight_unit)
    h = to_m(height, height_unit)
    if not WEIGHT_RANGE_KG[0] < w < WEIGHT_RANGE_KG[1]:
        raise ImplausibleAnthropometry(f"weight {w:.1f} kg outside plausible range")
    if not HEIGHT_RANGE_M[0] < h < HEIGHT_RANGE_M[1]:
        raise ImplausibleAnthropometry(f"height {h:.2f} m outside plausible range")
    return w / (h * h)


def label_individual(bmi_value: float, cutoff: float = DEFAULT_CUTOFF) -> bool:
    """True iff BMI is at or above the cutoff (boundary is positive)."""
    return bmi_value >= cutoff


@dataclass
class RespondentRecord:
    """One participant: transcript, prediction, and voluntary demographics.

    Handles are stored as salted hashes only; raw handles never persist.
    Height is meters, weight kilograms; both optional, and without both
    there is no BMI, true label, or correctness.
    """

    session_id: str
    transcript: list[tuple[str, int]] = field(default_factory=list)
    prediction: Optional[Prediction] = None
    height: Optional[float] = None
    weight: Optional[float] = None
    age: Optional[float] = None
    gender: str = "undisclosed"
    location: Optional[str] = None
    handles: dict[str, str] = field(default_factory=dict)
    comment: Optional[str] = None

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise FormatError(f"gender must be one of {GENDERS}, got '{self.gender}'")
        if self.height is not None and self.weight is not None:
            # range check via bmi(); raises ImplausibleAnthropometry
            bmi(self.weight, self.height)

    @property
    def bmi(self) -> Optional[float]:
        if self.height is None or self.weight is None:
            return None
        return self.weight / (self.height * self.height)

    def true_label(self, cutoff: float = DEFAULT_CUTOFF) -> Optional[bool]:
        b = self.bmi
        return None if b is None else label_individual(b, cutoff)

    def correct(self, cutoff: float = DEFAULT_CUTOFF) -> Optional[bool]:
        t = self.true_label(cutoff)
        if t is None or self.prediction is None:
            return None
        return self.prediction.label == t

    def has_comment(self) -> bool:
        return bool(self.comment and self.comment.strip())

    def to_dict(self) -> dict:
        out = {
            "session_id": self.session_id,
            "transcript": [{"question": q, "choice": c} for q, c in self.transcript],
            "prediction": None,
            "height": self.height,
            "weight": self.weight,
            "age": self.age,
            "gender": self.gender,
            "location": self.location,
            "handles": dict(self.handles),
            "comment": self.comment,
        }
        if self.prediction is not None:
            out["prediction"] = {
                "label": self.prediction.label,
                "votes_true": self.prediction.votes_true,
                "votes_total": self.prediction.votes_total,
            }
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "RespondentRecord":
        pred = obj.get("prediction")
        prediction = None
        if pred is not None:
            prediction = Prediction(
                label=bool(pred["label"]),
                votes_true=int(pred["votes_true"]),
                votes_total=int(pred["votes_total"]),
                tree_labels=tuple(pred.get("tree_labels", ())),
                tie=bool(pred.get("tie", False)),
            )
        return cls(
            session_id=obj["session_id"],
            transcript=[(e["question"], int(e["choice"])) for e in obj.get("transcript", [])],
            prediction=prediction,
            height=obj.get("height"),
            weight=obj.get("weight"),
            age=obj.get("age"),
            gender=obj.get("gender", "undisclosed"),
            location=obj.get("location"),
            handles=dict(obj.get("handles", {})),
            comment=obj.get("comment"),
        )


def save_records(records: list[RespondentRecord], path: str | Path) -> None:
    from .canonical import dumps

    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(dumps(r.to_dict()) + "\n")


def load_records(path: str | Path) -> list[RespondentRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(RespondentRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise FormatError(f"records line {lineno}: {exc}") from exc
    return records


@dataclass
class ClassStats:
    name: str
    n: int
    proportion: float
    accuracy: Optional[float]  # None when the class is empty


@dataclass
class AccuracyReport:
    n_scored: int
    overall: float
    classes: list[ClassStats]
    n_missing: int
    n_ties: int

    def to_dict(self) -> dict:
        return {
            "n_scored": self.n_scored,
            "overall": self.overall,
            "classes": [
                {"name": c.name, "n": c.n, "proportion": c.proportion, "accuracy": c.accuracy}
                for c in self.classes
            ],
            "n_missing": self.n_missing,
            "n_ties": self.n_ties,
        }


def accuracy_report(records: list[RespondentRecord], cutoff: float = DEFAULT_CUTOFF) -> AccuracyReport:
    """Overall and per-class accuracy over records that carry a BMI.

    Records without a BMI or a prediction are counted as missing, not
    scored. The decomposition identity overall = sum(p_c * a_c) holds to
    1e-9 by construction and is asserted here.
    """
    scored = [r for r in records if r.bmi is not None and r.prediction is not None]
    n_missing = len(records) - len(scored)
    if not scored:
        raise FoodquizError("no records with both BMI and prediction")

    n = len(scored)
    classes = []
    overall_correct = 0
    for name, member in ((f"bmi>={cutoff}", True), (f"bmi<{cutoff}", False)):
        group = [r for r in scored if r.true_label(cutoff) is member]
        correct = sum(1 for r in group if r.correct(cutoff))
        overall_correct += correct
        classes.append(
            ClassStats(
                name=name,
                n=len(group),
                proportion=len(group) / n,
                accuracy=(correct / len(group)) if group else None,
            )
        )
    overall = overall_correct / n
    decomposed = sum(c.proportion * c.accuracy for c in classes if c.accuracy is not None)
    assert abs(overall - decomposed) < 1e-9, "accuracy decomposition identity violated"
    return AccuracyReport(
        n_scored=n,
        overall=overall,
        classes=classes,
        n_missing=n_missing,
        n_ties=sum(1 for r in scored if r.prediction.tie),
    )


@dataclass
class EngagementStats:
    n_correct: int
    comments_correct: int
    n_incorrect: int
    comments_incorrect: int

    @property
    def rate_correct(self) -> Optional[float]:
        return self.comments_correct / self.n_correct if self.n_correct else None

    @property
    def rate_incorrect(self) -> Optional[float]:
        return self.comments_incorrect / self.n_incorrect if self.n_incorrect else None

    @property
    def ratio(self) -> Optional[float]:
        """rate_incorrect / rate_correct; None when undefined."""
        rc, ri = self.rate_correct, self.rate_incorrect
        if not rc or ri is None:
            return None
        return ri / rc

    def to_dict(self) -> dict:
        return {
            "n_correct": self.n_correct,
            "comments_correct": self.comments_correct,
            "rate_correct": self.rate_correct,
            "n_incorrect": self.n_incorrect,
            "comments_incorrect": self.comments_incorrect,
            "rate_incorrect": self.rate_incorrect,
            "ratio": self.ratio,
        }


def engagement_stats(records: list[RespondentRecord], cutoff: float = DEFAULT_CUTOFF) -> EngagementStats:
    """Comment rates among correctly vs incorrectly predicted respondents."""
    correct_group = [r for r in records if r.correct(cutoff) is True]
    incorrect_group = [r for r in records if r.correct(cutoff) is False]
    return EngagementStats(
        n_correct=len(correct_group),
        comments_correct=sum(1 for r in correct_group if r.has_comment()),
        n_incorrect=len(incorrect_group),
        comments_incorrect=sum(1 for r in incorrect_group if r.has_comment()),
    )


@lru_cache(maxsize=1)
def _location_table() -> dict:
    text = resources.files("foodquiz.data").joinpath("locations.json").read_text("utf-8")
    return json.loads(text)


def coarsen_location(location: Optional[str]) -> Optional[str]:
    """Map free-text location to country/region; unmatched text to 'other'.

    Full names match case-insensitively on word boundaries; two-letter
    state codes only match as standalone uppercase tokens (so 'OR' in
    'Portland, OR' matches but the word 'or' never does).
    """
    if location is None or not location.strip():
        return None
    table = _location_table()
    low = location.lower()
    for phrase in sorted(table["phrases"], key=len, reverse=True):
        if re.search(r"\b" + re.escape(phrase) + r"\b", low):
            return table["phrases"][phrase]
    for token in re.split(r"[^A-Za-z]+", location):
        if token.isupper() and token in table["tokens"]:
            return table["tokens"][token]
    return "other"


def _histogram(values: list[float], edges: list[int]) -> list[tuple[int, int, int]]:
    if not values:
        return []
    arr = np.clip(np.asarray(values, dtype=np.float64), edges[0], edges[-1] - 1e-9)
    counts, _ = np.histogram(arr, bins=edges)
    return [(edges[i], edges[i + 1], int(c)) for i, c in enumerate(counts)]


def demographics_summary(records: list[RespondentRecord]) -> dict[str, list[list]]:
    """Summary tables (header row first) for external plotting.

    Tables: age and bmi histograms, bmi by gender, gender counts,
    coarsened location counts, and per-field completeness counts.
    """
    ages = [r.age for r in records if r.age is not None]
    bmis = [r.bmi for r in records if r.bmi is not None]

    tables: dict[str, list[list]] = {}
    tables["age"] = [["bin_start", "bin_end", "count"]] + [
        list(row) for row in _histogram(ages, AGE_EDGES)
    ]
    tables["bmi"] = [["bin_start", "bin_end", "count"]] + [
        list(row) for row in _histogram(bmis, BMI_EDGES)
    ]

    by_gender = [["gender", "bin_start", "bin_end", "count"]]
    for gender in GENDERS:
        vals = [r.bmi for r in records if r.gender == gender and r.bmi is not None]
        for row in _histogram(vals, BMI_EDGES):
            by_gender.append([gender, *row])
    tables["bmi_by_gender"] = by_gender

    tables["gender"] = [["gender", "count"]] + [
        [g, sum(1 for r in records if r.gender == g)] for g in GENDERS
    ]

    locations: dict[str, int] = {}
    for r in records:
        coarse = coarsen_location(r.location)
        if coarse is not None:
            locations[coarse] = locations.get(coarse, 0) + 1
    tables["location"] = [["location", "count"]] + [[k, locations[k]] for k in sorted(locations)]

    total = len(records)
    tables["completeness"] = [["field", "provided", "total"]] + [
        ["age", len(ages), total],
        ["bmi", len(bmis), total],
        ["gender", sum(1 for r in records if r.gender != "undisclosed"), total],
        ["location", sum(1 for r in records if r.location), total],
        ["comment", sum(1 for r in records if r.has_comment()), total],
    ]
    return tables


def write_demographics_csvs(tables: dict[str, list[list]], out_dir: str | Path) -> list[Path]:
    import csv

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, rows in tables.items():
        path = out_dir / f"demographics_{name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(rows)
        written.append(path)
    return written


def export_anonymized(
    records: list[RespondentRecord],
    salt: str,
    cutoff: float = DEFAULT_CUTOFF,
) -> list[dict]:
    """Anonymized per-respondent export rows.

    Session ids are re-keyed and handles hashed with the given salt (same
    salt => linkable across exports, different salt => unlinkable);
    locations are coarsened to country/region.
    """
    if not salt:
        raise FoodquizError("export requires a non-empty salt")
    rows = []
    for r in records:
        pred = None
        if r.prediction is not None:
            pred = {
                "label": r.prediction.label,
                "votes_true": r.prediction.votes_true,
                "votes_total": r.prediction.votes_total,
            }
        rows.append(
            {
                "respondent": salted_hash(salt, r.session_id)[:16],
                "answers": [{"question": q, "choice": c} for q, c in r.transcript],
                "prediction": pred,
                "correct": r.correct(cutoff),
                "height": r.height,
                "weight": r.weight,
                "bmi": r.bmi,
                "age": r.age,
                "gender": r.gender,
                "location": coarsen_location(r.location),
                "comment": r.comment,
                "handles": {k: salted_hash(salt, v) for k, v in r.handles.items()},
            }
        )
    return rows


def save_export(rows: list[dict], path: str | Path) -> None:
    from .canonical import dumps

    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(dumps(row) + "\n")


def records_from_export(rows: list[dict]) -> list[RespondentRecord]:
    """Rebuild evaluable records from an anonymized export."""
    out = []
    for row in rows:
        pred = row.get("prediction")
        prediction = None
        if pred is not None:
            prediction = Prediction(
                label=bool(pred["label"]),
                votes_true=int(pred["votes_true"]),
                votes_total=int(pred["votes_total"]),
                tree_labels=(),
                tie=False,
            )
        out.append(
            RespondentRecord(
                session_id=row["respondent"],
                transcript=[(e["question"], int(e["choice"])) for e in row.get("answers", [])],
                prediction=prediction,
                height=row.get("height"),
                weight=row.get("weight"),
                age=row.get("age"),
                gender=row.get("gender", "undisclosed"),
                location=row.get("location"),
                comment=row.get("comment"),
            )
        )
    return out
