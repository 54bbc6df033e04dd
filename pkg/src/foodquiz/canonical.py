"""Canonical JSON serialization and content fingerprints.

All artifacts written by this package (forest.json, quiz.json, records)
go through ``dumps`` so that identical inputs produce identical bytes,
which the reproducibility tests rely on.
"""

import hashlib
import json
from typing import Any


def dumps(obj: Any) -> str:
    """Serialize to compact JSON with sorted keys (stable byte output)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def fingerprint(obj: Any) -> str:
    """Hex content hash of an object's canonical JSON form."""
    return hashlib.sha256(dumps(obj).encode("utf-8")).hexdigest()


def salted_hash(salt: str, value: str) -> str:
    """Deterministic salted hash used for handle anonymization."""
    return hashlib.sha256((salt + "\x00" + value).encode("utf-8")).hexdigest()
