"""Check reports and the ledger of measured constants."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field


def _plain(x):
    """Make context values JSON friendly (numpy scalars, tuples, objects)."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if hasattr(x, "item") and callable(x.item):
        return x.item()
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    if hasattr(x, "as_dict"):
        return x.as_dict()
    if hasattr(x, "__dataclass_fields__"):
        return {k: _plain(getattr(x, k)) for k in x.__dataclass_fields__}
    return repr(x)


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else repr(x)


@dataclass
class CheckReport:
    """One inequality evaluated on one object.

    ``measured_constant`` is the smallest constant for which the inequality
    would hold on this object; ``passed`` is the verdict under the installed
    constant (stored in context["constant"] when there is one).
    """

    name: str
    lhs: float
    rhs: float
    measured_constant: float
    passed: bool
    context: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": _num(self.lhs), "rhs": _num(self.rhs),
                "measured_constant": _num(self.measured_constant),
                "pass": bool(self.passed), "context": _plain(self.context)}

    @property
    def context_hash(self) -> str:
        text = json.dumps(_plain(self.context), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def reports_to_json(reports) -> str:
    return json.dumps([r.as_dict() for r in reports], indent=2, sort_keys=True)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["name", "lhs", "rhs", "constant", "pass", "context_hash"])
    for r in reports:
        wr.writerow([r.name, repr(float(r.lhs)), repr(float(r.rhs)),
                     repr(float(r.measured_constant)), int(bool(r.passed)),
                     r.context_hash])
    return buf.getvalue()


class ConstantLedger:
    """Append-only record of named constants; later writes replace earlier ones."""

    VERSION = "wfde-ledger/1"

    def __init__(self, entries: dict | None = None):
        self._entries: dict = {}
        for k, v in (entries or {}).items():
            self._entries[k] = dict(v)

    def record(self, name: str, value: float, source: str, **meta) -> float:
        value = float(value)
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"ledger constant {name} must be positive and finite, got {value}")
        self._entries[name] = {"value": value, "source": source, **_plain(meta)}
        return value

    def get(self, name: str, default=None):
        e = self._entries.get(name)
        return default if e is None else e["value"]

    def __getitem__(self, name: str) -> float:
        return self._entries[name]["value"]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def names(self) -> list:
        return sorted(self._entries)

    def entry(self, name: str) -> dict:
        return dict(self._entries[name])

    def merge(self, other: "ConstantLedger") -> "ConstantLedger":
        for k in other.names():
            self._entries[k] = other.entry(k)
        return self

    def to_json(self, **header) -> str:
        doc = {"format": self.VERSION, **_plain(header),
               "constants": {k: self._entries[k] for k in sorted(self._entries)}}
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ConstantLedger":
        doc = json.loads(text)
        return cls(doc.get("constants", {}))
