"""Structured check reports and their ``.msr`` JSON form."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any

from .symexpr import Settings, ZeroTest

PASS, FAIL, UNDECIDED = "PASS", "FAIL", "UNDECIDED"
VERDICTS = (PASS, FAIL, UNDECIDED)
FORMAT_VERSION = 1


def verdict_of(t: ZeroTest) -> str:
    """ZERO means the checked property holds."""
    return {ZeroTest.ZERO: PASS, ZeroTest.NONZERO: FAIL, ZeroTest.UNDECIDED: UNDECIDED}[t]


@dataclass
class Record:
    id: str
    check: str
    targets: list[str]
    verdict: str
    certificates: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"bad verdict {self.verdict!r}")


@dataclass
class Report:
    scene: str | None
    settings: dict[str, Any]
    records: list[Record] = field(default_factory=list)

    @classmethod
    def for_settings(cls, scene: str | None, settings: Settings) -> "Report":
        s = asdict(settings)
        s["box"] = list(s["box"])
        return cls(scene, s)

    def add(self, check: str, targets: list[str], verdict: str, **certificates) -> Record:
        rec = Record(f"c{len(self.records) + 1:03d}", check, list(targets), verdict,
                     {k: _plain(v) for k, v in certificates.items()})
        self.records.append(rec)
        return rec

    def counts(self) -> dict[str, int]:
        return {v: sum(1 for r in self.records if r.verdict == v) for v in VERDICTS}

    @property
    def has_fail(self) -> bool:
        return any(r.verdict == FAIL for r in self.records)

    @property
    def has_undecided(self) -> bool:
        return any(r.verdict == UNDECIDED for r in self.records)

    def to_dict(self) -> dict:
        return {
            "format": "msr",
            "version": FORMAT_VERSION,
            "scene": self.scene,
            "settings": self.settings,
            "records": [asdict(r) for r in self.records],
            "summary": self.counts(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        data = json.loads(text)
        if data.get("format") != "msr" or data.get("version") != FORMAT_VERSION:
            raise ValueError("not a version-1 msr report")
        rep = cls(data["scene"], data["settings"], [Record(**r) for r in data["records"]])
        if rep.counts() != data["summary"]:
            raise ValueError("summary does not match the records")
        return rep

    def to_text(self) -> str:
        lines = []
        for r in self.records:
            lines.append(f"{r.verdict:<9} {r.id} {r.check} {' '.join(r.targets)}".rstrip())
            for k in sorted(r.certificates):
                lines.append(f"    {k}: {_short(r.certificates[k])}")
        c = self.counts()
        lines.append(f"summary: {c[PASS]} pass, {c[FAIL]} fail, {c[UNDECIDED]} undecided")
        return "\n".join(lines)


def _plain(v):
    """Coerce certificate values to JSON-friendly data."""
    if isinstance(v, ZeroTest):
        return v.value
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if v is None or isinstance(v, (bool, int, str)):
        return v
    if hasattr(v, "to_text"):
        return v.to_text()
    return str(v)


def _short(v) -> str:
    s = json.dumps(v, sort_keys=True) if not isinstance(v, str) else v
    return s if len(s) <= 200 else s[:197] + "..."
