"""Structured check results shared by the engine and the command line."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

PASS = "pass"
FAIL = "fail"
ERROR = "error"

EXIT_CODES = {PASS: 0, FAIL: 1, ERROR: 2, "inconsistent": 3}


@dataclass(frozen=True)
class Finding:
    kind: str
    location: str
    detail: str = ""

    def as_dict(self) -> dict:
        return {"kind": self.kind, "location": self.location, "detail": self.detail}

    def __str__(self) -> str:
        tail = f" {self.detail}" if self.detail else ""
        return f"{self.kind} at {self.location}{tail}"


@dataclass
class Report:
    """A list of findings plus numeric metrics.

    ``ok`` is true when nothing was found.  ``omitted`` counts findings that
    were detected but not stored because of ``limit``.
    """

    name: str
    items: list[Finding] = field(default_factory=list)
    metrics: dict[str, Any] = field(default_factory=dict)
    limit: int | None = 20
    omitted: int = 0

    @property
    def ok(self) -> bool:
        return not self.items and not self.omitted

    @property
    def status(self) -> str:
        return PASS if self.ok else FAIL

    @property
    def count(self) -> int:
        return len(self.items) + self.omitted

    def add(self, kind: str, location: str, detail: str = "") -> None:
        if self.limit is not None and len(self.items) >= self.limit:
            self.omitted += 1
        else:
            self.items.append(Finding(kind, location, detail))

    def add_many(self, kind: str, total: int, examples: list[tuple[str, str]]) -> None:
        """Record ``total`` findings of which only ``examples`` are spelled out."""
        for loc, detail in examples:
            self.add(kind, loc, detail)
        self.omitted += max(0, total - len(examples))

    def merge(self, other: Report, prefix: str | None = None) -> None:
        for f in other.items:
            loc = f"{prefix}/{f.location}" if prefix else f.location
            self.add(f.kind, loc, f.detail)
        self.omitted += other.omitted
        for key, val in other.metrics.items():
            self.metrics[f"{prefix}.{key}" if prefix else key] = val

    def __bool__(self) -> bool:
        return self.ok

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "items": [f.as_dict() for f in self.items],
            "omitted": self.omitted,
            "metrics": {k: _jsonable(v) for k, v in self.metrics.items()},
        }

    def render(self) -> str:
        lines = [f"check: {self.name}"]
        for key, val in self.metrics.items():
            lines.append(f"{key}: {format_metric(val)}")
        for f in self.items:
            lines.append(f"finding: {f}")
        if self.omitted:
            lines.append(f"findings_omitted: {self.omitted}")
        lines.append(f"status: {self.status}")
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def format_metric(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return f"{val:.12f}"
    if isinstance(val, complex):
        return f"{val.real:.12f}{val.imag:+.12f}j"
    if isinstance(val, (list, tuple)):
        return "[" + ", ".join(format_metric(v) for v in val) + "]"
    return str(val)


def _jsonable(val):
    if isinstance(val, complex):
        return {"re": val.real, "im": val.imag}
    if isinstance(val, (list, tuple)):
        return [_jsonable(v) for v in val]
    if isinstance(val, (int, float, str, bool)) or val is None:
        return val
    return str(val)
