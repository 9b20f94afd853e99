"""Run reports and their deterministic serialization.

Structured reports are JSON documents with this schema (version 1)::

    {
      "schema": "pseudosurf-report/1",
      "command": str,
      "seed": int | null,
      "inputs": {...},             # echo of the inputs that determine the run
      "inputs_digest": str,         # sha256 of the canonical inputs JSON
      "status": "PASS" | "FAIL",
      "checks": [
        {"name": str, "status": "PASS" | "FAIL", "stats": {...}, "detail": str}
      ],
      "data": {...}                 # command-specific payload
    }

Timings are kept on the report object and printed in text mode only, so
that structured output is byte-identical for identical inputs and seed.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

SCHEMA = "pseudosurf-report/1"


@dataclass
class Check:
    name: str
    passed: bool
    stats: dict = field(default_factory=dict)
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": "PASS" if self.passed else "FAIL",
            "stats": _clean(self.stats),
            "detail": self.detail,
        }


@dataclass
class RunReport:
    command: str
    inputs: dict = field(default_factory=dict)
    seed: int | None = None
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "RunReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.stats, c.detail))
        self.timings.update({prefix + k: v for k, v in other.timings.items()})

    @property
    def digest(self) -> str:
        blob = json.dumps(_clean(self.inputs), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "command": self.command,
            "seed": self.seed,
            "inputs": _clean(self.inputs),
            "inputs_digest": self.digest,
            "status": "PASS" if self.passed else "FAIL",
            "checks": [c.to_dict() for c in self.checks],
            "data": _clean(self.data),
        }


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item) and getattr(obj, "ndim", 1) == 0:
        obj = obj.item()
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    return str(obj)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3e}"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}={_fmt(x)}" for k, x in v.items()) + "}"
    return str(v)


def render_report(r: RunReport, fmt: str = "structured") -> bytes:
    """Serialize ``r`` as JSON (``structured``) or human-readable ``text``."""
    if fmt in ("structured", "json"):
        return (json.dumps(r.to_dict(), indent=2, sort_keys=True) + "\n").encode()
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = [f"{r.command}: {'PASS' if r.passed else 'FAIL'}"]
    if r.seed is not None:
        lines.append(f"  seed: {r.seed}")
    for c in r.checks:
        stats = ", ".join(f"{k}={_fmt(v)}" for k, v in c.stats.items())
        lines.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}" + (f"  {stats}" if stats else ""))
        if c.detail:
            lines.append(f"         {c.detail}")
    for k, v in r.data.items():
        lines.append(f"  {k}: {_fmt(v) if not isinstance(v, (dict, list)) else json.dumps(_clean(v), sort_keys=True)}")
    for k, v in r.timings.items():
        lines.append(f"  time {k}: {v:.2f}s")
    return ("\n".join(lines) + "\n").encode()
