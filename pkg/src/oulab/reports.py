"""Verification reports and run manifests.

Every check in the library returns a :class:`VerificationReport`; the CLI
bundles them with a :class:`RunManifest` so a report identifies the exact
inputs, seeds and tolerances that produced it.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"
INCONCLUSIVE = "inconclusive"

_VERDICTS = (PASS, FAIL, NOT_APPLICABLE, INCONCLUSIVE)


def jsonable(obj):
    """Recursively convert numpy scalars/arrays for JSON serialization."""
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one check.

    ``verdict`` is pass/fail decided by statistic vs threshold, or
    not-applicable / inconclusive with a reason attached.  ``parameters``
    records seeds, engine settings and tolerances; ``witnesses`` holds the
    points (and values) responsible for the extremal statistic.
    """

    check_name: str
    parameters: dict = field(default_factory=dict)
    statistic: float | None = None
    threshold: float | None = None
    verdict: str = PASS
    witnesses: list = field(default_factory=list)
    reason: str | None = None

    def __post_init__(self):
        if self.verdict not in _VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict in (NOT_APPLICABLE, INCONCLUSIVE) and not self.reason:
            raise ValueError(f"{self.verdict} verdict requires a reason")

    @property
    def ok(self) -> bool:
        """True when the verdict does not block an all-pass run."""
        return self.verdict in (PASS, NOT_APPLICABLE)

    def to_dict(self) -> dict:
        return jsonable(
            {
                "check": self.check_name,
                "parameters": self.parameters,
                "statistic": self.statistic,
                "threshold": self.threshold,
                "verdict": self.verdict,
                "witnesses": self.witnesses,
                "reason": self.reason,
            }
        )


@dataclass(frozen=True)
class RunManifest:
    """Identity card of one CLI run, embedded in every emitted report."""

    command: str
    input_files: list
    config_overrides: dict
    seed: int | None
    tool_version: str
    timestamp: str

    def to_dict(self) -> dict:
        return jsonable(
            {
                "command": self.command,
                "inputFiles": self.input_files,
                "configOverrides": self.config_overrides,
                "seed": self.seed,
                "toolVersion": self.tool_version,
                "timestamp": self.timestamp,
            }
        )


def manifest_timestamp() -> str:
    """UTC timestamp; honors SOURCE_DATE_EPOCH for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def report_to_json(doc: dict) -> str:
    """Canonical structured-text rendering of a report document."""
    return json.dumps(jsonable(doc), indent=2, sort_keys=False)


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def render_pretty(reports: list[VerificationReport]) -> list[str]:
    """Aligned human-readable lines, one per report."""
    lines = []
    for r in reports:
        line = f"[{r.verdict.upper():^14}] {r.check_name}: statistic={_fmt(r.statistic)} threshold={_fmt(r.threshold)}"
        if r.reason:
            line += f" ({r.reason})"
        lines.append(line)
    return lines


def write_csv(fh, header: list[str], rows: list[list]) -> None:
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(_fmt(v) for v in row) + "\n")
