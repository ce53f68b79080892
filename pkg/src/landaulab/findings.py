"""Structured audit findings shared by the diagnostic and audit modules."""

from __future__ import annotations

from dataclasses import dataclass, field


VERDICTS = ("pass", "fail", "informational", "hypothesis-unmet")


@dataclass
class AuditFinding:
    """Outcome of one audit: verdict, measured values, tolerances, witness.

    Audits never abort a run; a failing verdict carries the witness point
    that triggered it.  ``informational`` findings record measurements that
    are not asserted.
    """

    audit: str
    verdict: str
    measured: dict
    tolerance: dict = field(default_factory=dict)
    witness: dict | None = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")

    @property
    def failed(self) -> bool:
        return self.verdict == "fail"

    def to_json_dict(self) -> dict:
        return {
            "audit": self.audit,
            "verdict": self.verdict,
            "measured": _jsonable(self.measured),
            "tolerance": _jsonable(self.tolerance),
            "witness": _jsonable(self.witness),
            "notes": list(self.notes),
        }


def _jsonable(obj):
    """Recursively coerce numpy scalars/arrays into plain Python values."""
    import numpy as np

    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    if isinstance(obj, (np.integer, np.floating, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return str(obj)
