"""Plain result records returned by validators and checks."""

from dataclasses import dataclass, field
from typing import Any


@dataclass
class ValidationReport:
    """Outcome of a structural validation.

    ``issues`` lists every offending entry; ``ok`` is true iff it is empty.
    ``details`` carries derived facts (irreducibility, period, ...) that
    downstream code reads.
    """

    subject: str
    issues: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.issues

    def to_dict(self) -> dict:
        return {"subject": self.subject, "ok": self.ok,
                "issues": list(self.issues), "details": _jsonable(self.details)}


@dataclass
class CheckReport:
    """Outcome of a property check. Failures are findings, not exceptions."""

    name: str
    checked: int = 0
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, message: str) -> None:
        self.failures.append(message)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checked": self.checked,
                "failures": list(self.failures), "notes": list(self.notes),
                "details": _jsonable(self.details)}


def _jsonable(obj: Any) -> Any:
    from fractions import Fraction

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((_jsonable(v) for v in obj), key=repr)
    if isinstance(obj, Fraction):
        return fraction_str(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if hasattr(obj, "item"):
        return obj.item()
    return str(obj)


def fraction_str(q) -> str:
    return f"{q.numerator}" if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
