"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

RESULTS = {}


def record(number: int, title: str, passed: bool, detail: str) -> bool:
    RESULTS[number] = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    print(RESULTS[number])
    return passed
