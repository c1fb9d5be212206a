"""Collects one pass/fail line per acceptance criterion for the terminal summary."""
import sys

RESULTS = {}


def report(number, title, ok, detail=""):
    """Record and print a criterion outcome, then assert it."""
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS[number] = line
    print(line, file=sys.__stdout__, flush=True)
    assert ok, line
