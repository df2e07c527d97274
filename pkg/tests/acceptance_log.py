"""Collects one verdict line per acceptance criterion for the terminal summary."""

LINES = {}


def record(number, passed, title, detail):
    line = f"AC{number:<2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    LINES[number] = line
    print(line)
    return passed
