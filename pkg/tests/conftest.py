"""Shared helpers for the test suite.

Kept deliberately dumb: plain python loops and math.exp, no shortcuts through
the package's own vectorized code paths.
"""

import math

import pytest

import protobound as pb

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, name: str, passed: int, total: int) -> bool:
    """Collect one verdict line per acceptance criterion for the summary."""
    ok = passed == total
    ACCEPTANCE_LINES.append(
        f"[criterion {number}] {name}: {passed}/{total} "
        f"{'PASS' if ok else 'FAIL'}"
    )
    return ok


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def naive_class_scores(classes, records, x, sigma):
    """Linear-domain scores by brute force.

    records: iterable of (coords, c, y) with y possibly None.
    """
    scores = {}
    for cls in classes:
        total = 0.0
        for coords, c, y in records:
            d2 = sum((a - b) ** 2 for a, b in zip(coords, x))
            k = math.exp(-d2 / (2.0 * sigma * sigma))
            if c == cls:
                total += k
            if y == cls:
                total -= k
        scores[cls] = total
    return scores


def mirror_weights(dataset, prototypes, cfg, wrong_of=None):
    """One record per prototype: +1 on its own class, -1 on a wrong class.

    wrong_of(index) may override the default "first other class" choice.
    Single-class datasets get y=None records.
    """
    w = pb.DualWeightVector(cfg, dataset.classes, dataset.dim)
    for idx in prototypes.indices:
        point = dataset[idx]
        if wrong_of is not None:
            y = wrong_of(idx)
        else:
            y = next((c for c in dataset.classes if c != point.label), None)
        w.append(idx, point.coords, point.label, y)
    return w


@pytest.fixture
def line3():
    """Three collinear points; the smallest set whose condensation is a
    strict subset."""
    return pb.Dataset(
        [
            pb.LabeledPoint((0.0,), "A"),
            pb.LabeledPoint((10.0,), "B"),
            pb.LabeledPoint((11.0,), "B"),
        ]
    )
