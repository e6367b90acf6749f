import random
from fractions import Fraction
from pathlib import Path

import pytest

from shiftlocus.elamination import CriticalSet, Leaf, is_generic_height, validate_critical_set

DATA = Path(__file__).parent / "data"

# criterion number -> summary line, filled in by test_acceptance
ACCEPTANCE: dict = {}


def random_critical_set(q: int, rng: random.Random, maximal: bool = True) -> CriticalSet:
    """A valid critical set with random angles (denominator 10^6) and generic heights."""
    for _ in range(1000):
        budget = q - 1 if maximal else rng.randint(1, q - 1)
        leaves, used = [], 0
        while used < budget:
            m = rng.randint(1, budget - used)
            a = Fraction(rng.randint(0, 10**6 - 1), 10**6)
            js = sorted(rng.sample(range(q), m + 1))
            h = Fraction(rng.randint(1, 10**4), 10**4)
            leaves.append(Leaf(tuple((a + Fraction(j, q)) % 1 for j in js), h))
            used += m
        if len({l.height for l in leaves}) < len(leaves):
            continue
        try:
            C = CriticalSet(q, tuple(leaves))
        except ValueError:
            continue
        if validate_critical_set(C).valid and all(is_generic_height(l.height, q) for l in leaves):
            return C
    raise RuntimeError("could not draw a valid critical set")


@pytest.fixture(scope="session")
def table12():
    from shiftlocus.tautological import count_table

    return count_table(12)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
