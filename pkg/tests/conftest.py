import math

import numpy as np
import pytest

from poncelet.conics import ConfocalFamily


@pytest.fixture
def fam41():
    return ConfocalFamily(4.0, 1.0)


@pytest.fixture
def circle():
    return ConfocalFamily(1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_chords(rng, family, lambda_Gamma, count, inner=0.99):
    """Lines (phi, p) that cross the table ``lambda_Gamma`` transversally."""
    from poncelet.linespace import support

    phi = rng.uniform(0.0, 2 * math.pi, count)
    p = rng.uniform(-inner, inner, count) * support(family, lambda_Gamma, phi)
    return phi, p


# criterion number -> (ok, summary); filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(number, ok, summary):
        ACCEPTANCE[number] = (bool(ok), summary)
        print(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {summary}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, summary = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {summary}")
