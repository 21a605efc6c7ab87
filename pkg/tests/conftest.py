from __future__ import annotations

from fractions import Fraction

import pytest

from cantorcf.build import ConstructionParams, run
from cantorcf.verify import VerifyOptions, record_results, verify_all
from cantorcf.words import DigitPair

# criterion number -> (passed, detail), filled in by the acceptance tests
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def golden_params(which: str) -> ConstructionParams:
    if which == "A":
        return ConstructionParams(DigitPair(3, 0, 1, frozenset({0, 1})), "1", Fraction(1), "relaxed", 3)
    return ConstructionParams(DigitPair(3, 0, 2, frozenset({0, 2})), "1", Fraction(1), "strict", 2)


def _recorded(which: str):
    cert = run(golden_params(which))
    opts = VerifyOptions()
    return record_results(cert, verify_all(cert, opts), opts)


@pytest.fixture(scope="session")
def golden_a():
    return _recorded("A")


@pytest.fixture(scope="session")
def golden_b():
    return _recorded("B")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'} - {detail}")
