import numpy as np
import pytest

from darwinscope.fixtures import build_fixture

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[criterion] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ambiguity():
    return build_fixture("ambiguity4")


def ghz_vector(n, k=2):
    """Equal-weight k-branch GHZ vector on n qudits of dimension k."""
    v = np.zeros(k**n, dtype=complex)
    for i in range(k):
        v[sum(i * k**p for p in range(n))] = 1
    return v / np.sqrt(k)
