import pytest

from laf import lab

DECADES = [10**4, 10**5, 10**6, 10**7]


@pytest.fixture(scope="session")
def stats7():
    """One streamed pass to 1e7 with checkpoints at every decade."""
    return lab.collect(DECADES)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {detail}")
