import pytest

# (criterion id, passed, detail) rows appended by test_acceptance.py
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  AC{cid}: {detail}")


@pytest.fixture
def record_criterion():
    def record(cid, passed, detail):
        ACCEPTANCE_RESULTS.append((cid, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'}  AC{cid}: {detail}")
        assert passed, detail

    return record
