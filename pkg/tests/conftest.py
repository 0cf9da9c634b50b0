import pytest

# Acceptance verdicts are collected here and echoed in the terminal summary,
# so they show up even when test output is captured.
VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    def record(number, title, ok, detail, elapsed, limit=None):
        timing = f"{elapsed:.1f}s" + (f" (limit {limit:g}s)" if limit else "")
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {detail}; {timing}"
        VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
