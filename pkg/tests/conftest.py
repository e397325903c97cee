import pytest

_VERDICTS = []


class Verdict:
    """Collects named checks for one acceptance criterion and reports them as a single line."""

    def __init__(self, number, title):
        self.number, self.title = number, title
        self.failed = []
        self.notes = []

    def check(self, ok, what):
        if not ok:
            self.failed.append(what)
        return ok

    def note(self, text):
        self.notes.append(text)

    def finish(self):
        status = "PASS" if not self.failed else "FAIL"
        detail = "; ".join(self.notes + [f"failed: {f}" for f in self.failed])
        line = f"[{status}] criterion {self.number}: {self.title}" + (f" ({detail})" if detail else "")
        _VERDICTS.append((self.number, line))
        print(line)
        assert not self.failed, line


@pytest.fixture
def verdict():
    return Verdict


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_VERDICTS):
        terminalreporter.write_line(line)
