import contextlib
import os

import pytest
from hypothesis import settings

from friids.fuzzy import baseline_rulebase

settings.register_profile("ci", max_examples=200, deadline=None)
settings.register_profile("dev", max_examples=50, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def baseline():
    return baseline_rulebase()


class AcceptanceLog:
    @contextlib.contextmanager
    def criterion(self, number, title):
        try:
            yield
        except pytest.skip.Exception as exc:
            _ACCEPTANCE.append((number, title, f"SKIP ({exc.msg})"))
            raise
        except BaseException:
            _ACCEPTANCE.append((number, title, "FAIL"))
            raise
        _ACCEPTANCE.append((number, title, "PASS"))

    def note(self, number, title, text):
        _ACCEPTANCE.append((number, title, text))


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status in sorted(_ACCEPTANCE, key=lambda r: str(r[0])):
        terminalreporter.write_line(f"[{number}] {title}: {status}")
