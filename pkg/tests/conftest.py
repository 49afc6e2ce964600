from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def mlg_corpus(tmp_path):
    """A writable copy of the bundled Middle-Low-German fixture corpus."""
    import shutil

    target = tmp_path / "mlg"
    shutil.copytree(FIXTURES / "mlg", target)
    return target


@pytest.fixture
def mlg_corpus_readonly():
    return FIXTURES / "mlg"


# one PASS/FAIL line per acceptance criterion, printed after the run
_ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def record_acceptance(name: str, passed: bool) -> None:
    _ACCEPTANCE_RESULTS.append((name, passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in _ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}: {name}")
