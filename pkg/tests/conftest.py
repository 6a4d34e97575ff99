from contextlib import contextmanager

import pytest

RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[RESULTS] = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    results = request.config.stash[RESULTS]

    @contextmanager
    def run(number: int, title: str):
        notes: list[str] = []
        try:
            yield notes.append
        except BaseException as exc:
            notes.append(f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
            results[number] = ("FAIL", title, notes)
            print(f"criterion {number} FAIL {title}: {'; '.join(notes)}")
            raise
        results[number] = ("PASS", title, notes)
        print(f"criterion {number} PASS {title}: {'; '.join(notes)}")

    return run


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        status, title, notes = results[number]
        terminalreporter.write_line(f"[{status}] {number}. {title}: {'; '.join(notes)}")
