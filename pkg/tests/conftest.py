import time

import pytest

from medledger.crypto import KeyBundle


@pytest.fixture(scope="session")
def key_pool():
    """Deterministic bundle pool shared across tests (key setup is pure)."""
    return [
        KeyBundle.generate(
            signing_seed=bytes([index]) * 32,
            agreement_private=bytes([index + 100]) * 32,
        )
        for index in range(1, 9)
    ]


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name, budget): acceptance criterion with time budget"
    )


_ACCEPTANCE_RESULTS: list[tuple[str, str, float]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    name = marker.kwargs.get("name") or marker.args[0]
    _ACCEPTANCE_RESULTS.append((name, report.outcome.upper(), report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcome, duration in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{outcome:<6}] {name} ({duration:.2f}s)")
