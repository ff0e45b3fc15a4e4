import pytest

from greenhouse_bench import _kernels

_ACCEPTANCE: list[tuple[str, str]] = []


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Compile the jit kernels once so no test times the compiler.
    _kernels.warm_up()


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _ACCEPTANCE.append((name, "PASS" if report.passed else "FAIL"))
    elif report.when == "setup" and report.skipped:
        _ACCEPTANCE.append((name, "SKIP"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in _ACCEPTANCE:
        terminalreporter.write_line(f"{verdict}  {name}")
