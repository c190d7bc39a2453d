import pytest

from named import parity_example, swap_example


@pytest.fixture
def swap():
    return swap_example()


@pytest.fixture
def parity():
    return parity_example()



def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
