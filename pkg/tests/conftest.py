import pytest

from districtkit import synthetic
from districtkit.pipeline import run_build


@pytest.fixture(scope="session")
def toy_state(tmp_path_factory):
    """A built toy state: ``(directory, config path, BuildResult)``."""
    d = tmp_path_factory.mktemp("toy_state")
    cfg = synthetic.write_toy_state(d)
    return d, cfg, run_build(cfg)


@pytest.fixture(scope="session")
def toy_graph(toy_state):
    return toy_state[2].graph


ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {text}")
