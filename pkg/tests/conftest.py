from pathlib import Path

import pytest

from causalkg.llm import Gateway, ResponseCache, ScriptedBackend

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"
GOLDEN = HERE / "golden"


@pytest.fixture
def asthma_script() -> Path:
    return FIXTURES / "asthma_script.yaml"


@pytest.fixture
def asthma_gateway(asthma_script):
    return Gateway(ScriptedBackend.from_file(asthma_script), cache=ResponseCache())


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
