import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sfwm_fiber.dispersion import FiberSpec  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def fitted():
    """Fiber parameters quoted for the fitted bow-tie fiber."""
    return FiberSpec(r=1.6, na=0.27, delta=4.2e-4, length=0.12)


@pytest.fixture(scope="session")
def golden_dir():
    return GOLDEN


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    verdicts = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            name = rep.nodeid.split("::")[-1]
            if "test_acceptance.py" not in rep.nodeid or not name.startswith("test_criterion_"):
                continue
            crit = int(name.split("_")[2])
            ok = key == "passed" and verdicts.get(crit, True)
            verdicts[crit] = ok
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(verdicts):
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if verdicts[crit] else 'FAIL'}")
