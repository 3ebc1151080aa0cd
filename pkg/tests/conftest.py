import io
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bipbackbone import load_bipartite  # noqa: E402

G1_TEXT = "u1\tv1\nu2\tv1\nu2\tv2\nu3\tv2\n"

# (criterion id, description, outcome) collected by the acceptance module
ACCEPTANCE_RESULTS: list[tuple[str, str, str]] = []


@pytest.fixture
def g1():
    graph, _ = load_bipartite(io.BytesIO(G1_TEXT.encode()))
    return graph


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, desc, outcome in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{outcome}] {cid}: {desc}")
