import numpy as np
import pytest

from relgraph.synthetic import toy_graph, two_cliques


@pytest.fixture
def toy():
    return toy_graph()


@pytest.fixture
def cliques():
    return two_cliques(5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def write_tsv(path, rows):
    path.write_text("".join("\t".join(r) + "\n" for r in rows), encoding="utf-8")
    return path


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
