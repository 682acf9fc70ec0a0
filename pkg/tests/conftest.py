import numpy as np
from scipy import integrate


def quad_positive(f, breaks=()):
    """Integrate ``f`` over (0, inf), splitting at ``breaks`` for accuracy."""
    edges = [0.0] + sorted(float(b) for b in breaks if b > 0) + [np.inf]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=500)
        total += val
    return total


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long Monte-Carlo tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte-Carlo replication (enable with --runslow)")


def pytest_collection_modifyitems(config, items):
    import pytest

    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="long Monte-Carlo replication; run with --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


# criterion number -> (status, title, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2} {status}: {title} [{detail}]")
