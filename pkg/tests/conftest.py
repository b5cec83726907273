from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def blobs(rng, n_min, n_maj, d=2, sep=2.0):
    """Two Gaussian classes; labels 'min' / 'maj'."""
    X = np.vstack([rng.normal(sep, 1.0, size=(n_min, d)), rng.normal(0.0, 1.0, size=(n_maj, d))])
    y = np.array(["min"] * n_min + ["maj"] * n_maj)
    return X, y


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py::" in getattr(rep, "nodeid", "") and rep.when == "call":
                rows.append((rep.nodeid.split("::")[-1], outcome, rep.duration))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, dur in sorted(rows):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name:<55} {dur:7.2f}s")
