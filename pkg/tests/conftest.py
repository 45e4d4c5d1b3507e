import numpy as np
import pytest

from gaussqkd.gaussian_core import NonPhysicalError
from gaussqkd.qkd_analysis import StdSymmetricState

_ACCEPTANCE_LINES = []


def random_states(rng, count, nppt=True, mixed=False):
    """Standard-form states with lam in [1, 5], cx in [0, lam), cp in [0, cx]."""
    out = []
    while len(out) < count:
        lam = rng.uniform(1.0, 5.0)
        cx = rng.uniform(0.0, lam)
        cp = rng.uniform(0.0, cx)
        try:
            s = StdSymmetricState(lam, cx, cp)
        except NonPhysicalError:
            continue
        if nppt and not s.nppt:
            continue
        if mixed and s.is_pure:
            continue
        out.append(s)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def _report(number, title, ok, detail=""):
        line = f"[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
