import numpy as np
import pytest
from scipy.interpolate import PchipInterpolator


def tabulated_cdf(cdf, lo, hi, points=400):
    """Monotone interpolant of an analytic CDF on a log grid; cheap enough for 10^6-sample KS tests."""
    u = np.linspace(np.log(lo), np.log(hi), points)
    f = np.maximum.accumulate(np.clip([cdf(float(np.exp(v))) for v in u], 0.0, 1.0))
    spline = PchipInterpolator(u, f, extrapolate=False)

    def F(x):
        x = np.asarray(x, float)
        out = np.where(x <= lo, 0.0, 1.0)
        inside = (x > lo) & (x < hi)
        out[inside] = spline(np.log(x[inside]))
        return out

    return F


@pytest.fixture
def tabulate():
    return tabulated_cdf


_ACCEPTANCE = []


@pytest.fixture
def verdict(capsys):
    """verdict(number, title, checks) prints one PASS/FAIL line and fails the test on any false check.

    ``checks`` maps a description to (ok, detail).
    """

    def record(number, title, checks):
        bad = [f"{k}: {d}" for k, (ok, d) in checks.items() if not ok]
        line = f"criterion {number} [{title}]: {'FAIL' if bad else 'PASS'}"
        if bad:
            line += " -- " + "; ".join(bad)
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert not bad, "\n".join(bad)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
