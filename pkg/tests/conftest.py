import numpy as np
import pytest


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion."""
    try:
        from test_acceptance import RESULTS
    except Exception:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, passed, detail in sorted(RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {num:2d}: {title} -- {detail}")


def mc_se_mean(samples: np.ndarray) -> float:
    """Monte Carlo standard error of a sample mean."""
    s = np.asarray(samples, dtype=float)
    return float(np.std(s, ddof=1) / np.sqrt(s.size))


def mc_se_variance(samples: np.ndarray) -> float:
    """Standard error of the sample variance via the fourth central moment."""
    s = np.asarray(samples, dtype=float)
    n = s.size
    m = s.mean()
    m2 = np.mean((s - m) ** 2)
    m4 = np.mean((s - m) ** 4)
    return float(np.sqrt(max(m4 - (n - 3) / (n - 1) * m2**2, 0.0) / n))


def se_proportion(p_hat: float, n: int) -> float:
    return float(np.sqrt(max(p_hat * (1.0 - p_hat), 1e-12) / n))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))
