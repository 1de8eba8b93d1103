import numpy as np
import pytest

ACCEPTANCE_LINES = []


def naive_dft(block, weights=None):
    """O(N^2) direct evaluation of sum_n x[n] w[n] exp(-j 2 pi k n / N)."""
    x = np.asarray(block, dtype=complex)
    n = x.size
    w = np.ones(n) if weights is None else np.asarray(weights)
    out = np.zeros(n, dtype=complex)
    for k in range(n):
        for m in range(n):
            out[k] += x[m] * w[m] * np.exp(-2j * np.pi * k * m / n)
    return out


def tone_block(freq_bins, n, amplitude=1.0):
    """Tone at ``freq_bins`` (in bin units) over one N-sample block, evaluated per sample."""
    return np.array([amplitude * np.exp(2j * np.pi * freq_bins * m / n) for m in range(n)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
