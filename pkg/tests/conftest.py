import numpy as np
import pytest

from markovcopula.grid import GridCopula, sinkhorn

SEED = 20090412

ACCEPTANCE_LINES: list[str] = []


def random_grid(rng, n):
    """Generic valid grid: Sinkhorn-balanced random positive matrix."""
    return GridCopula(sinkhorn(rng.random((n, n)) + 1e-3))


def dyadic_grid(rng, n, k=6, bits=8):
    """Birkhoff mixture of permutation matrices with dyadic weights.

    All masses are multiples of 2**-bits / n, so grid products are free of
    rounding when n is a power of two.
    """
    cuts = np.sort(rng.choice(np.arange(1, 2**bits), size=k - 1, replace=False))
    counts = np.diff(np.concatenate([[0], cuts, [2**bits]]))
    mass = np.zeros((n, n))
    for c in counts:
        mass[np.arange(n), rng.permutation(n)] += c / 2**bits / n
    return GridCopula(mass)


def ks_uniform(values):
    """Kolmogorov-Smirnov distance of a sample from U(0, 1)."""
    v = np.sort(np.asarray(values))
    n = v.size
    i = np.arange(1, n + 1)
    return max(np.max(i / n - v), np.max(v - (i - 1) / n))


def ecdf_sup_distance(sample, cdf, ys):
    """sup over ys of |empirical CDF - cdf| (both right-continuous)."""
    s = np.sort(sample)
    emp = np.searchsorted(s, ys, side="right") / s.size
    return float(np.max(np.abs(emp - cdf(ys))))


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
