"""
Discretised copulas and the grid Markov product
===============================================

A :class:`GridCopula` stores the mass of each of the ``n x n`` cells
``((i-1)/n, i/n] x ((j-1)/n, j/n]``. With uniform marginals every row and
column carries ``1/n``, so the matrix is doubly stochastic up to scale and the
Markov product is the scaled matrix product ``n * A @ B``.
"""
from __future__ import annotations

import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from .copulas import COEFF_TOL, ClosedCopula, M

# Rows per work unit in the product kernel. Fixed so that the output does not
# depend on how many workers process the blocks.
ROW_BLOCK = 64


class GridError(ValueError):
    """A mass matrix violates the grid copula invariants."""


class GridCopula:
    """Cell-mass representation of a copula on an ``n x n`` grid.

    Parameters
    ----------
    mass : array_like, shape (n, n)
        Cell masses; entry ``(i, j)`` is the probability of the cell with
        ``u`` in the ``i``-th and ``v`` in the ``j``-th column of the grid.
    atol : float
        Absolute tolerance for the row/column sums ``1/n`` and the total mass.

    The mass array is copied and made read-only.
    """

    __slots__ = ("mass",)

    def __init__(self, mass, *, atol: float = COEFF_TOL):
        a = np.array(mass, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise GridError(f"mass must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise GridError("mass has non-finite entries")
        if a.min() < 0:
            raise GridError(f"negative cell mass {a.min()!r}")
        n = a.shape[0]
        rows = np.abs(a.sum(axis=1) - 1.0 / n).max()
        cols = np.abs(a.sum(axis=0) - 1.0 / n).max()
        if rows > atol:
            raise GridError(f"row sums deviate from 1/n by {rows:.3g} > {atol:.3g}")
        if cols > atol:
            raise GridError(f"column sums deviate from 1/n by {cols:.3g} > {atol:.3g}")
        total = abs(a.sum() - 1.0)
        if total > max(atol, COEFF_TOL):
            raise GridError(f"total mass deviates from 1 by {total:.3g}")
        a.flags.writeable = False
        object.__setattr__(self, "mass", a)

    def __setattr__(self, name, value):
        raise AttributeError("GridCopula is immutable")

    @property
    def n(self) -> int:
        return self.mass.shape[0]

    def cdf_lattice(self) -> np.ndarray:
        """CDF values on the ``(n+1) x (n+1)`` lattice ``(i/n, j/n)``."""
        c = np.zeros((self.n + 1, self.n + 1))
        c[1:, 1:] = self.mass.cumsum(axis=0).cumsum(axis=1)
        return c

    def __repr__(self):
        return f"GridCopula(n={self.n})"

    def __eq__(self, other):
        if not isinstance(other, GridCopula):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.mass, other.mass)

    __hash__ = None


def cell_masses(c: ClosedCopula, n: int) -> np.ndarray:
    """Raw inclusion-exclusion masses of ``c`` over the grid cells.

    Computed as ``(C11 + C00) - (C10 + C01)`` so that the transpose of a copula
    discretises to the bitwise transpose of its grid.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    t = np.arange(n + 1) / n
    C = np.asarray(c.cdf(t[:, None], t[None, :]), dtype=float)
    return (C[1:, 1:] + C[:-1, :-1]) - (C[1:, :-1] + C[:-1, 1:])


def discretize(c: ClosedCopula, n: int) -> GridCopula:
    m = cell_masses(c, n)
    if m.min() < -1e-12:
        raise GridError(f"copula {c!r} is not 2-increasing: cell mass {m.min()!r}")
    return GridCopula(np.maximum(m, 0.0))


def _check_same(a: GridCopula, b: GridCopula):
    if a.n != b.n:
        raise GridError(f"grid sizes differ: {a.n} vs {b.n}")


def markov_product(a: GridCopula, b: GridCopula, workers: int = 1) -> GridCopula:
    """Grid Markov product ``n * A @ B``.

    Output rows are computed in fixed blocks of ``ROW_BLOCK`` rows; with
    ``workers > 1`` the blocks run on a thread pool. The result is the same
    bit for bit whatever the worker count.
    """
    _check_same(a, b)
    n = a.n
    A, B = a.mass, b.mass
    out = np.empty((n, n))
    starts = range(0, n, ROW_BLOCK)

    def block(i0):
        out[i0:i0 + ROW_BLOCK] = (A[i0:i0 + ROW_BLOCK] @ B) * n

    if workers > 1 and n > ROW_BLOCK:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(block, starts))
    else:
        for i0 in starts:
            block(i0)
    # products of valid grids can drift past the sum tolerance only through
    # accumulated round-off; clip the stray negative zeros
    return GridCopula(np.maximum(out, 0.0))


def identity(n: int) -> GridCopula:
    return discretize(M, n)


def power(a: GridCopula, k: int, workers: int = 1) -> GridCopula:
    """``k``-fold Markov product by binary exponentiation; ``k = 0`` gives M."""
    if k < 0:
        raise ValueError("k must be >= 0")
    result = identity(a.n)
    base = a
    first = True
    while k:
        if k & 1:
            result = base if first else markov_product(result, base, workers)
            first = False
        k >>= 1
        if k:
            base = markov_product(base, base, workers)
    return result


def mixture(weights: Sequence[float], grids: Sequence[GridCopula]) -> GridCopula:
    w = np.asarray(weights, dtype=float)
    if len(w) != len(grids) or len(w) == 0:
        raise ValueError("need one weight per grid")
    if np.any(w < 0) or abs(w.sum() - 1.0) > COEFF_TOL:
        raise ValueError(f"weights must be nonnegative and sum to 1, got sum {w.sum()!r}")
    n = grids[0].n
    for g in grids:
        if g.n != n:
            raise GridError("all grids in a mixture must share n")
    mass = sum(wi * g.mass for wi, g in zip(w, grids))
    return GridCopula(mass)


def transpose(a: GridCopula) -> GridCopula:
    return GridCopula(a.mass.T)


def cdf_at(a: GridCopula, u, v):
    """Bilinear interpolation of the lattice CDF at ``(u, v)``."""
    C = a.cdf_lattice()
    n = a.n
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    x, y = np.clip(u, 0, 1) * n, np.clip(v, 0, 1) * n
    i = np.minimum(np.floor(x).astype(int), n - 1)
    j = np.minimum(np.floor(y).astype(int), n - 1)
    fx, fy = x - i, y - j
    val = (
        C[i, j] * (1 - fx) * (1 - fy)
        + C[i + 1, j] * fx * (1 - fy)
        + C[i, j + 1] * (1 - fx) * fy
        + C[i + 1, j + 1] * fx * fy
    )
    return float(val) if val.ndim == 0 else val


def sup_distance(a: GridCopula, b: GridCopula) -> float:
    """Max CDF difference over the lattice; exact for piecewise-bilinear CDFs."""
    _check_same(a, b)
    return float(np.abs(a.cdf_lattice() - b.cdf_lattice()).max())


def idempotency_defect(a: GridCopula) -> float:
    return sup_distance(markov_product(a, a), a)


def inverse_defect(a: GridCopula) -> tuple[float, float]:
    """``(left, right)`` distances of ``A^T * A`` and ``A * A^T`` from M.

    A small ``right`` value means ``A`` has ``A^T`` as a right inverse.
    """
    at = transpose(a)
    eye = identity(a.n)
    left = sup_distance(markov_product(at, a), eye)
    right = sup_distance(markov_product(a, at), eye)
    return left, right


def sinkhorn(mass: np.ndarray, iters: int = 200, tol: float = 1e-15) -> np.ndarray:
    """Scale rows and columns of a positive matrix to sums ``1/n``."""
    a = np.array(mass, dtype=float)
    n = a.shape[0]
    for _ in range(iters):
        a *= (1.0 / n) / a.sum(axis=1, keepdims=True)
        cs = a.sum(axis=0, keepdims=True)
        a *= (1.0 / n) / cs
        if np.abs(a.sum(axis=1) - 1.0 / n).max() < tol:
            break
    return a


# ---------------------------------------------------------------------------
# grid file format


def format_grid(a: GridCopula) -> str:
    lines = [f"# gridcopula n={a.n}"]
    lines += [",".join(f"{x:.17g}" for x in row) for row in a.mass]
    return "\n".join(lines) + "\n"


def parse_grid(text: str) -> GridCopula:
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if not lines or not lines[0].startswith("# gridcopula n="):
        raise GridError("missing '# gridcopula n=<N>' header")
    try:
        n = int(lines[0].split("n=", 1)[1])
    except ValueError:
        raise GridError(f"bad header {lines[0]!r}") from None
    rows = lines[1:]
    if len(rows) != n:
        raise GridError(f"header says n={n} but found {len(rows)} rows")
    try:
        mass = [[float(x) for x in row.split(",")] for row in rows]
    except ValueError as e:
        raise GridError(f"unparsable mass entry: {e}") from None
    if any(len(r) != n for r in mass):
        raise GridError(f"every row must have {n} entries")
    return GridCopula(mass)


def read_grid(path) -> GridCopula:
    with open(path) as fh:
        return parse_grid(fh.read())


def atomic_write(path, text: str):
    """Write via a temp file in the target directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_grid(a: GridCopula, path):
    atomic_write(path, format_grid(a))
