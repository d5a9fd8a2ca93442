"""
Verifiers for Markov copula structure
=====================================

Empirical copulas from pair samples, the Archimedean Markov-violation gap,
spreadability of idempotent chains and conditional support checks.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import sparse

from .copulas import BinaryScaling, ClosedCopula, Generator, OrdinalSum, dyadic_max
from .grid import GridCopula, sup_distance
from .simulate import PathSample

DEFAULT_LATTICE = (0.5, 1.0, 2.0)
DYADIC_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PairSample:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.size == 0 or x.shape != y.shape:
            raise ValueError("pair sample must be non-empty with matching coordinates")
        if np.any((x < 0) | (x > 1) | (y < 0) | (y > 1)):
            raise ValueError("pair components must lie in [0, 1]")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_array(cls, pairs) -> "PairSample":
        a = np.asarray(pairs, dtype=float)
        return cls(a[:, 0], a[:, 1])

    def __len__(self):
        return self.x.size


def pairs_from_paths(paths: Sequence[PathSample], lag: int, start: int = 0) -> PairSample:
    """Pair each path's ``start``-th value with its ``start + lag``-th value."""
    x = np.array([p.values[start] for p in paths])
    y = np.array([p.values[start + lag] for p in paths])
    return PairSample(x, y)


def _rank_cell_weights(z: np.ndarray, n: int) -> sparse.csr_matrix:
    """Row ``k`` spreads observation ``k`` uniformly over the rank interval of
    its tie group, ``[(first - 1)/N, last/N]``, and records the share falling
    in each of the ``n`` cells.

    Positions are kept as integers in units of ``1/(n N)`` so the overlaps
    are exact.
    """
    N = z.size
    _, inv, sizes = np.unique(z, return_inverse=True, return_counts=True)
    m = sizes[inv].astype(np.int64)  # tie group size per observation
    first_rank = np.concatenate([[0], np.cumsum(sizes)[:-1]])[inv].astype(np.int64)
    lo, hi = first_rank * n, (first_rank + m) * n
    c0 = lo // N
    c1 = np.maximum((hi + N - 1) // N - 1, c0)
    span = c1 - c0 + 1
    rows = np.repeat(np.arange(N), span)
    cells = np.repeat(c0, span) + (np.arange(span.sum()) - np.repeat(np.cumsum(span) - span, span))
    overlap = np.minimum(hi[rows], (cells + 1) * N) - np.maximum(lo[rows], cells * N)
    w = np.maximum(overlap, 0) / (n * m[rows])
    return sparse.csr_matrix((w, (rows, cells)), shape=(N, n))


def empirical_copula(s: PairSample, n: int) -> GridCopula:
    """Rank-transform both coordinates and bin the pseudo-observations.

    Each observation occupies the rank interval of width ``1/N`` around its
    rank (the whole interval of its tie group when tied, i.e. centred on the
    average rank) and contributes to cells in proportion to overlap. Margins
    are then exactly ``1/n`` up to round-off.
    """
    if not isinstance(s, PairSample):
        s = PairSample.from_array(s)
    N = len(s)
    if N < n * n:
        raise ValueError(f"sample size {N} below n^2 = {n * n}")
    if np.all(s.x == s.x[0]) or np.all(s.y == s.y[0]):
        raise ValueError("degenerate sample: a coordinate is constant")
    wx, wy = _rank_cell_weights(s.x, n), _rank_cell_weights(s.y, n)
    counts = (wx.T @ wy).toarray()
    return GridCopula(counts / N)


# ---------------------------------------------------------------------------
# Archimedean gap


@dataclass
class GapReport:
    max_gap: float
    argmax: tuple[float, float, float]
    lattice: list[list[float]]

    def to_dict(self) -> dict[str, Any]:
        return {"max_gap": self.max_gap, "argmax": list(self.argmax), "lattice": self.lattice}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def archimedean_gap(g: Generator, lattice: Sequence[float] | Sequence[Sequence[float]] = DEFAULT_LATTICE) -> GapReport:
    """Largest Markov-property violation of an Archimedean generator.

    For a 3-dimensional Archimedean copula with survival-type margins,
    P(X3 <= -x3 | X2 <= -x2, X1 <= -x1) = psi(x1+x2+x3) / psi(x1+x2) while
    P(X3 <= -x3 | X2 <= -x2) = psi(x2+x3) / psi(x2). The report gives the
    maximum of the cross-multiplied difference
    ``|psi(x1+x2+x3) psi(x2) - psi(x2+x3) psi(x1+x2)|`` over the lattice.

    ``lattice`` is either one list of values used on all three axes or three
    separate axis lists. Ties go to the lexicographically smallest point.
    """
    axes = [list(map(float, lattice))] * 3 if np.ndim(lattice[0]) == 0 else [list(map(float, a)) for a in lattice]
    if len(axes) != 3:
        raise ValueError("lattice needs one axis or three axes")
    if any(v <= 0 for a in axes for v in a):
        raise ValueError("lattice points must be strictly positive")
    pts = np.array(sorted(itertools.product(*axes)))
    x1, x2, x3 = pts.T
    with np.errstate(all="ignore"):
        vals = [np.asarray(g.psi(z), dtype=float) for z in (x1 + x2 + x3, x2, x2 + x3, x1 + x2)]
    if not all(np.all(np.isfinite(v)) for v in vals):
        raise ValueError(f"generator {g.name} is not finite on the lattice")
    a, b, c, d = vals
    gap = np.abs(a * b - c * d)
    k = int(np.argmax(gap))  # first maximum = lexicographic smallest
    return GapReport(float(gap[k]), tuple(float(v) for v in pts[k]), axes)


def spreadability_defect(lag_pairs_1: PairSample, lag_pairs_2: PairSample, n: int) -> float:
    return sup_distance(empirical_copula(lag_pairs_1, n), empirical_copula(lag_pairs_2, n))


# ---------------------------------------------------------------------------
# conditional support of idempotent chains


@dataclass(frozen=True)
class IntervalSupport:
    a: float
    b: float

    def contains(self, v):
        return (v >= self.a) & (v <= self.b)


@dataclass(frozen=True)
class PointSupport:
    x: float

    def contains(self, v):
        return v == self.x


@dataclass(frozen=True)
class DyadicOrbit:
    """``{2**-k * m : k >= 0}`` with ``m`` in ``[1/2, 1)``."""

    m: float
    tol: float = DYADIC_TOL

    def contains(self, v):
        v = np.asarray(v, dtype=float)
        pos = v > 0
        k = np.round(np.log2(self.m / np.where(pos, v, 1.0)))
        near = np.abs(v - np.ldexp(self.m, -k.astype(int))) <= self.tol
        return pos & (k >= 0) & near


def support_of(c: ClosedCopula, x0: float):
    """Support of every later state of an idempotent chain started at ``x0``."""
    if isinstance(c, OrdinalSum):
        i = int(c.block_index(x0))
        if i < 0:
            return PointSupport(float(x0))
        return IntervalSupport(*c.intervals[i])
    if isinstance(c, BinaryScaling):
        return DyadicOrbit(float(dyadic_max(x0)))
    raise ValueError(f"no conditional support descriptor for variant {getattr(c, 'variant', c)!r}")


@dataclass
class SupportReport:
    paths: int
    values_checked: int
    violations: int
    examples: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def conditional_support_check(
    paths: Sequence[PathSample], support: ClosedCopula | Callable[[float], Any]
) -> SupportReport:
    """Check that every value of a path lies in the support determined by its
    initial value. ``support`` is an OrdinalSum/BinaryScaling copula or a
    callable mapping ``x0`` to an object with a ``contains`` method."""
    lookup = (lambda x0: support_of(support, x0)) if isinstance(support, ClosedCopula) else support
    violations, checked = 0, 0
    examples = []
    for p in paths:
        desc = lookup(p.values[0])
        ok = np.asarray(desc.contains(p.values[1:]), dtype=bool)
        checked += ok.size
        bad = np.flatnonzero(~ok)
        violations += bad.size
        for j in bad[: max(0, 5 - len(examples))]:
            examples.append((p.path_id, float(p.times[j + 1]), float(p.values[j + 1])))
    return SupportReport(len(paths), checked, violations, examples)
