"""
Seeded simulators
=================

Every path draws from its own counter-based stream: path ``k`` under root
seed ``s`` uses a Philox generator keyed by ``s`` with ``k`` in a high
counter word. A path is therefore reproducible on its own, and results do
not depend on the number of paths simulated alongside it or on the worker
count.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtr

from .copulas import ClosedCopula
from .families import HomFrechetFamily, InhomFrechetFamily
from .grid import GridCopula, GridError, atomic_write, sinkhorn


@dataclass(frozen=True)
class SimConfig:
    seed: int
    n_paths: int
    initial: str | float = "uniform"

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.initial != "uniform" and not 0.0 <= float(self.initial) <= 1.0:
            raise ValueError("fixed initial value must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class PathSample:
    path_id: int
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-d and of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any((v < 0) | (v > 1)):
            raise ValueError("values must lie in [0, 1]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        if not isinstance(other, PathSample):
            return NotImplemented
        return (
            self.path_id == other.path_id
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.values, other.values)
        )


def path_rng(seed: int, path_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, int(path_id), 0]))


def _per_path(cfg: SimConfig, fn, workers: int = 1) -> list:
    ids = range(cfg.n_paths)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, ids))  # map preserves path order
    return [fn(k) for k in ids]


def _uniform_block(cfg: SimConfig, width: int, workers: int = 1) -> np.ndarray:
    rows = _per_path(cfg, lambda k: path_rng(cfg.seed, k).random(width), workers)
    return np.vstack(rows)


def _initial(cfg: SimConfig, draws: np.ndarray) -> np.ndarray:
    if cfg.initial == "uniform":
        return draws
    return np.full(draws.shape, float(cfg.initial))


def values_matrix(paths: Sequence[PathSample]) -> np.ndarray:
    return np.vstack([p.values for p in paths])


def simulate_chain(c: ClosedCopula, length: int, cfg: SimConfig, workers: int = 1) -> list[PathSample]:
    """Run ``X_k = f_c(X_{k-1}, V_k)`` for ``k = 1..length``.

    Each path is ``length + 1`` values at times ``0, 1, ..., length``. Draw 0
    of a path's stream seeds ``X_0`` (when uniform), draw ``k`` drives step ``k``.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    U = _uniform_block(cfg, length + 1, workers)
    X = np.empty_like(U)
    X[:, 0] = _initial(cfg, U[:, 0])
    for k in range(1, length + 1):
        X[:, k] = c.transition(X[:, k - 1], U[:, k])
    times = np.arange(length + 1, dtype=float)
    return [PathSample(i, times, X[i]) for i in range(cfg.n_paths)]


# ---------------------------------------------------------------------------
# restart/switch process


def _poisson_events(rng, intensity, horizon: float) -> np.ndarray:
    # thinning against the intensity bound on [0, horizon]
    if horizon <= 0:
        return np.empty(0)
    bound = intensity.bound(0.0, horizon)
    if bound <= 0:
        return np.empty(0)
    cand = np.sort(rng.random(rng.poisson(bound * horizon)) * horizon)
    if cand.size == 0:
        return cand
    keep = rng.random(cand.size) * bound <= np.asarray(intensity.rate(cand), dtype=float)
    return cand[keep]


def _hom_events(rng, rate: float, horizon: float) -> np.ndarray:
    if rate == 0 or horizon <= 0:
        return np.empty(0)
    return np.sort(rng.random(rng.poisson(rate * horizon)) * horizon)


def simulate_frechet_process(
    fam: HomFrechetFamily | InhomFrechetFamily,
    times: Sequence[float],
    cfg: SimConfig,
    workers: int = 1,
) -> list[PathSample]:
    """Simulate the restart/switch process at the given times.

    The process starts at ``X_0`` at time 0. Restart events replace the value
    by a fresh uniform; switch events map ``u -> 1 - u``. The value at ``t``
    is the uniform drawn at the last restart in ``[0, t]`` (``X_0`` if none),
    flipped once per switch after that restart.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a non-empty strictly increasing sequence of nonnegative reals")
    horizon = float(times[-1])

    def one(k):
        rng = path_rng(cfg.seed, k)
        u0 = rng.random()
        x0 = u0 if cfg.initial == "uniform" else float(cfg.initial)
        if isinstance(fam, HomFrechetFamily):
            restarts = _hom_events(rng, fam.lam, horizon)
            switches = _hom_events(rng, fam.mu, horizon)
            return _path_values(rng, x0, times, restarts, switches, fam.instant_switch, fam.instant_restart)
        restarts = _poisson_events(rng, fam.restart, horizon)
        switches = _poisson_events(rng, fam.switch, horizon)
        restarts = np.sort(np.concatenate([restarts, [x for x in fam.restart_times if 0 < x <= horizon]]))
        switches = np.sort(np.concatenate([switches, [x for x in fam.switch_times if 0 < x <= horizon]]))
        return _path_values(rng, x0, times, restarts, switches)

    rows = _per_path(cfg, one, workers)
    return [PathSample(i, times, rows[i]) for i in range(cfg.n_paths)]


def _path_values(rng, x0, times, restarts, switches, coin_switch=False, instant_restart=False):
    fresh = rng.random(restarts.size)
    out = np.empty(times.size)
    for j, t in enumerate(times):
        if instant_restart and t > 0:
            out[j] = rng.random()
            continue
        i = int(np.searchsorted(restarts, t, side="right"))
        r, base = (0.0, x0) if i == 0 else (restarts[i - 1], fresh[i - 1])
        if coin_switch:
            flip = t > r and rng.random() < 0.5
        else:
            n_sw = int(np.searchsorted(switches, t, side="right") - np.searchsorted(switches, r, side="right"))
            flip = n_sw % 2 == 1
        out[j] = 1.0 - base if flip else base
    return out


# ---------------------------------------------------------------------------
# reflected Brownian motion on [0, 1]


@dataclass(frozen=True)
class ReflectedBMParams:
    t: float
    series_tol: float = 1e-12

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("t must be > 0")
        if not self.series_tol > 0:
            raise ValueError("series_tol must be > 0")


def image_count(t: float, tol: float) -> int:
    """Smallest ``N`` such that the image terms with ``|n| > N`` sum below ``tol``.

    Each such term has exponent argument at least ``2|n| - 2``; there are four
    per ``|n|`` and consecutive ones shrink at least by ``exp(-(8N+4)/(2t))``.
    """
    pref = 4.0 / math.sqrt(2.0 * math.pi * t)
    N = 1
    while True:
        q = math.exp(-(8 * N + 4) / (2 * t))
        if q < 1 and pref * math.exp(-((2 * N) ** 2) / (2 * t)) / (1 - q) < tol:
            return N
        N += 1


def reflected_bm_density(x, y, p: ReflectedBMParams):
    """Transition density of Brownian motion reflected at 0 and 1 (method of images)."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    t = p.t
    N = image_count(t, p.series_tol)
    total = np.zeros(x.shape)
    d, a = y - x, y + x  # x <-> y maps d to -d exactly and leaves a unchanged

    def img(n):
        return np.exp(-((2 * n + d) ** 2) / (2 * t)), np.exp(-((2 * n - a) ** 2) / (2 * t))

    # outside in, so the dominant terms come last; the +n and -n images are
    # paired so that swapping x and y only swaps commutative operands
    for n in range(N, 0, -1):
        (a1, b1), (a2, b2) = img(n), img(-n)
        total = total + ((a1 + a2) + (b1 + b2))
    a0, b0 = img(0)
    total = total + (a0 + b0)
    out = total / math.sqrt(2.0 * math.pi * t)
    return float(out) if out.ndim == 0 else out


def _kk(z, s):
    # twice-integrated Gaussian kernel with std s, split into its linear part
    # and a decaying remainder to avoid cancellation
    w = -np.abs(z) / s
    return np.maximum(z, 0.0) + s * (w * ndtr(w) + np.exp(-0.5 * w * w) / math.sqrt(2.0 * math.pi))


def reflected_bm_cell_masses(p: ReflectedBMParams, n: int) -> np.ndarray:
    """Exact cell integrals of the (truncated) image series over the grid."""
    s = math.sqrt(p.t)
    h = 1.0 / n
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    N = image_count(p.t, p.series_tol) + 1
    mass = np.zeros((n, n))
    for k in sorted(range(-N, N + 1), key=lambda k: -abs(k)):
        d0 = (j - i) * h + 2 * k
        s0 = (i + j) * h - 2 * k
        mass += (_kk(d0 + h, s) - 2 * _kk(d0, s) + _kk(d0 - h, s))
        mass += (_kk(s0 + 2 * h, s) - 2 * _kk(s0 + h, s) + _kk(s0, s))
    return mass


def reflected_bm_grid(p: ReflectedBMParams, n: int) -> GridCopula:
    """Grid copula of ``(U_0, U_t)`` for reflected BM started uniform.

    Cell masses are normalised to exact ``1/n`` margins; the normalisation
    must move each row/column sum by at most ``series_tol`` (plus round-off).
    """
    if n < 8:
        raise ValueError("n must be >= 8")
    raw = np.maximum(reflected_bm_cell_masses(p, n), 0.0)
    drift = max(np.abs(raw.sum(axis=1) - 1.0 / n).max(), np.abs(raw.sum(axis=0) - 1.0 / n).max())
    if drift > p.series_tol + 1e-12:
        raise GridError(f"image series margins off by {drift:.3g} > series_tol")
    return GridCopula(sinkhorn(raw))


def reflect(z):
    """Fold the real line onto [0, 1]: triangle wave of period 2."""
    r = np.mod(z, 2.0)
    return np.minimum(r, 2.0 - r)


def simulate_reflected_bm(times: Sequence[float], cfg: SimConfig, workers: int = 1) -> list[PathSample]:
    """Exact simulation at ``times``: unreflected Gaussian path folded by :func:`reflect`.

    Draw 0 of each stream sets ``X_0``; the rest are Gaussian increments.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a non-empty strictly increasing sequence of nonnegative reals")

    def one(k):
        rng = path_rng(cfg.seed, k)
        return rng.random(), rng.standard_normal(times.size)

    rows = _per_path(cfg, one, workers)
    x0 = _initial(cfg, np.array([r[0] for r in rows]))
    Z = np.vstack([r[1] for r in rows])
    dt = np.diff(np.concatenate([[0.0], times]))
    free = x0[:, None] + np.cumsum(Z * np.sqrt(dt), axis=1)
    X = reflect(free)
    return [PathSample(i, times, X[i]) for i in range(cfg.n_paths)]


# ---------------------------------------------------------------------------
# path CSV


def format_paths(paths: Iterable[PathSample]) -> str:
    buf = io.StringIO()
    buf.write("path_id,time,value\n")
    for p in paths:
        for t, v in zip(p.times, p.values):
            buf.write(f"{p.path_id},{t:.17g},{v:.17g}\n")
    return buf.getvalue()


def write_paths(paths: Iterable[PathSample], path):
    atomic_write(path, format_paths(paths))


def parse_paths(text: str) -> list[PathSample]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["path_id", "time", "value"]:
        raise ValueError(f"expected header path_id,time,value, got {header}")
    rows: dict[int, tuple[list, list]] = {}
    for rec in reader:
        if not rec:
            continue
        pid, t, v = int(rec[0]), float(rec[1]), float(rec[2])
        ts, vs = rows.setdefault(pid, ([], []))
        ts.append(t)
        vs.append(v)
    return [PathSample(pid, np.array(ts), np.array(vs)) for pid, (ts, vs) in sorted(rows.items())]


def read_paths(path) -> list[PathSample]:
    with open(path) as fh:
        return parse_paths(fh.read())
