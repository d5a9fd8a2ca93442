"""
Continuous-time copula families
===============================

* :class:`HomFrechetFamily` -- the time-homogeneous restart/switch semigroup
  ``C_t = sigma rho W + (1 - rho) Pi + (1 - sigma) rho M`` with
  ``rho(t) = exp(-lam t)`` and ``sigma(t) = (1 - exp(-2 mu t)) / 2``.
* :class:`InhomFrechetFamily` -- the same construction driven by
  inhomogeneous Poisson processes plus deterministic event times.
* :class:`PoissonJumpFamily` -- ``C_t = E[C^{*N(t)}]`` for a Poisson process
  ``N`` of rate ``a``, computed on a grid.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .copulas import FrechetCoeffs, frechet_product
from .grid import GridCopula, identity, markov_product, read_grid

IDENTITY_COEFFS = FrechetCoeffs(0.0, 1.0)


@dataclass(frozen=True)
class HomFrechetFamily:
    """Restart intensity ``lam`` and switch intensity ``mu`` (per unit time).

    ``instant_restart`` selects the degenerate law ``rho(t) = 1(t = 0)``:
    the process is independent across any two distinct times.
    ``instant_switch`` selects ``tau(t) = 1(t = 0)``, i.e. ``sigma = 1/2``
    for every ``t > 0``.
    """

    lam: float = 0.0
    mu: float = 0.0
    instant_restart: bool = False
    instant_switch: bool = False

    def __post_init__(self):
        for name in ("lam", "mu"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
            object.__setattr__(self, name, v)

    def rho(self, t: float) -> float:
        if t == 0:
            return 1.0
        return 0.0 if self.instant_restart else math.exp(-self.lam * t)

    def sigma(self, t: float) -> float:
        """Probability of an odd number of switches in ``(0, t]``."""
        if t == 0:
            return 0.0
        return 0.5 if self.instant_switch else -0.5 * math.expm1(-2.0 * self.mu * t)

    def tau(self, t: float) -> float:
        return 1.0 - 2.0 * self.sigma(t)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"type": "hom-frechet", "lambda": self.lam, "mu": self.mu}
        if self.instant_restart:
            d["instant_restart"] = True
        if self.instant_switch:
            d["instant_switch"] = True
        return d


def hom_coeffs(fam: HomFrechetFamily, t: float) -> FrechetCoeffs:
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    rho, sigma = fam.rho(t), fam.sigma(t)
    return FrechetCoeffs(sigma * rho, (1.0 - sigma) * rho)


def coeff_defect(c1: FrechetCoeffs, c2: FrechetCoeffs) -> float:
    return max(abs(c1.alpha - c2.alpha), abs(c1.beta - c2.beta))


def semigroup_check(fam: HomFrechetFamily, s: float, t: float) -> float:
    """Componentwise defect of ``C_s * C_t = C_{s+t}``."""
    lhs = frechet_product(hom_coeffs(fam, s), hom_coeffs(fam, t))
    return coeff_defect(lhs, hom_coeffs(fam, s + t))


# ---------------------------------------------------------------------------
# cumulative intensities


@dataclass(frozen=True)
class PiecewiseLinearIntensity:
    """Cumulative intensity through the knots ``(times[i], cumulative[i])``.

    Starts at ``(0, 0)``; past the last knot it continues with the last slope.
    """

    times: tuple[float, ...] = (0.0,)
    cumulative: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        t = tuple(float(x) for x in self.times)
        c = tuple(float(x) for x in self.cumulative)
        if len(t) != len(c) or not t:
            raise ValueError("times and cumulative must be non-empty and of equal length")
        if t[0] != 0.0 or c[0] != 0.0:
            raise ValueError("cumulative intensity must start at (0, 0)")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("knot times must be strictly increasing")
        if any(b < a for a, b in zip(c, c[1:])):
            raise ValueError("cumulative intensity must be non-decreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "cumulative", c)

    @classmethod
    def constant(cls, rate: float) -> "PiecewiseLinearIntensity":
        return cls((0.0, 1.0), (0.0, float(rate)))

    def _slopes(self) -> np.ndarray:
        t, c = np.array(self.times), np.array(self.cumulative)
        if len(t) == 1:
            return np.zeros(1)
        s = np.diff(c) / np.diff(t)
        return np.append(s, s[-1])

    def __call__(self, t: float) -> float:
        ts, cs = self.times, self.cumulative
        if t <= ts[-1]:
            return float(np.interp(t, ts, cs))
        return cs[-1] + self._slopes()[-1] * (t - ts[-1])

    def rate(self, t):
        k = np.searchsorted(self.times, t, side="right") - 1
        return self._slopes()[np.clip(k, 0, len(self.times) - 1)]

    def bound(self, s: float, t: float) -> float:
        k0 = int(np.searchsorted(self.times, s, side="right")) - 1
        k1 = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self._slopes()[max(k0, 0):k1 + 1].max())

    def to_dict(self):
        return {"times": list(self.times), "cumulative": list(self.cumulative)}


@dataclass(frozen=True)
class CallableIntensity:
    """Cumulative intensity given as callables.

    ``cumulative(t)`` must be the exact integral of ``rate`` from 0, and
    ``rate_bound(s, t)`` an upper bound of ``rate`` on ``[s, t]`` (used for
    thinning).
    """

    cumulative: Callable[[float], float]
    rate: Callable[[np.ndarray], np.ndarray]
    rate_bound: Callable[[float, float], float]

    def __call__(self, t: float) -> float:
        return float(self.cumulative(t))

    def bound(self, s: float, t: float) -> float:
        return float(self.rate_bound(s, t))


ZERO_INTENSITY = PiecewiseLinearIntensity()


def _count_in(times: Sequence[float], s: float, t: float) -> int:
    # half-open (s, t]
    return sum(1 for x in times if s < x <= t)


@dataclass(frozen=True)
class InhomFrechetFamily:
    restart: PiecewiseLinearIntensity | CallableIntensity = ZERO_INTENSITY
    switch: PiecewiseLinearIntensity | CallableIntensity = ZERO_INTENSITY
    restart_times: tuple[float, ...] = ()
    switch_times: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "restart_times", tuple(sorted(float(x) for x in self.restart_times)))
        object.__setattr__(self, "switch_times", tuple(sorted(float(x) for x in self.switch_times)))

    @classmethod
    def homogeneous(cls, lam: float, mu: float) -> "InhomFrechetFamily":
        return cls(PiecewiseLinearIntensity.constant(lam), PiecewiseLinearIntensity.constant(mu))

    def rho(self, s: float, t: float) -> float:
        if _count_in(self.restart_times, s, t):
            return 0.0
        return math.exp(-(self.restart(t) - self.restart(s)))

    def sigma(self, s: float, t: float) -> float:
        p = -0.5 * math.expm1(-2.0 * (self.switch(t) - self.switch(s)))
        return 1.0 - p if _count_in(self.switch_times, s, t) % 2 else p

    def to_dict(self) -> dict[str, Any]:
        if not (isinstance(self.restart, PiecewiseLinearIntensity) and isinstance(self.switch, PiecewiseLinearIntensity)):
            raise TypeError("only piecewise-linear intensities are serialisable")
        return {
            "type": "inhom-frechet",
            "restart": self.restart.to_dict(),
            "switch": self.switch.to_dict(),
            "restart_times": list(self.restart_times),
            "switch_times": list(self.switch_times),
        }


def inhom_coeffs(fam: InhomFrechetFamily, s: float, t: float) -> FrechetCoeffs:
    """Coefficients of the copula of ``(X_s, X_t)``.

    Deterministic events are counted on the half-open interval ``(s, t]``.
    """
    if s < 0 or s > t:
        raise ValueError(f"need 0 <= s <= t, got s={s}, t={t}")
    rho, sigma = fam.rho(s, t), fam.sigma(s, t)
    return FrechetCoeffs(sigma * rho, (1.0 - sigma) * rho)


def two_time_consistency(fam: InhomFrechetFamily, r: float, s: float, t: float) -> float:
    """Defect of ``C_rs * C_st = C_rt`` in Frechet coefficients."""
    if not (0 <= r <= s <= t):
        raise ValueError(f"need 0 <= r <= s <= t, got {(r, s, t)}")
    lhs = frechet_product(inhom_coeffs(fam, r, s), inhom_coeffs(fam, s, t))
    return coeff_defect(lhs, inhom_coeffs(fam, r, t))


# ---------------------------------------------------------------------------
# Poisson-jump family


@dataclass(frozen=True, eq=False)
class PoissonJumpFamily:
    a: float
    base: GridCopula
    base_path: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValueError(f"jump intensity must be finite and > 0, got {self.a}")


def poisson_truncation(mean: float, tail_tol: float) -> np.ndarray:
    """Poisson pmf ``p_0..p_K`` with the smallest ``K`` leaving tail mass <= tail_tol."""
    if not 0 < tail_tol < 1:
        raise ValueError("tail_tol must lie in (0, 1)")
    p = math.exp(-mean)
    if p == 0.0:
        raise OverflowError(f"Poisson mean {mean} too large for direct pmf accumulation")
    pmf = [p]
    acc = p
    k = 0
    while 1.0 - acc > tail_tol:
        k += 1
        p *= mean / k
        pmf.append(p)
        acc += p
        if p == 0.0 and k > mean:
            break
    return np.array(pmf)


def poisson_jump_copula(fam: PoissonJumpFamily, t: float, tail_tol: float = 1e-10, workers: int = 1) -> GridCopula:
    """``sum_k pmf(k) base^{*k}`` truncated at Poisson tail ``tail_tol`` and
    renormalised. Powers are accumulated in order ``k = 0, 1, ...``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    pmf = poisson_truncation(fam.a * t, tail_tol)
    pw = identity(fam.base.n)
    acc = pmf[0] * pw.mass
    for k in range(1, len(pmf)):
        pw = markov_product(pw, fam.base, workers)
        acc = acc + pmf[k] * pw.mass
    return GridCopula(acc / pmf.sum())


# ---------------------------------------------------------------------------
# family JSON


def _intensity_from(d) -> PiecewiseLinearIntensity:
    if d is None:
        return ZERO_INTENSITY
    if isinstance(d, (int, float)):
        return PiecewiseLinearIntensity.constant(d)
    return PiecewiseLinearIntensity(tuple(d["times"]), tuple(d["cumulative"]))


def family_from_dict(d: dict[str, Any], base_dir: str | None = None):
    kind = d.get("type")
    if kind == "hom-frechet":
        return HomFrechetFamily(
            float(d.get("lambda", 0.0)),
            float(d.get("mu", 0.0)),
            bool(d.get("instant_restart", False)),
            bool(d.get("instant_switch", False)),
        )
    if kind == "inhom-frechet":
        return InhomFrechetFamily(
            _intensity_from(d.get("restart")),
            _intensity_from(d.get("switch")),
            tuple(d.get("restart_times", ())),
            tuple(d.get("switch_times", ())),
        )
    if kind == "poisson-jump":
        path = d["base"]
        if base_dir and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return PoissonJumpFamily(float(d["a"]), read_grid(path), d["base"])
    raise ValueError(f"unknown family type {kind!r}")


def family_to_dict(fam) -> dict[str, Any]:
    if isinstance(fam, PoissonJumpFamily):
        if fam.base_path is None:
            raise ValueError("poisson-jump family needs a base grid path to serialise")
        return {"type": "poisson-jump", "a": fam.a, "base": fam.base_path}
    return fam.to_dict()


def load_family(path):
    with open(path) as fh:
        return family_from_dict(json.load(fh), os.path.dirname(os.path.abspath(path)))
