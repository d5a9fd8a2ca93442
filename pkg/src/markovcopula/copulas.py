"""
Closed-form bivariate copulas
=============================

Each copula carries its distribution function, the conditional law of the
second coordinate given the first (the Markov kernel) and a transition
function ``f(x, u)`` such that ``f(x, U)`` has that conditional law for ``U``
uniform on ``[0, 1]``.

All evaluation methods accept scalars or numpy arrays and broadcast.
Scalar inputs give Python floats back.

The Frechet coefficient algebra and Archimedean generators also live here.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, ClassVar

import numpy as np

# Row/column sum and coefficient tolerance shared across the package.
COEFF_TOL = 1e-12


def _out(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


def _f(a):
    return np.asarray(a, dtype=float)


class ClosedCopula:
    """Base class for the closed-form copulas.

    Subclasses set ``variant`` and implement ``cdf``, ``conditional_cdf`` and
    (optionally) ``transition``. The default ``transition`` inverts the
    conditional CDF numerically.
    """

    variant: ClassVar[str] = ""

    def cdf(self, u, v):
        raise NotImplementedError

    def conditional_cdf(self, x, y):
        """P(V <= y | U = x); right-continuous in ``y``."""
        raise NotImplementedError

    def transition(self, x, u):
        return invert_conditional_cdf(self, x, u)

    def params(self) -> dict[str, Any]:
        return {}

    def to_dict(self) -> dict[str, Any]:
        return {"variant": self.variant, "params": self.params()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def invert_conditional_cdf(c: ClosedCopula, x, u, tol: float = 1e-12):
    """Generic transition: smallest ``y`` with ``conditional_cdf(c, x, y) >= u``.

    Bisection on ``[0, 1]`` down to a bracket of width ``tol``; vectorised over
    ``x`` and ``u``.
    """
    x, u = np.broadcast_arrays(_f(x), _f(u))
    lo = np.zeros(x.shape)
    hi = np.ones(x.shape)
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        ok = _f(c.conditional_cdf(x, mid)) >= u
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return _out(hi)


@dataclass(frozen=True)
class Independence(ClosedCopula):
    variant: ClassVar[str] = "Pi"

    def cdf(self, u, v):
        return _out(_f(u) * _f(v))

    def conditional_cdf(self, x, y):
        x, y = np.broadcast_arrays(_f(x), _f(y))
        return _out(np.clip(y, 0.0, 1.0))

    def transition(self, x, u):
        x, u = np.broadcast_arrays(_f(x), _f(u))
        return _out(u.copy())


@dataclass(frozen=True)
class Comonotone(ClosedCopula):
    variant: ClassVar[str] = "M"

    def cdf(self, u, v):
        return _out(np.minimum(_f(u), _f(v)))

    def conditional_cdf(self, x, y):
        return _out((_f(y) >= _f(x)).astype(float))

    def transition(self, x, u):
        x, u = np.broadcast_arrays(_f(x), _f(u))
        return _out(x.copy())


@dataclass(frozen=True)
class Countermonotone(ClosedCopula):
    variant: ClassVar[str] = "W"

    def cdf(self, u, v):
        return _out(np.maximum(_f(u) + _f(v) - 1.0, 0.0))

    def conditional_cdf(self, x, y):
        return _out((_f(y) >= 1.0 - _f(x)).astype(float))

    def transition(self, x, u):
        x, u = np.broadcast_arrays(_f(x), _f(u))
        return _out(1.0 - x)


PI = Independence()
M = Comonotone()
W = Countermonotone()


@dataclass(frozen=True)
class FrechetCoeffs:
    """Weights of ``alpha*W + (1 - alpha - beta)*Pi + beta*M``.

    Round-off excursions up to ``COEFF_TOL`` outside the simplex are clipped
    back; anything larger raises ``ValueError``.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError(f"non-finite Frechet coefficients ({a}, {b})")
        if a < -COEFF_TOL or b < -COEFF_TOL or a + b > 1.0 + COEFF_TOL:
            raise ValueError(f"({a}, {b}) violates alpha, beta >= 0, alpha + beta <= 1")
        a, b = max(a, 0.0), max(b, 0.0)
        if a + b > 1.0:
            s = a + b
            a, b = a / s, b / s
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def pi_weight(self) -> float:
        return max(0.0, 1.0 - self.alpha - self.beta)

    def copula(self) -> "Frechet":
        return Frechet(self.alpha, self.beta)

    def as_tuple(self) -> tuple[float, float]:
        return (self.alpha, self.beta)


def frechet_product(c1: FrechetCoeffs, c2: FrechetCoeffs) -> FrechetCoeffs:
    """Markov product inside the Frechet family.

    W*W = M, M is the identity and Pi is absorbing, so by linearity the
    W-weight of the product collects the mixed W/M terms and the M-weight
    collects the W/W and M/M terms.
    """
    a1, b1 = c1.alpha, c1.beta
    a2, b2 = c2.alpha, c2.beta
    return FrechetCoeffs(b1 * a2 + a1 * b2, a1 * a2 + b1 * b2)


def frechet_coeffs_from_fg(f_s: float, g_s: float, f_t: float, g_t: float) -> FrechetCoeffs:
    """Two-time coefficients ``(alpha(s,t), beta(s,t))`` from the one-time
    profiles ``f = alpha(0, .)`` and ``g = beta(0, .)`` evaluated at ``s`` and ``t``.

    Raises
    ------
    ZeroDivisionError
        If ``g_s**2 == f_s**2``; the profiles carry no information about the
        coefficients in that case.
    ValueError
        If the result is not a valid Frechet coefficient pair. Nothing is
        checked on the inputs themselves: there is no usable criterion for
        which ``(f, g)`` pairs generate a consistent family.
    """
    den = g_s * g_s - f_s * f_s
    if den == 0.0:
        raise ZeroDivisionError(f"degenerate profiles: g(s)^2 == f(s)^2 == {g_s * g_s}")
    alpha = (f_t * g_s - f_s * g_t) / den
    beta = (g_t * g_s - f_s * f_t) / den
    return FrechetCoeffs(alpha, beta)


@dataclass(frozen=True)
class Frechet(ClosedCopula):
    alpha: float
    beta: float
    variant: ClassVar[str] = "Frechet"

    def __post_init__(self):
        c = FrechetCoeffs(self.alpha, self.beta)
        object.__setattr__(self, "alpha", c.alpha)
        object.__setattr__(self, "beta", c.beta)

    @property
    def coeffs(self) -> FrechetCoeffs:
        return FrechetCoeffs(self.alpha, self.beta)

    @property
    def pi_weight(self) -> float:
        return self.coeffs.pi_weight

    def cdf(self, u, v):
        return _out(
            self.alpha * _f(W.cdf(u, v))
            + self.pi_weight * _f(PI.cdf(u, v))
            + self.beta * _f(M.cdf(u, v))
        )

    def conditional_cdf(self, x, y):
        return _out(
            self.alpha * _f(W.conditional_cdf(x, y))
            + self.pi_weight * _f(PI.conditional_cdf(x, y))
            + self.beta * _f(M.conditional_cdf(x, y))
        )

    def transition(self, x, u):
        # one uniform picks the component; the Pi branch reuses its remainder
        x, u = np.broadcast_arrays(_f(x), _f(u))
        a, b, p = self.alpha, self.beta, self.pi_weight
        fresh = np.clip((u - a - b) / p, 0.0, 1.0) if p > 0 else x
        return _out(np.where(u < a, 1.0 - x, np.where(u < a + b, x, fresh)))

    def params(self):
        return {"alpha": self.alpha, "beta": self.beta}


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    return theta


@dataclass(frozen=True)
class LTheta(ClosedCopula):
    """Mass ``theta`` on the segment ``y = theta*x`` and ``1 - theta`` on
    ``y = 1 - (1 - theta)*x``. Right-invertible, with right inverse
    ``RTheta(theta)``."""

    theta: float
    variant: ClassVar[str] = "LTheta"

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_theta(self.theta))

    def cdf(self, u, v):
        u, v = _f(u), _f(v)
        th = self.theta
        return _out(np.minimum(th * u, v) + np.maximum(0.0, (1.0 - th) * u + v - 1.0))

    def conditional_cdf(self, x, y):
        x, y = _f(x), _f(y)
        th = self.theta
        return _out(th * (y >= th * x) + (1.0 - th) * (y >= 1.0 - (1.0 - th) * x))

    def transition(self, x, u):
        x, u = np.broadcast_arrays(_f(x), _f(u))
        th = self.theta
        return _out(np.where(u <= th, th * x, 1.0 - (1.0 - th) * x))

    def params(self):
        return {"theta": self.theta}


@dataclass(frozen=True)
class RTheta(ClosedCopula):
    """Transpose of ``LTheta``; its transition ignores the uniform."""

    theta: float
    variant: ClassVar[str] = "RTheta"

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_theta(self.theta))

    def cdf(self, u, v):
        return LTheta(self.theta).cdf(v, u)

    def _back(self, y):
        th = self.theta
        if th == 0.0:
            return 1.0 - y
        if th == 1.0:
            return y.copy()
        return np.where(y <= th, y / th, (1.0 - y) / (1.0 - th))

    def conditional_cdf(self, x, y):
        return _out((_f(y) >= self._back(_f(x))).astype(float))

    def transition(self, x, u):
        x, u = np.broadcast_arrays(_f(x), _f(u))
        return _out(self._back(x))

    def params(self):
        return {"theta": self.theta}


@dataclass(frozen=True)
class OrdinalSum(ClosedCopula):
    """Copies of Pi on the diagonal squares ``I_i x I_i``, comonotone mass on
    the complement ``I_0``.

    Block membership is half-open, ``[a_i, b_i)``, except that a block ending
    at 1 is closed; intervals may touch but not overlap.
    """

    intervals: tuple[tuple[float, float], ...]
    variant: ClassVar[str] = "OrdinalSum"

    def __post_init__(self):
        ivs = tuple(sorted((float(a), float(b)) for a, b in self.intervals))
        prev = 0.0
        for a, b in ivs:
            if not (0.0 <= a < b <= 1.0):
                raise ValueError(f"interval [{a}, {b}] must satisfy 0 <= a < b <= 1")
            if a < prev:
                raise ValueError(f"interval [{a}, {b}] overlaps its predecessor")
            prev = b
        object.__setattr__(self, "intervals", ivs)

    @property
    def complement_length(self) -> float:
        return 1.0 - sum(b - a for a, b in self.intervals)

    def _overlap(self, w):
        # Lebesgue measure of [0, w] inside each block
        return [np.clip(w - a, 0.0, b - a) for a, b in self.intervals]

    def block_index(self, x):
        """Index of the block containing ``x``, or -1 for the complement."""
        x = _f(x)
        idx = np.full(x.shape, -1, dtype=int)
        for i, (a, b) in enumerate(self.intervals):
            inside = (x >= a) & ((x < b) | ((b == 1.0) & (x <= 1.0)))
            idx = np.where(inside & (idx < 0), i, idx)
        return idx

    def cdf(self, u, v):
        u, v = np.broadcast_arrays(_f(u), _f(v))
        w = np.minimum(u, v)
        total = np.zeros(u.shape)
        blocks_w = np.zeros(u.shape)
        for (a, b), ou, ov, ow in zip(self.intervals, self._overlap(u), self._overlap(v), self._overlap(w)):
            total = total + ou * ov / (b - a)
            blocks_w = blocks_w + ow
        return _out(total + np.maximum(w - blocks_w, 0.0))

    def conditional_cdf(self, x, y):
        x, y = np.broadcast_arrays(_f(x), _f(y))
        idx = self.block_index(x)
        out = (y >= x).astype(float)
        for i, (a, b) in enumerate(self.intervals):
            out = np.where(idx == i, np.clip((y - a) / (b - a), 0.0, 1.0), out)
        return _out(out)

    def transition(self, x, u):
        x, u = np.broadcast_arrays(_f(x), _f(u))
        idx = self.block_index(x)
        out = x.copy()
        for i, (a, b) in enumerate(self.intervals):
            y = a + (b - a) * u
            if b < 1.0:
                # keep the image inside the half-open block
                y = np.minimum(y, np.nextafter(b, 0.0))
            out = np.where(idx == i, y, out)
        return _out(out)

    def params(self):
        return {"intervals": [list(iv) for iv in self.intervals]}


def dyadic_max(x):
    """``m(x)``: the element of ``{2**k * x}`` in ``[1/2, 1)``; 0 maps to 0."""
    mant, _ = np.frexp(_f(x))
    return _out(mant)


def _dyadic_levels(u):
    """Smallest ``K >= 0`` with ``u * 2**K >= 1`` (u > 0)."""
    _, e = np.frexp(u)
    return np.maximum(0, 1 - e)


@dataclass(frozen=True)
class BinaryScaling(ClosedCopula):
    """Idempotent copula of the chain that, given ``U_0 = x``, draws i.i.d.
    values ``2**-n * m(x)`` with probability ``2**-(n+1)``.
    """

    variant: ClassVar[str] = "BinaryScaling"

    def cdf(self, u, v):
        # (U0, U1) = (m 2^-k, m 2^-n) with k, n i.i.d. geometric(1/2) on {0,1,...}
        # and m uniform on [1/2, 1) independent of both; levels past K_u
        # have u 2^k >= 1 and are lumped into one term of weight 2^-K_u.
        u, v = np.broadcast_arrays(_f(u), _f(v))
        pos = (u > 0) & (v > 0)
        us, vs = np.where(pos, u, 1.0), np.where(pos, v, 1.0)
        ku, kv = _dyadic_levels(us), _dyadic_levels(vs)

        def terms(z, kz, k):
            w = np.where(k < kz, 2.0 ** -(k + 1), np.where(k == kz, 2.0 ** -kz, 0.0))
            g = np.where(k < kz, np.clip(2.0 * np.ldexp(z, k) - 1.0, 0.0, 1.0), 1.0)
            return w, g

        total = np.zeros(u.shape)
        for k in range(int(ku.max(initial=0)) + 1):
            wu, gu = terms(us, ku, k)
            for n in range(int(kv.max(initial=0)) + 1):
                wv, gv = terms(vs, kv, n)
                total = total + wu * wv * np.minimum(gu, gv)
        return _out(np.where(pos, total, 0.0))

    def conditional_cdf(self, x, y):
        x, y = np.broadcast_arrays(_f(x), _f(y))
        m = _f(dyadic_max(x))
        ok = (y > 0) & (m > 0)
        ratio = np.where(ok, m / np.where(ok, y, 1.0), 1.0)
        n0 = np.maximum(0, np.ceil(np.log2(ratio))).astype(int)
        # guard log2 round-off around exact dyadic points
        n0 = np.where(np.ldexp(m, -n0) > y, n0 + 1, n0)
        down = (n0 > 0) & (np.ldexp(m, -(n0 - 1)) <= y)
        n0 = np.where(down, n0 - 1, n0)
        out = np.where(ok, np.ldexp(1.0, -n0), (y >= m).astype(float))
        return _out(out)

    def transition(self, x, u):
        x, u = np.broadcast_arrays(_f(x), _f(u))
        m = _f(dyadic_max(x))
        _, e = np.frexp(u)
        # u in [2^(e-1), 2^e) selects n = -e
        e = np.minimum(e, 0)
        return _out(np.where(u > 0, np.ldexp(m, e), 0.0))


_VARIANTS: dict[str, Callable[..., ClosedCopula]] = {
    "Pi": lambda: PI,
    "M": lambda: M,
    "W": lambda: W,
    "Frechet": lambda alpha, beta: Frechet(alpha, beta),
    "LTheta": lambda theta: LTheta(theta),
    "RTheta": lambda theta: RTheta(theta),
    "OrdinalSum": lambda intervals: OrdinalSum(tuple(tuple(iv) for iv in intervals)),
    "BinaryScaling": lambda: BinaryScaling(),
}


def copula_from_dict(d: dict[str, Any]) -> ClosedCopula:
    try:
        make = _VARIANTS[d["variant"]]
    except KeyError:
        raise ValueError(f"unknown copula variant {d.get('variant')!r}") from None
    return make(**d.get("params", {}))


def copula_from_json(text: str) -> ClosedCopula:
    return copula_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Archimedean generators


@dataclass(frozen=True)
class Generator:
    """Archimedean generator in inverse form ``psi: [0, inf) -> [0, 1]``."""

    name: str
    psi: Callable[[np.ndarray], np.ndarray]
    phi: Callable[[np.ndarray], np.ndarray] | None = None
    params: dict[str, float] = field(default_factory=dict)

    def __call__(self, x):
        return self.psi(_f(x))

    def rescaled(self, c: float) -> "Generator":
        """Generator ``x -> psi(c * x)``."""
        psi = self.psi
        phi = self.phi
        return Generator(
            f"{self.name}(c*x)",
            lambda x: psi(c * _f(x)),
            None if phi is None else (lambda u: _f(phi(u)) / c),
            {**self.params, "scale": c},
        )


def exponential_generator(c: float = 1.0) -> Generator:
    if c <= 0:
        raise ValueError("rate must be positive")
    return Generator("exponential", lambda x: np.exp(-c * _f(x)), lambda u: -np.log(_f(u)) / c, {"c": c})


def clayton_generator(theta: float) -> Generator:
    if theta <= 0:
        raise ValueError("Clayton theta must be positive")
    return Generator(
        "clayton",
        lambda x: (1.0 + theta * _f(x)) ** (-1.0 / theta),
        lambda u: (_f(u) ** (-theta) - 1.0) / theta,
        {"theta": theta},
    )


def gumbel_generator(theta: float) -> Generator:
    if theta < 1:
        raise ValueError("Gumbel theta must be >= 1")
    return Generator(
        "gumbel",
        lambda x: np.exp(-(_f(x) ** (1.0 / theta))),
        lambda u: (-np.log(_f(u))) ** theta,
        {"theta": theta},
    )


@dataclass
class GeneratorReport:
    psi_at_zero: bool
    non_increasing: bool
    strictly_decreasing: bool
    decays: bool
    finite: bool
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def generator_validate(
    g: Generator, sample_count: int = 200, low: float = 1e-6, large: float = 1e12
) -> GeneratorReport:
    """Check the necessary generator properties on a geometric grid.

    ``psi(0) == 1`` exactly, ``psi`` non-increasing on ``{0} + geomspace(low,
    large, sample_count)``, strictly decreasing wherever it is positive, and
    ``psi(large) < 1e-6``.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be >= 2")
    xs = np.concatenate([[0.0], np.geomspace(low, large, sample_count)])
    with np.errstate(all="ignore"):
        ys = _f(g.psi(xs))
    failures = []

    finite = bool(np.all(np.isfinite(ys)))
    if not finite:
        bad = xs[~np.isfinite(ys)]
        failures.append(f"non-finite psi at x={float(bad[0])!r}")
        return GeneratorReport(False, False, False, False, False, failures)

    psi0 = ys[0] == 1.0
    if not psi0:
        failures.append(f"psi(0) = {float(ys[0])!r} != 1")

    dy = np.diff(ys)
    non_inc = bool(np.all(dy <= 0))
    if not non_inc:
        i = int(np.argmax(dy > 0))
        failures.append(f"psi increases between x={float(xs[i])!r} and x={float(xs[i + 1])!r}")

    positive = ys[:-1] > 0
    strict = bool(np.all(dy[positive] < 0))
    if not strict:
        i = int(np.flatnonzero(positive & (dy >= 0))[0])
        failures.append(f"psi not strictly decreasing between x={float(xs[i])!r} and x={float(xs[i + 1])!r}")

    decays = bool(ys[-1] < 1e-6)
    if not decays:
        failures.append(f"psi({large!r}) = {float(ys[-1])!r} does not fall below 1e-6")

    return GeneratorReport(bool(psi0), non_inc, strict, decays, finite, failures)
