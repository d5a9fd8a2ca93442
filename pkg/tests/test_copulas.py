import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markovcopula.copulas import (
    PI,
    BinaryScaling,
    Frechet,
    FrechetCoeffs,
    Generator,
    LTheta,
    M,
    OrdinalSum,
    RTheta,
    W,
    clayton_generator,
    copula_from_dict,
    copula_from_json,
    dyadic_max,
    exponential_generator,
    frechet_coeffs_from_fg,
    frechet_product,
    generator_validate,
    gumbel_generator,
    invert_conditional_cdf,
)
from markovcopula.grid import cell_masses, discretize, markov_product, sup_distance

from conftest import ecdf_sup_distance

ALL_VARIANTS = [
    PI,
    M,
    W,
    Frechet(0.2, 0.3),
    LTheta(0.5),
    LTheta(0.3),
    RTheta(0.5),
    RTheta(0.7),
    OrdinalSum(((0.0, 0.5), (0.5, 1.0))),
    OrdinalSum(((0.1, 0.3), (0.6, 0.9))),
    BinaryScaling(),
]
IDS = [c.to_json() for c in ALL_VARIANTS]

unit = st.floats(0.0, 1.0, allow_nan=False)
coeffs = st.tuples(unit, unit).map(lambda ab: FrechetCoeffs(ab[0] * (1 - ab[1]), ab[1] * (1 - ab[0] * (1 - ab[1]))))


def test_cdf_examples():
    assert PI.cdf(0.5, 0.5) == 0.25
    assert M.cdf(0.3, 0.7) == 0.3
    assert W.cdf(0.3, 0.4) == 0.0
    # 0.2 * W + 0.5 * Pi + 0.3 * M at (0.5, 0.6), evaluated by hand
    assert Frechet(0.2, 0.3).cdf(0.5, 0.6) == pytest.approx(0.2 * 0.1 + 0.5 * 0.30 + 0.3 * 0.5, abs=1e-15)
    assert Frechet(0.2, 0.3).cdf(0.5, 0.6) == pytest.approx(0.32, abs=1e-15)


def test_frechet_cdf_matches_grid_mass():
    g = discretize(Frechet(0.2, 0.3), 10)
    # C(0.5, 0.6) is the mass of the lower-left 5x6 block
    assert g.mass[:5, :6].sum() == pytest.approx(0.32, abs=1e-14)


def test_conditional_cdf_examples():
    assert PI.conditional_cdf(0.4, 0.7) == 0.7
    assert M.conditional_cdf(0.4, 0.7) == 1.0
    assert Frechet(0.2, 0.3).conditional_cdf(0.5, 0.6) == pytest.approx(0.8, abs=1e-15)


@pytest.mark.parametrize("c", ALL_VARIANTS, ids=IDS)
@pytest.mark.parametrize("x,y", [(0.47, 0.61), (0.23, 0.81), (0.77, 0.12), (0.41, 0.369)])
def test_conditional_cdf_is_partial_derivative(c, x, y):
    # points chosen off every variant's kinks and block boundaries
    h = 1e-6
    fd = (c.cdf(x + h, y) - c.cdf(x - h, y)) / (2 * h)
    assert c.conditional_cdf(x, y) == pytest.approx(fd, abs=1e-4)


@pytest.mark.parametrize("c", ALL_VARIANTS, ids=IDS)
def test_boundary_and_two_increasing_on_101_lattice(c):
    t = np.linspace(0, 1, 101)
    assert np.all(np.abs(c.cdf(t, 0.0)) <= 1e-12)
    assert np.all(np.abs(c.cdf(0.0, t)) <= 1e-12)
    assert np.allclose(c.cdf(t, 1.0), t, atol=1e-12, rtol=0)
    assert np.allclose(c.cdf(1.0, t), t, atol=1e-12, rtol=0)
    assert cell_masses(c, 100).min() >= -1e-12


@pytest.mark.parametrize("c", ALL_VARIANTS, ids=IDS)
def test_conditional_cdf_is_a_cdf(c):
    ys = np.linspace(0, 1, 401)
    for x in (0.1, 0.37, 0.5, 0.9):
        F = c.conditional_cdf(x, ys)
        assert np.all(np.diff(F) >= 0)
        assert F[-1] == 1.0
        assert np.all((F >= 0) & (F <= 1))


@pytest.mark.parametrize("c", ALL_VARIANTS, ids=IDS)
@pytest.mark.parametrize("x", [0.1, 0.5, 0.9])
def test_transition_pushforward(c, x):
    U = np.random.default_rng(7).random(100_000)
    Y = c.transition(np.full(U.shape, x), U)
    ys = np.unique(np.concatenate([np.linspace(0, 1, 2001), Y[:2000]]))
    d = ecdf_sup_distance(Y, lambda y: c.conditional_cdf(x, y), ys)
    assert d <= 0.01


@pytest.mark.parametrize("c", [PI, Frechet(0.2, 0.3), OrdinalSum(((0.2, 0.7),))], ids=str)
def test_generic_inversion_matches_closed_form_law(c):
    U = np.random.default_rng(11).random(20_000)
    x = 0.35
    Y = invert_conditional_cdf(c, np.full(U.shape, x), U)
    # bisection stops within 1e-12 above an atom; compare off the atoms
    ys = np.linspace(0, 1, 1001) + 1e-9
    assert ecdf_sup_distance(Y, lambda y: c.conditional_cdf(x, y), ys) <= 0.015


def test_invert_conditional_cdf_bracket():
    # Pi kernel is the identity in y, so the quantile is u itself
    u = np.array([0.1, 0.25, 0.9])
    assert np.allclose(invert_conditional_cdf(PI, 0.3, u), u, atol=1e-12)


def test_transition_examples():
    assert W.transition(0.25, 0.123) == 0.75
    assert LTheta(0.5).transition(0.4, 0.3) == pytest.approx(0.2, abs=0)
    assert RTheta(0.5).transition(0.2, 0.9) == 0.4
    # J_0.3 = {..., 0.15, 0.3, 0.6}; u = 0.3 lies in [1/4, 1/2) -> one halving of m(0.3)
    assert dyadic_max(0.3) == 0.6
    assert BinaryScaling().transition(0.3, 0.3) == 0.3


def test_right_inverse_composition_dyadic_lattice():
    lat = np.round(np.linspace(0, 1, 50) * 2**20) / 2**20
    u = np.linspace(0, 1, 50)
    for th in (0.5, 0.25, 0.75):
        x, uu, vv = np.meshgrid(lat, u, u, indexing="ij")
        y = RTheta(th).transition(LTheta(th).transition(x, uu), vv)
        assert np.array_equal(y, x)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 0.99), unit, unit, unit)
def test_right_inverse_composition_ulp(th, x, u, v):
    y = RTheta(th).transition(LTheta(th).transition(x, u), v)
    # one rounding in 1 - (1 - th) x, amplified by the division
    assert abs(y - x) <= 4 * np.finfo(float).eps / min(th, 1 - th)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(0.0, 1.0), min_size=2, max_size=8, unique=True),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
)
def test_ordinal_sum_transition_idempotent(cuts, x, u, v):
    pts = sorted(cuts)
    # every other gap becomes a block, the rest is complement
    ivs = tuple((a, b) for a, b in zip(pts[::2], pts[1::2]) if b > a)
    if not ivs:
        return
    D = OrdinalSum(ivs)
    assert D.transition(D.transition(x, u), v) == D.transition(x, v)


def test_ordinal_sum_complement_is_fixed():
    D = OrdinalSum(((0.1, 0.3),))
    assert D.transition(0.5, 0.77) == 0.5
    assert D.transition(0.2, 0.5) == pytest.approx(0.2)


def test_binary_scaling_cdf_against_enumeration():
    # direct double sum over (k, n) levels, no tail lumping
    def brute(u, v, K=60):
        G = lambda z: min(max(2 * z - 1, 0.0), 1.0)
        return sum(
            2.0 ** -(k + 1) * 2.0 ** -(n + 1) * min(G(u * 2**k), G(v * 2**n))
            for k in range(K)
            for n in range(K)
        )

    E = BinaryScaling()
    for u, v in [(0.3, 0.7), (0.6, 0.6), (0.05, 0.9), (0.9, 0.013), (0.5, 0.25), (1.0, 0.37)]:
        assert E.cdf(u, v) == pytest.approx(brute(u, v), abs=1e-14)


def test_binary_scaling_conditional_cdf_jumps():
    E = BinaryScaling()
    # atoms at 0.6 (1/2), 0.3 (1/4), 0.15 (1/8), ...
    assert E.conditional_cdf(0.3, 0.6) == 1.0
    assert E.conditional_cdf(0.3, 0.59) == 0.5
    assert E.conditional_cdf(0.3, 0.3) == 0.5
    assert E.conditional_cdf(0.3, 0.2999) == 0.25
    assert E.conditional_cdf(0.3, 0.15) == 0.25


def test_frechet_conditional_cdf_finite_difference_at_example():
    F = Frechet(0.2, 0.3)
    h = 1e-6
    fd = (F.cdf(0.5 + h, 0.6) - F.cdf(0.5 - h, 0.6)) / (2 * h)
    assert F.conditional_cdf(0.5, 0.6) == pytest.approx(fd, abs=1e-4)


def test_frechet_transition_uses_one_uniform():
    F = Frechet(0.2, 0.3)
    assert F.transition(0.4, 0.1) == 0.6
    assert F.transition(0.4, 0.3) == 0.4
    assert F.transition(0.4, 0.75) == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# Frechet coefficient algebra


def test_frechet_product_examples():
    c = FrechetCoeffs(0.2, 0.3)
    assert frechet_product(FrechetCoeffs(0, 1), c) == c
    assert frechet_product(FrechetCoeffs(1, 0), FrechetCoeffs(1, 0)) == FrechetCoeffs(0, 1)
    p = frechet_product(FrechetCoeffs(0.2, 0.3), FrechetCoeffs(0.1, 0.4))
    assert p.alpha == pytest.approx(0.11, abs=1e-15)
    assert p.beta == pytest.approx(0.14, abs=1e-15)


def test_frechet_product_against_grid_oracle():
    n = 256
    g = markov_product(discretize(Frechet(0.2, 0.3), n), discretize(Frechet(0.1, 0.4), n))
    assert sup_distance(g, discretize(Frechet(0.11, 0.14), n)) <= 2 / n


@settings(max_examples=300)
@given(coeffs, coeffs, coeffs)
def test_frechet_product_associative_and_closed(c1, c2, c3):
    left = frechet_product(frechet_product(c1, c2), c3)
    right = frechet_product(c1, frechet_product(c2, c3))
    assert abs(left.alpha - right.alpha) <= 1e-12
    assert abs(left.beta - right.beta) <= 1e-12
    assert left.alpha >= 0 and left.beta >= 0 and left.alpha + left.beta <= 1


def test_frechet_coeffs_validation():
    with pytest.raises(ValueError):
        FrechetCoeffs(0.7, 0.4)
    with pytest.raises(ValueError):
        FrechetCoeffs(-0.1, 0.4)
    c = FrechetCoeffs(-1e-17, 1 + 1e-16)
    assert c.alpha == 0.0 and c.beta <= 1.0


def test_coeffs_from_fg_homogeneous_lag():
    a = frechet_coeffs_from_fg(0.1875, 0.3125, 0.1171875, 0.1328125)
    assert a.alpha == pytest.approx(0.1875, abs=1e-12)
    assert a.beta == pytest.approx(0.3125, abs=1e-12)


def test_coeffs_from_fg_identity_and_pure_restart():
    assert frechet_coeffs_from_fg(0.0, 1.0, 0.2, 0.3) == FrechetCoeffs(0.2, 0.3)
    c = frechet_coeffs_from_fg(0.0, math.exp(-1), 0.0, math.exp(-2))
    assert c.alpha == 0.0
    assert c.beta == pytest.approx(math.exp(-1), abs=1e-15)
    lag1 = FrechetCoeffs(0.0, math.exp(-1))
    assert frechet_product(lag1, lag1).beta == pytest.approx(math.exp(-2), abs=1e-15)


def test_coeffs_from_fg_degenerate():
    with pytest.raises(ZeroDivisionError):
        frechet_coeffs_from_fg(0.5, 0.5, 0.1, 0.2)
    with pytest.raises(ValueError):
        # profiles that are not from any valid family
        frechet_coeffs_from_fg(0.0, 0.5, 0.0, 0.9)


# ---------------------------------------------------------------------------
# generators


def test_generator_validate_examples():
    assert generator_validate(exponential_generator(), 200).passed
    assert generator_validate(clayton_generator(1.0), 200).passed
    assert generator_validate(gumbel_generator(2.0), 200).passed
    bad = generator_validate(Generator("increasing", lambda x: 1.0 + x), 50)
    assert not bad.non_increasing
    assert not bad.passed


def test_generator_validate_reports_nonfinite():
    g = Generator("log", lambda x: 1.0 - np.log(x))
    rep = generator_validate(g, 100)
    assert not rep.finite
    assert rep.failures == ["non-finite psi at x=0.0"]


def test_generator_validate_psi0():
    rep = generator_validate(Generator("half", lambda x: 0.5 * np.exp(-x)), 20)
    assert not rep.psi_at_zero


def test_generator_validate_needs_two_samples():
    with pytest.raises(ValueError):
        generator_validate(exponential_generator(), 1)


# ---------------------------------------------------------------------------
# serialisation


@pytest.mark.parametrize("c", ALL_VARIANTS, ids=IDS)
def test_json_round_trip(c):
    d = json.loads(c.to_json())
    assert set(d) == {"variant", "params"}
    assert copula_from_json(c.to_json()) == c


def test_json_unknown_variant():
    with pytest.raises(ValueError):
        copula_from_dict({"variant": "Gaussian", "params": {}})


def test_invalid_parameters():
    with pytest.raises(ValueError):
        LTheta(1.5)
    with pytest.raises(ValueError):
        OrdinalSum(((0.2, 0.6), (0.5, 0.9)))
    with pytest.raises(ValueError):
        OrdinalSum(((0.5, 0.5),))
