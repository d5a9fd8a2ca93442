"""Markov products of copulas, Frechet copula semigroups and their simulators."""
from .copulas import (
    BinaryScaling,
    ClosedCopula,
    Frechet,
    FrechetCoeffs,
    Generator,
    LTheta,
    M,
    OrdinalSum,
    PI,
    RTheta,
    W,
    frechet_coeffs_from_fg,
    frechet_product,
    generator_validate,
)
from .grid import (
    GridCopula,
    cdf_at,
    discretize,
    idempotency_defect,
    inverse_defect,
    markov_product,
    mixture,
    power,
    sup_distance,
    transpose,
)

__version__ = "0.1.0"
