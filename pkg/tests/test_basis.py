"""Basis layer: recurrence accuracy, bounds, prior law, potential norms."""

import numpy as np
import pytest
from scipy.special import eval_hermite, gammaln

from qti.basis import (
    MAX_ORDER,
    PI_QUARTER,
    HermiteEvaluator,
    PotentialCoeffs,
    PriorSpec,
    SineGaussianPotential,
    default_norm_grid,
    hermite_eval,
    hermite_table,
    potential_eval,
    sample_prior,
    w1_distance,
)
from qti.errors import (
    ConfigError,
    DimensionError,
    InvalidGridError,
    OrderOverflowError,
)


def test_orthonormality_to_order_twelve():
    x = np.linspace(-20.0, 20.0, 20001)
    t = hermite_table(12, x)
    gram = np.trapezoid(t[:, None, :] * t[None, :, :], x, axis=2)
    assert np.abs(gram - np.eye(13)).max() < 1e-8


def test_matches_physicists_hermite_normalization():
    # independent route: phi_n = H_n(x) exp(-x^2/2) / sqrt(2^n n! sqrt(pi))
    x = np.linspace(-5.0, 5.0, 201)
    for n in (0, 1, 2, 5, 12, 25):
        lognorm = 0.5 * (n * np.log(2.0) + gammaln(n + 1)) + 0.25 * np.log(np.pi)
        ref = eval_hermite(n, x) * np.exp(-0.5 * x * x - lognorm)
        assert np.abs(hermite_eval(n, x) - ref).max() < 1e-10


def test_cramer_bound_holds_to_order_64():
    x = np.linspace(-25.0, 25.0, 10000)
    t = hermite_table(64, x)
    assert np.abs(t).max() <= PI_QUARTER + 1e-9


def test_special_values():
    assert hermite_eval(0, 0.0) == pytest.approx(PI_QUARTER, abs=1e-15)
    assert hermite_eval(1, 0.0) == 0.0
    # phi_2(0) = -pi^(-1/4)/sqrt(2)
    assert hermite_eval(2, 0.0) == pytest.approx(-PI_QUARTER / np.sqrt(2), abs=1e-14)


def test_evaluator_order_guards():
    ev = HermiteEvaluator(8)
    with pytest.raises(OrderOverflowError):
        ev.eval(9, 0.0)
    with pytest.raises(OrderOverflowError):
        HermiteEvaluator(-1)
    with pytest.raises(OrderOverflowError):
        hermite_eval(MAX_ORDER + 1, 0.0)


def test_hermite_table_shape_and_scalar_eval():
    t = hermite_table(4, [0.0, 1.0, 2.0])
    assert t.shape == (5, 3)
    assert isinstance(hermite_eval(3, 1.0), float)


def test_potential_value_and_grad_consistency():
    rng = np.random.default_rng(11)
    V = PotentialCoeffs(6, rng.normal(size=7))
    x = np.linspace(-3.0, 3.0, 31)
    # value: direct resummation
    t = hermite_table(6, x)
    ref = 0.5 * x * x + V.v @ t
    assert np.abs(V.value(x) - ref).max() < 1e-13
    assert potential_eval(V, x) == pytest.approx(list(ref))
    # grad: central differences
    h = 1e-6
    fd = (V.value(x + h) - V.value(x - h)) / (2 * h)
    assert np.abs(V.grad(x) - fd).max() < 1e-7


def test_potential_validation_and_roundtrip():
    with pytest.raises(DimensionError):
        PotentialCoeffs(3, np.zeros(3))
    with pytest.raises(ConfigError):
        PotentialCoeffs(1, np.array([np.nan, 0.0]))
    V = PotentialCoeffs(2, np.array([0.5, -1.0, 2.0]))
    W = PotentialCoeffs.from_json(V.to_json())
    assert W.L == V.L and np.array_equal(W.v, V.v)
    Z = PotentialCoeffs.zero(4)
    assert Z.value(1.5) == pytest.approx(0.5 * 1.5**2)


def test_prior_power_law_scales():
    spec = PriorSpec.power_law(12)
    j = np.arange(13)
    assert np.allclose(spec.gamma, 4.0 * (j + 1.0) ** -1.2)
    assert np.all(np.diff(spec.gamma) < 0)
    with pytest.raises(ConfigError):
        PriorSpec(1, np.array([1.0, 0.0]))
    with pytest.raises(DimensionError):
        PriorSpec(1, np.ones(3))


def test_sample_prior_law_and_determinism():
    spec = PriorSpec.power_law(3)
    d1 = sample_prior(spec, np.random.default_rng(99)).v
    d2 = sample_prior(spec, np.random.default_rng(99)).v
    assert np.array_equal(d1, d2)
    n = 20000
    rng = np.random.default_rng(7)
    z = np.array([sample_prior(spec, rng).v / spec.gamma for _ in range(n)])
    assert np.abs(z.mean(axis=0)).max() < 4.0 / np.sqrt(n)
    assert np.abs(z.var(axis=0) - 1.0).max() < 4.0 * np.sqrt(2.0 / n)


def test_w1_distance_single_mode_closed_form():
    # V1 - V2 = c phi_0: L2 norm |c|, sup norm |c| pi^(-1/4)
    c = 0.7
    V1 = PotentialCoeffs(1, np.array([c, 0.0]))
    V2 = PotentialCoeffs.zero(1)
    d = w1_distance(V1, V2)
    assert d == pytest.approx(c * (1.0 + PI_QUARTER), rel=1e-6)
    assert w1_distance(V1, V1) == 0.0
    with pytest.raises(InvalidGridError):
        w1_distance(V1, V2, grid=np.array([]))


def test_default_norm_grid_shape():
    g = default_norm_grid()
    assert g[0] == -12.0 and g[-1] == 12.0 and g.size == 4801


def test_sine_gaussian_value_and_grad():
    V = SineGaussianPotential()
    x = np.linspace(-4.0, 4.0, 41)
    ref = 0.5 * x * x + 5.0 * np.sin(5.0 / np.pi * x) * np.exp(-0.5 * x * x)
    assert np.abs(V.value(x) - ref).max() < 1e-14
    h = 1e-6
    fd = (V.value(x + h) - V.value(x - h)) / (2 * h)
    assert np.abs(V.grad(x) - fd).max() < 1e-7
