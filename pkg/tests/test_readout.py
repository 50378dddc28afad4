import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import legendre as npleg

from qrcbench.operators import misc_rng
from qrcbench.readout import (
    capacity,
    capacity_detail,
    delayed_power_target,
    generate_inputs,
    legendre_product_target,
    normalized_legendre,
    train_readout,
)


class TestGenerateInputs:
    def test_deterministic(self):
        assert np.array_equal(generate_inputs(100, "unit_interval", 5),
                              generate_inputs(100, "unit_interval", 5))

    def test_prefix_stable_under_length_change(self):
        short = generate_inputs(50, "unit_interval", 5)
        long = generate_inputs(200, "unit_interval", 5)
        assert np.array_equal(short, long[:50])

    def test_mean_of_large_sample(self):
        vals = generate_inputs(100_000, "unit_interval", 11)
        assert abs(vals.mean() - 0.5) < 0.01

    def test_symmetric_range(self):
        vals = generate_inputs(10_000, "symmetric", 3)
        assert vals.min() >= -1.0 and vals.max() <= 1.0
        assert vals.min() < -0.9 and vals.max() > 0.9

    def test_invalid(self):
        with pytest.raises(ValueError):
            generate_inputs(0, "unit_interval", 1)
        with pytest.raises(ValueError):
            generate_inputs(10, "percent", 1)


class TestTrainReadout:
    def test_exact_recovery_of_a_column(self):
        rng = misc_rng(1)
        x = rng.normal(size=(200, 6))
        y = x[:, 2].copy()
        model = train_readout(x, y)
        assert capacity(model.predict(x), y) == pytest.approx(1.0, abs=1e-10)

    def test_orthogonal_target_gives_zero_weights(self):
        rng = misc_rng(2)
        x = np.repeat(rng.normal(size=(100, 3)), 2, axis=0)
        y = np.tile([1.0, -1.0], 100)  # flips inside duplicated rows: unlearnable
        model = train_readout(x, y)
        assert np.abs(model.weights).max() < 1e-8
        assert capacity(model.predict(x), y) < 1e-10

    def test_rank_deficient_duplicate_column(self):
        rng = misc_rng(3)
        base = rng.normal(size=(150, 4))
        dup = np.hstack([base, base[:, :1]])
        y = rng.normal(size=150)
        m1 = train_readout(base, y)
        m2 = train_readout(dup, y)
        assert np.all(np.isfinite(m2.weights))
        assert np.allclose(m1.predict(base), m2.predict(dup), atol=1e-8)

    def test_constant_target_flags_degenerate(self):
        x = misc_rng(4).normal(size=(50, 3))
        model = train_readout(x, np.full(50, 2.5))
        assert model.degenerate
        assert model.bias == pytest.approx(2.5)
        assert np.all(model.weights == 0.0)

    def test_ridge_shrinks_weights(self):
        rng = misc_rng(5)
        x = rng.normal(size=(100, 5))
        y = x @ rng.normal(size=5) + 0.1 * rng.normal(size=100)
        w0 = train_readout(x, y, ridge=0.0).weights
        w1 = train_readout(x, y, ridge=100.0).weights
        assert np.linalg.norm(w1) < np.linalg.norm(w0)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            train_readout(np.empty((0, 3)), np.empty(0))
        with pytest.raises(ValueError):
            train_readout(np.ones((5, 2)), np.ones(4))
        with pytest.raises(ValueError):
            train_readout(np.ones((5, 2)), np.ones(5), ridge=-1.0)


class TestCapacity:
    def test_perfect_and_anticorrelated(self):
        y = misc_rng(6).normal(size=50)
        assert capacity(y, y) == pytest.approx(1.0)
        assert capacity(-y, y) == pytest.approx(1.0)

    def test_zero_variance_flagged(self):
        score = capacity_detail(np.ones(10), misc_rng(7).normal(size=10))
        assert score.value == 0.0 and score.degenerate

    def test_null_distribution_of_independent_sequences(self):
        rng = misc_rng(8)
        exceed = sum(
            capacity(rng.uniform(size=300), rng.uniform(size=300)) >= 0.05
            for _ in range(500)
        )
        assert exceed <= 5  # 99% of independent pairs score below 0.05

    @given(st.floats(min_value=0.1, max_value=50), st.floats(-10, 10), st.booleans())
    @settings(max_examples=40, deadline=None)
    def test_affine_invariance(self, scale, shift, flip):
        rng = np.random.default_rng(9)
        pred = rng.normal(size=80)
        targ = pred + 0.5 * rng.normal(size=80)
        base = capacity(pred, targ)
        a = -scale if flip else scale
        assert capacity(a * pred + shift, targ) == pytest.approx(base, abs=1e-12)


class TestLegendre:
    def test_orthonormal_under_uniform_measure(self):
        # Gauss-Legendre quadrature is exact for these polynomial products
        nodes, weights = npleg.leggauss(20)
        for p in range(7):
            for q in range(7):
                inner = 0.5 * np.sum(weights * normalized_legendre(p, nodes) * normalized_legendre(q, nodes))
                assert inner == pytest.approx(1.0 if p == q else 0.0, abs=1e-12)

    def test_degree_one_is_sqrt3_x(self):
        x = np.linspace(-1, 1, 7)
        assert np.allclose(normalized_legendre(1, x), np.sqrt(3) * x)

    def test_targets_align_with_rows(self):
        inputs = np.arange(20, dtype=float)
        y = delayed_power_target(inputs, washout=5, n_rows=10, tau=2, q=1)
        assert np.array_equal(y, inputs[3:13])
        y2 = delayed_power_target(inputs, washout=5, n_rows=10, tau=0, q=2)
        assert np.array_equal(y2, inputs[5:15] ** 2)
        with pytest.raises(ValueError):
            delayed_power_target(inputs, washout=1, n_rows=5, tau=2)

    def test_legendre_product_target(self):
        inputs = np.linspace(-1, 1, 30)
        y = legendre_product_target(inputs, washout=4, n_rows=10, profile=((0, 1), (2, 2)))
        expected = normalized_legendre(1, inputs[4:14]) * normalized_legendre(2, inputs[2:12])
        assert np.allclose(y, expected)
