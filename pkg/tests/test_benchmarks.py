"""Built-in benchmark mixtures and analytic models."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

import mixquad as mq
from mixquad import benchmarks


class TestBuiltinMixtures:
    def test_registry_and_dimensions(self):
        gm6 = benchmarks.builtin_mixture("gm6")
        gm4 = benchmarks.builtin_mixture("gm4")
        assert (gm6.dim, gm6.n_components) == (6, 2)
        assert (gm4.dim, gm4.n_components) == (4, 2)

    def test_unknown_name_lists_available(self):
        with pytest.raises(ValueError, match="gm4"):
            benchmarks.builtin_mixture("gm5")

    def test_covariances_are_genuinely_correlated(self):
        for name in ("gm6", "gm4"):
            gm = benchmarks.builtin_mixture(name)
            for cov in gm.covariances:
                off = cov - np.diag(np.diag(cov))
                assert np.abs(off).max() > 0.01


class TestRo6:
    def test_value_at_origin(self):
        assert_allclose(benchmarks.ro6(np.zeros((1, 6)))[0], 2.4, rtol=1e-15)

    def test_positive_and_finite_on_samples(self):
        gm = benchmarks.builtin_mixture("gm6")
        y = benchmarks.ro6(mq.sample(gm, 2000, seed=0))
        assert np.all(np.isfinite(y)) and np.all(y > 0.0)

    def test_increasing_in_the_exponent_direction(self):
        a = np.array(benchmarks.RO6_A)
        X = np.vstack([0.5 * a, 1.5 * a])  # larger projection on a, same v sign
        y = benchmarks.ro6(X)
        assert y[1] != y[0]


class TestFilter4:
    def test_transmission_bounds(self):
        gm = benchmarks.builtin_mixture("gm4")
        y = benchmarks.filter4(mq.sample(gm, 2000, seed=1))
        assert np.all(y > 0.0) and np.all(y <= 1.0)

    def test_half_transmission_at_centered_input(self):
        # resonance at the nominal center sits one half-width below the probe
        y = benchmarks.filter4(np.zeros((1, 4)))
        assert_allclose(y[0], 0.5, rtol=1e-12)

    def test_peak_when_resonance_hits_the_probe(self):
        c = np.array(benchmarks.FILTER4_C)
        x = (2.0 / (c @ c)) * c  # shifts the resonance exactly onto the probe
        y = benchmarks.filter4(x[None, :])
        assert y[0] > 0.999999

    def test_response_grid_shape_and_consistency(self):
        gm = benchmarks.builtin_mixture("gm4")
        X = mq.sample(gm, 16, seed=2)
        grid = benchmarks.FILTER4_GRID
        resp = benchmarks.filter4_response(X, grid)
        assert resp.shape == (16, grid.size)
        probe_col = benchmarks.filter4_response(X, [benchmarks.FILTER4_PROBE])[:, 0]
        assert np.array_equal(probe_col, benchmarks.filter4(X))

    def test_unknown_model_lists_available(self):
        with pytest.raises(ValueError, match="ro6"):
            benchmarks.builtin_model("ro7")
