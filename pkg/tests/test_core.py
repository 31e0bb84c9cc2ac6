import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_model
from ipsdrift.core import (DriftEvaluator, EmpiricalMeasureSnapshot, FourierDriftModel,
                          ModeLattice, empirical_fourier, eval_drift, eval_drift_naive,
                          fourier_phases, trig_basis, wrap, wrap_nearest)
from ipsdrift.io import load_model, model_from_dict, model_to_dict, save_model

finite = st.floats(-1e6, 1e6, allow_nan=False)


class TestWrap:
    @pytest.mark.parametrize("x, want", [([0.0], [0.0]), ([1.25], [0.25]), ([-0.1, 2.7], [0.9, 0.7])])
    def test_examples(self, x, want):
        np.testing.assert_allclose(wrap(x), want, atol=1e-15)

    @given(arrays(float, st.integers(1, 8), elements=finite))
    def test_range_and_idempotent(self, x):
        w = wrap(x)
        assert np.all((w >= 0) & (w < 1))
        assert np.array_equal(wrap(w), w)

    def test_tiny_negative_stays_below_one(self):
        assert wrap([-1e-18])[0] == 0.0

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            wrap([np.nan])

    @given(arrays(float, 4, elements=st.floats(-10, 10)))
    def test_nearest_lift(self, z):
        r = wrap_nearest(z)
        assert np.all((r > -0.5 - 1e-12) & (r <= 0.5 + 1e-12))
        np.testing.assert_allclose(np.round(z - r), z - r, atol=1e-9)


class TestModeLattice:
    @pytest.mark.parametrize("dim, K", [(1, 4), (2, 3), (3, 2)])
    def test_half_lattice(self, dim, K):
        lat = ModeLattice(dim, K)
        modes = [tuple(k) for k in lat.modes.tolist()]
        assert len(set(modes)) == len(modes) == ((2 * K + 1) ** dim - 1) // 2
        for k in modes:
            assert tuple(-c for c in k) not in modes
            assert [c for c in k if c][0] > 0
            assert max(abs(c) for c in k) <= K

    def test_prefix_property(self):
        small, big = ModeLattice(2, 2), ModeLattice(2, 5)
        assert np.array_equal(big.modes[: small.size], small.modes)

    def test_zero_mode(self):
        lat = ModeLattice(2, 1, include_zero=True)
        assert lat.all_modes[0].tolist() == [0, 0]
        assert lat.n_basis == 1 + 2 * lat.size


class TestEmpiricalFourier:
    def test_single_particle_at_origin(self):
        assert empirical_fourier([[0.0]], ModeLattice(1, 1))[0] == 1.0

    def test_cancellation(self):
        assert abs(empirical_fourier([[0.0], [0.5]], ModeLattice(1, 1))[0]) < 1e-15

    def test_uniform_grid(self):
        x = (np.arange(64) / 64)[:, None]
        assert abs(empirical_fourier(x, ModeLattice(1, 1))[0]) <= 1e-12

    def test_zero_mode_is_one(self):
        x = np.random.default_rng(0).random((10, 2))
        assert empirical_fourier(x, ModeLattice(2, 2, True))[0] == 1.0

    @given(arrays(float, (7, 2), elements=st.floats(0, 1, exclude_max=True)))
    def test_modulus_bound(self, x):
        assert np.all(np.abs(empirical_fourier(x, ModeLattice(2, 3))) <= 1 + 1e-12)

    def test_phase_recursion_matches_direct(self, rng):
        x = rng.random((50, 2))
        lat = ModeLattice(2, 6, True)
        direct = np.exp(2j * np.pi * x @ lat.all_modes.T)
        np.testing.assert_allclose(fourier_phases(x, lat), direct, atol=1e-12)

    def test_trig_basis_columns(self, rng):
        x = rng.random((5, 1))
        lat = ModeLattice(1, 2, True)
        b = trig_basis(x, lat)
        np.testing.assert_allclose(b[:, 0], 1.0)
        np.testing.assert_allclose(b[:, 1:3], np.cos(2 * np.pi * x * [1, 2]), atol=1e-13)
        np.testing.assert_allclose(b[:, 3:], np.sin(2 * np.pi * x * [1, 2]), atol=1e-13)


class TestDrift:
    def test_external_only(self):
        m = FourierDriftModel.from_modes(1, 1, 0, g=[(0, (1,), 0.3, 0.0)])
        snap = EmpiricalMeasureSnapshot.from_positions([[0.4]], ModeLattice(1, 1))
        assert eval_drift(m, snap, [0.0])[0] == pytest.approx(0.3, abs=1e-15)

    def test_self_interaction_of_odd_kernel(self):
        m = FourierDriftModel.from_modes(1, 0, 1, f=[(0, (1,), 0.0, 0.5)])
        snap = EmpiricalMeasureSnapshot.from_positions([[0.3]], ModeLattice(1, 1))
        assert abs(eval_drift(m, snap, [0.3])[0]) < 1e-15

    def test_naive_symmetric_pair(self):
        m = FourierDriftModel.from_modes(1, 0, 2, f=[(0, (1,), 0.0, 0.5), (0, (2,), 0.0, -0.2)])
        assert abs(eval_drift_naive(m, [[0.2], [0.6]], [0.4])[0]) < 1e-14

    def test_naive_without_interaction(self, rng):
        m = random_model(rng, 2, 3, 3).without_interaction()
        x = rng.random((4, 2))
        np.testing.assert_allclose(eval_drift_naive(m, rng.random((5, 2)), x), m.G(x), atol=1e-13)

    def test_random_matches_naive_1d(self, rng):
        m = random_model(rng, 1, 4, 4)
        pos = rng.random((16, 1))
        snap = EmpiricalMeasureSnapshot.from_positions(pos, ModeLattice(1, 4))
        x = rng.random((10, 1))
        np.testing.assert_allclose(eval_drift(m, snap, x), eval_drift_naive(m, pos, x), atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 2), st.integers(0, 8), st.integers(0, 8),
           st.integers(1, 64))
    def test_fast_naive_property(self, seed, dim, kg, kf, n):
        if dim == 2:
            kg, kf = min(kg, 5), min(kf, 5)
        r = np.random.default_rng(seed)
        m = random_model(r, dim, kg, kf)
        pos = r.random((n, dim))
        snap = EmpiricalMeasureSnapshot.from_positions(pos, ModeLattice(dim, max(kf, 1)))
        x = r.random((3, dim))
        assert np.max(np.abs(eval_drift(m, snap, x) - eval_drift_naive(m, pos, x))) <= 1e-9

    def test_evaluator_matches_pointwise(self, rng):
        m = random_model(rng, 2, 2, 3)
        x = rng.random((20, 2))
        ev = DriftEvaluator(m)
        e = ev.phases(x)
        mu = ev.measure(e)[ev.f_idx]
        np.testing.assert_allclose(ev.drift(e, mu), eval_drift_naive(m, x, x), atol=1e-12)

    def test_snapshot_must_cover(self, rng):
        m = random_model(rng, 1, 1, 4)
        snap = EmpiricalMeasureSnapshot.from_positions([[0.1]], ModeLattice(1, 2))
        with pytest.raises(ValueError):
            eval_drift(m, snap, [0.0])


class TestModel:
    def test_parseval(self, rng):
        for dim, K in ((1, 5), (2, 3)):
            m = random_model(rng, dim, 0, K)
            g = np.arange(256) / 256
            grid = np.stack(np.meshgrid(*([g] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
            quad = np.mean(m.F(grid) ** 2, axis=0)
            coef = np.abs(m.f_fourier()) ** 2
            np.testing.assert_allclose(2 * coef.sum(axis=1), quad, rtol=1e-8)

    def test_from_modes_folds_negative(self):
        a = FourierDriftModel.from_modes(1, 0, 2, f=[(0, (-2,), 0.1, 0.7)])
        b = FourierDriftModel.from_modes(1, 0, 2, f=[(0, (2,), 0.1, -0.7)])
        assert np.array_equal(a.theta, b.theta)

    def test_no_constant_interaction(self):
        with pytest.raises(ValueError):
            FourierDriftModel.from_modes(1, 0, 1, f=[(0, (0,), 1.0, 0.0)])

    def test_theta_round_trip(self, rng):
        m = random_model(rng, 2, 2, 1)
        assert np.array_equal(FourierDriftModel.from_theta(2, 2, 1, m.theta).theta, m.theta)

    def test_embed_preserves_function(self, rng):
        m = random_model(rng, 2, 1, 2)
        big = m.embed(3, 4)
        x = rng.random((6, 2))
        np.testing.assert_allclose(big.G(x), m.G(x), atol=1e-13)
        np.testing.assert_allclose(big.F(x), m.F(x), atol=1e-13)

    def test_shifted(self, rng):
        m = random_model(rng, 1, 3, 0)
        x = rng.random((6, 1))
        np.testing.assert_allclose(m.shifted([0.3]).G(x), m.G(x - 0.3), atol=1e-13)

    def test_arithmetic(self, rng):
        a, b = random_model(rng, 1, 2, 3), random_model(rng, 1, 4, 1)
        x = rng.random((5, 1))
        np.testing.assert_allclose((a - b).F(x), a.F(x) - b.F(x), atol=1e-13)
        np.testing.assert_allclose((a + b).G(x), a.G(x) + b.G(x), atol=1e-13)

    def test_rejects_nonfinite(self):
        m = FourierDriftModel.zeros(1, 1, 1)
        with pytest.raises(ValueError):
            FourierDriftModel(1, 1, 1, m.g_cos, m.g_sin, [[np.inf]], m.f_sin)

    def test_json_bit_exact(self, rng, tmp_path):
        m = random_model(rng, 2, 2, 2)
        save_model(m, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        assert back.theta.tobytes() == m.theta.tobytes()
        doc = json.loads((tmp_path / "m.json").read_text())
        assert set(doc) == {"dim", "K_G", "K_F", "modes", "g_coeffs", "f_coeffs"}
        assert model_from_dict(model_to_dict(back)).theta.tobytes() == m.theta.tobytes()

    def test_json_rejects_bad_modes(self, rng):
        doc = model_to_dict(random_model(rng, 1, 2, 2))
        doc["modes"]["f"] = doc["modes"]["f"][::-1]
        with pytest.raises(ValueError):
            model_from_dict(doc)
