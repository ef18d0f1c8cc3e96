import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from periodic_transport.spectrum import (
    GridField,
    InitialData,
    ModelParams,
    ModeState,
    ModeTrajectory,
    build_initial_data,
    collocation_grid,
    explicit_initial_data,
    frac_laplacian_symbol,
    hilbert_symbol,
    hypothesis_threshold,
    parseval_l2,
    reconstruct,
    sobolev_norm,
    w_initial,
)

mode_vectors = st.lists(
    st.floats(-10, 10, allow_nan=False, allow_infinity=False), min_size=1, max_size=256
)


class TestSymbols:
    def test_hilbert_positive_mode(self):
        assert hilbert_symbol(3) == -1j

    def test_hilbert_zero_mode(self):
        assert hilbert_symbol(0) == 0

    def test_hilbert_negative_mode(self):
        assert hilbert_symbol(-2) == 1j

    @given(st.integers(-10**9, 10**9).filter(lambda n: n != 0))
    def test_hilbert_squares_to_minus_one(self, n):
        assert hilbert_symbol(n) * hilbert_symbol(n) == -1

    def test_frac_laplacian_values(self):
        assert frac_laplacian_symbol(2, 1.0) == 2
        assert frac_laplacian_symbol(0, 0.7) == 0
        assert frac_laplacian_symbol(-3, 0.5) == pytest.approx(float(mpmath.sqrt(3)), rel=1e-15)

    @pytest.mark.parametrize("alpha", [0.0, -1.0, 2.5])
    def test_frac_laplacian_rejects_alpha(self, alpha):
        with pytest.raises(ValueError):
            frac_laplacian_symbol(1, alpha)

    @given(st.integers(-10**6, 10**6))
    def test_order_two_is_minus_second_derivative(self, n):
        assert frac_laplacian_symbol(n, 2.0) == n * n

    def test_vectorised(self):
        out = frac_laplacian_symbol(np.array([-2, 0, 4]), 0.5)
        np.testing.assert_allclose(out, [math.sqrt(2), 0, 2])


class TestInitialData:
    def test_power_family_values(self):
        assert build_initial_data(1, 5, 1).coeffs[0] == 3
        assert build_initial_data(1, 5, 2).coeffs[1] == 0.09375
        assert build_initial_data(0.5, 5, 1).coeffs[0] == 2

    def test_rejects_small_p(self):
        with pytest.raises(ValueError):
            build_initial_data(1, 4.9, 4)

    def test_rejects_nonpositive_delta(self):
        with pytest.raises(ValueError):
            build_initial_data(0, 5, 4)

    @given(st.floats(1e-3, 1e3), st.integers(1, 400))
    def test_p5_meets_hypothesis(self, delta, n_modes):
        init = build_initial_data(delta, 5, n_modes)
        n = np.arange(1, n_modes + 1)
        assert np.all(init.as_array() >= hypothesis_threshold(n, delta))
        assert init.hypothesis_n == n_modes

    def test_faster_decay_records_last_valid_mode(self):
        init = build_initial_data(1, 6, 10)
        # 3/n^6 >= 2/n^5 iff n <= 1.5
        assert init.hypothesis_n == 1

    def test_w_initial(self):
        assert tuple(w_initial(InitialData((3, 3 / 32))).w) == (1.5, 0.046875)
        assert not w_initial(InitialData((0.0, 0.0, 0.0))).w.any()
        a = [2 / n**5 for n in range(1, 9)]
        assert w_initial(explicit_initial_data(a)).w[0] == 1

    def test_truncate_and_pad(self):
        init = InitialData((1.0, 2.0, 3.0))
        assert init.truncated(2).coeffs == (1.0, 2.0)
        assert init.truncated(5).coeffs == (1.0, 2.0, 3.0, 0.0, 0.0)


class TestReconstruction:
    def test_single_mode(self):
        state = ModeState(0.0, [1.0, 0.0, 0.0])
        assert reconstruct(state, [math.pi / 2])[0] == pytest.approx(2.0, abs=1e-15)

    def test_two_modes(self):
        state = ModeState(0.0, [1.0, 0.5])
        assert reconstruct(state, [math.pi / 4])[0] == pytest.approx(
            float(mpmath.sqrt(2) + 1), abs=1e-15
        )

    @given(mode_vectors)
    def test_zero_at_origin(self, w):
        assert reconstruct(ModeState(0.0, w), [0.0])[0] == 0.0

    @given(mode_vectors)
    def test_odd(self, w):
        state = ModeState(0.0, w)
        x = np.linspace(0, math.pi, 33)
        np.testing.assert_allclose(reconstruct(state, -x), -reconstruct(state, x), atol=1e-12)

    @given(mode_vectors)
    @settings(max_examples=25)
    def test_zero_mean_on_grid(self, w):
        x = collocation_grid(1024)
        u = reconstruct(ModeState(0.0, w), x)
        assert abs(np.mean(u)) < 1e-12


class TestNorms:
    def test_parseval_values(self):
        assert parseval_l2(ModeState(0.0, [1.0, 0, 0])) == pytest.approx(float(mpmath.sqrt(4 * mpmath.pi)), rel=1e-15)
        assert parseval_l2(ModeState(0.0, [0.0, 0.0])) == 0.0
        assert parseval_l2(ModeState(0.0, [1.0, 1.0])) == pytest.approx(float(mpmath.sqrt(8 * mpmath.pi)), rel=1e-15)

    def test_l2_by_direct_integral(self):
        # int (2 sin x)^2 over one period
        exact = mpmath.quad(lambda x: (2 * mpmath.sin(x)) ** 2, [-mpmath.pi, mpmath.pi])
        assert parseval_l2(ModeState(0.0, [1.0])) ** 2 == pytest.approx(float(exact), rel=1e-14)

    def test_sobolev_values(self):
        assert sobolev_norm(ModeState(0.0, [1.0, 0.0]), 0) == pytest.approx(math.sqrt(4 * math.pi))
        assert sobolev_norm(ModeState(0.0, [1.0, 0.0]), 1) == pytest.approx(math.sqrt(8 * math.pi), rel=1e-15)
        assert sobolev_norm(ModeState(0.0, [0.0, 1.0]), 3) == pytest.approx(math.sqrt(4 * math.pi * 125), rel=1e-15)

    def test_sobolev_survives_huge_modes(self):
        val = sobolev_norm(ModeState(0.0, [1e200, 1e200]), 3)
        assert math.isfinite(val)

    @given(mode_vectors)
    @settings(max_examples=40)
    def test_parseval_matches_trapezoid(self, w):
        state = ModeState(0.0, w)
        x = collocation_grid(4096)
        u = reconstruct(state, x)
        quad = 2 * math.pi * np.mean(u**2)
        l2sq = parseval_l2(state) ** 2
        assert abs(quad - l2sq) <= 1e-10 * max(l2sq, 1e-300) or l2sq == quad == 0.0


class TestTypes:
    def test_params_defaults_and_grid(self):
        p = ModelParams()
        assert p.case == (1, 1)
        assert p.grid_points == 128
        assert ModelParams(n_modes=85).grid_points >= 3 * 85

    @pytest.mark.parametrize(
        "kw",
        [dict(a=2), dict(kappa=-0.1), dict(alpha=0.0), dict(delta=0), dict(n_modes=0), dict(grid_points=7), dict(n_modes=32, grid_points=32)],
    )
    def test_params_validation(self, kw):
        with pytest.raises(ValueError):
            ModelParams(**kw)

    def test_state_is_read_only(self):
        s = ModeState(0.1, [1.0, 2.0])
        with pytest.raises(ValueError):
            s.w[0] = 3.0

    def test_trajectory_requires_increasing_times(self):
        p, init = ModelParams(n_modes=2), InitialData((1.0, 1.0))
        with pytest.raises(ValueError):
            ModeTrajectory(p, init, (ModeState(0.1, [1, 1]), ModeState(0.1, [1, 1])))

    def test_grid_field_oddness(self):
        x = collocation_grid(64)
        assert GridField(0.0, np.sin(x)).oddness_residual() < 1e-15
        assert GridField(0.0, np.cos(x)).oddness_residual() > 0.5
