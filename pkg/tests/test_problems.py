import math

import numpy as np
import pytest

import krylovreg as kr
from krylovreg.errors import InvalidSize, ZeroSignal
from krylovreg.kernels import KernelSpec
from krylovreg.linop import dense_operator, diagonal_spd
from krylovreg.problems import (
    NoiseSpec,
    ProblemInstance,
    add_noise,
    blur_problem,
    check_assumption,
    heat_problem,
    make_problem,
    shaw_problem,
)


class TestHeat:
    def test_strictly_lower_triangular(self):
        a, _ = heat_problem(60)
        upper = np.triu(a)  # includes the diagonal
        assert np.all(upper == 0.0)

    def test_nonnegative_entries(self):
        a, _ = heat_problem(60)
        assert np.all(a >= 0.0)

    def test_singular_value_decay(self):
        # dense SVD oracle; the frozen thresholds come from running it:
        # sigma_50 / sigma_1 = 3.65e-4 and the last singular value is exactly
        # zero (first row and last column of the causal kernel vanish)
        a, _ = heat_problem(100)
        s = np.linalg.svd(a, compute_uv=False)
        assert s[49] / s[0] <= 1e-3
        assert s[-1] == 0.0
        assert s[89] / s[0] <= 1e-4

    def test_minimum_size(self):
        with pytest.raises(InvalidSize):
            heat_problem(9)

    def test_true_profile_shape(self):
        _, x = heat_problem(100)
        assert x.max() == pytest.approx(1.0, abs=0.01)
        assert x[0] < 0.05 and x[-1] < 0.05


class TestShaw:
    def test_symmetric(self):
        a, _ = shaw_problem(80)
        assert np.abs(a - a.T).max() <= 1e-14

    def test_removable_singularity_uses_limit(self):
        # u vanishes where sin(th_i) = -sin(th_j): the anti-diagonal
        n = 80
        a, _ = shaw_problem(n)
        theta = (np.arange(1, n + 1) - 0.5) * math.pi / n - math.pi / 2.0
        for i in range(0, n, 7):
            j = n - 1 - i
            expected = (math.cos(theta[i]) + math.cos(theta[j])) ** 2 * math.pi / n
            assert a[i, j] == pytest.approx(expected, rel=1e-12)

    def test_singular_value_decay(self):
        a, _ = shaw_problem(100)
        s = np.linalg.svd(a, compute_uv=False)
        assert s[19] / s[0] <= 1e-12

    def test_even_size_required(self):
        with pytest.raises(InvalidSize):
            shaw_problem(13)

    def test_true_profile_values(self):
        n = 100
        _, x = shaw_problem(n)
        theta = (np.arange(1, n + 1) - 0.5) * math.pi / n - math.pi / 2.0
        expected = 2.0 * np.exp(-6.0 * (theta - 0.8) ** 2) + np.exp(-2.0 * (theta + 0.5) ** 2)
        np.testing.assert_allclose(x, expected, rtol=1e-15)


class TestBlur:
    def test_identity_blur(self):
        op, x_true = blur_problem(16, psf_sigma=1.0, psf_radius=0)
        np.testing.assert_array_equal(op.matvec(x_true), x_true)

    def test_intensity_preserved(self):
        op, x_true = blur_problem(32)
        blurred = op.matvec(x_true)
        assert abs(blurred.sum() - x_true.sum()) <= 0.02 * x_true.sum()

    def test_adjointness(self):
        op, _ = blur_problem(32)
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.standard_normal(op.shape[1])
            y = rng.standard_normal(op.shape[0])
            assert abs(op.matvec(x) @ y - x @ op.rmatvec(y)) <= 1e-12 * np.linalg.norm(
                x
            ) * np.linalg.norm(y)

    def test_minimum_side(self):
        with pytest.raises(InvalidSize):
            blur_problem(15)

    def test_phantom_is_piecewise_constant(self):
        _, x_true = blur_problem(32)
        assert set(np.unique(x_true)) == {0.0, 0.7, 1.0}


class TestAddNoise:
    @pytest.mark.parametrize("kind", ["white", "diagonal-nonwhite"])
    @pytest.mark.parametrize("seed", [0, 1, 12345])
    def test_level_exact(self, kind, seed):
        rng = np.random.default_rng(99)
        b_true = rng.standard_normal(300)
        b, _ = add_noise(b_true, NoiseSpec(level=3e-2, kind=kind, seed=seed))
        level = np.linalg.norm(b - b_true) / np.linalg.norm(b_true)
        assert level == pytest.approx(3e-2, rel=1e-14)

    def test_white_precision_is_scalar(self):
        b_true = np.ones(50)
        _, m_inv = add_noise(b_true, NoiseSpec(level=1e-2, seed=3))
        diag = np.diag(m_inv.to_dense())
        assert np.ptp(diag) == 0.0

    def test_whitened_norm_concentrates(self):
        # chi-square oracle: eps' inv(M) eps is a chi-square with m degrees
        # of freedom, so it stays within 3 sqrt(2 m) of m
        m = 2000
        rng = np.random.default_rng(7)
        b_true = rng.standard_normal(m)
        for seed in range(20):
            b, m_inv = add_noise(
                b_true, NoiseSpec(level=5e-2, kind="diagonal-nonwhite", seed=seed)
            )
            eps = b - b_true
            whitened_sq = float(eps @ m_inv.matvec(eps))
            assert abs(whitened_sq - m) <= 3.0 * math.sqrt(2.0 * m)

    def test_zero_signal(self):
        with pytest.raises(ZeroSignal):
            add_noise(np.zeros(10), NoiseSpec(level=1e-2))


class TestCheckAssumption:
    def _instance(self, a, b, tau=1.001):
        m, n = a.shape
        return ProblemInstance(
            a=dense_operator(a),
            m_inv=diagonal_spd(np.ones(m)),
            n_cov=diagonal_spd(np.ones(n)),
            b=b,
            tau=tau,
        )

    def test_zero_data_fails_right(self):
        rng = np.random.default_rng(0)
        p = self._instance(rng.standard_normal((10, 6)), np.zeros(10))
        assert check_assumption(p) == "fails-right"

    def test_consistent_large_data_holds(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((10, 6))
        x = rng.standard_normal(6)
        b = a @ x
        b *= 10.0 / np.linalg.norm(b)  # ||b||^2 = 100 > tau m = 10.01
        assert check_assumption(self._instance(a, b)) == "holds"

    def test_consistent_small_data_fails_right(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((10, 6))
        b = a @ rng.standard_normal(6)
        b *= 1.0 / np.linalg.norm(b)  # ||b||^2 = 1 < tau m
        assert check_assumption(self._instance(a, b)) == "fails-right"

    def test_dominant_noise_fails_left(self):
        # data orthogonal to the range: the misfit cannot drop below ||b||
        a = np.zeros((10, 6))
        a[:5, :] = np.random.default_rng(3).standard_normal((5, 6))
        b = np.zeros(10)
        b[5:] = 10.0  # ||b||^2 = 500 but min misfit = 500 >= tau m
        assert check_assumption(self._instance(a, b)) == "fails-left"

    def test_heat_with_default_noise_holds(self):
        p = make_problem("heat", n=200, noise=NoiseSpec(level=5e-2, seed=7))
        assert check_assumption(p) == "holds"


class TestMakeProblem:
    def test_selection_by_name(self):
        for name in ("heat", "shaw"):
            p = make_problem(name, n=60, noise=NoiseSpec(level=1e-2, seed=0))
            assert p.name == name
            assert p.a.shape == (60, 60)
        p = make_problem("blur", side=16, noise=NoiseSpec(level=1e-2, seed=0))
        assert p.a.shape == (256, 256)

    def test_unknown_name(self):
        with pytest.raises(kr.errors.InvalidParam):
            make_problem("tomography")

    def test_kernel_override(self):
        p = make_problem(
            "heat", n=60, noise=NoiseSpec(level=1e-2, seed=0),
            kernel=KernelSpec("matern", 0.5, nu=1.5),
        )
        assert p.n_cov.to_dense() is not None

    def test_noise_vector_recorded(self):
        p = make_problem("heat", n=60, noise=NoiseSpec(level=1e-2, seed=0))
        level = np.linalg.norm(p.b - p.b_true) / np.linalg.norm(p.b_true)
        assert level == pytest.approx(1e-2, rel=1e-14)
