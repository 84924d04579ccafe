import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from wvctx import qmath
from wvctx.qmath import (
    DomainError,
    ValidationError,
    as_density,
    as_projector,
    erf_family,
    gaussian_overlap,
    gaussian_overlap_interval,
    herm_eigendecomp,
    is_anomalous,
    kd_quasiprob,
    ket_projector,
    weak_value,
    weak_value_observable,
)

from conftest import random_density, random_projector, random_pure


def pointer(x, s):
    return (math.pi * s * s) ** -0.25 * math.exp(-x * x / (2 * s * s))


class TestValidation:
    def test_density_rejects_bad_trace(self):
        with pytest.raises(ValidationError):
            as_density(np.eye(2))

    def test_density_rejects_negative(self):
        with pytest.raises(ValidationError):
            as_density([[1.5, 0], [0, -0.5]])

    def test_non_hermitian(self):
        with pytest.raises(ValidationError):
            qmath.as_hermitian([[0, 1], [0, 0]])

    def test_projector(self):
        as_projector(ket_projector([1, 1j]))
        with pytest.raises(ValidationError):
            as_projector(0.5 * np.eye(2))

    def test_shape(self):
        with pytest.raises(ValidationError):
            as_density(np.ones((2, 3)))

    def test_span_projector(self):
        P = qmath.span_projector([[1, 0, 0], [1, 1, 0]])
        np.testing.assert_allclose(P, np.diag([1, 1, 0]), atol=1e-12)


class TestWeakValues:
    def test_anomalous_value(self, anomalous):
        rho, E, Pi = anomalous
        np.testing.assert_allclose(weak_value(rho, E, Pi), -0.5, atol=1e-12)
        np.testing.assert_allclose(kd_quasiprob(rho, E, Pi), -0.1, atol=1e-12)
        assert is_anomalous(weak_value(rho, E, Pi), [0, 1])

    def test_orthogonal_raises(self):
        with pytest.raises(DomainError):
            weak_value(ket_projector([1, 0]), ket_projector([1, 1]), ket_projector([0, 1]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            kd_quasiprob(np.eye(2) / 2, np.eye(3), np.eye(2))

    def test_commuting_is_not_anomalous(self, rng):
        E = np.diag([1.0, 0, 0])
        F = np.diag([1.0, 1, 0])
        for _ in range(20):
            rho = np.diag(rng.dirichlet(np.ones(3))).astype(complex)
            wv = weak_value(rho, E, F)
            assert not is_anomalous(wv, [0, 1])

    def test_complex_weak_value(self):
        rho = ket_projector([1, 1])
        F = ket_projector([1, 1j])
        E = ket_projector([0, 1])
        wv = weak_value(rho, E, F)
        assert abs(wv.imag) > 0.1
        assert is_anomalous(wv, [0, 1])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4]))
    def test_complement_identity(self, seed, d):
        r = np.random.default_rng(seed)
        rho = random_density(r, d)
        E = random_projector(r, d)
        F = random_projector(r, d)
        if np.trace(F @ rho).real < 1e-6:
            return
        total = weak_value(rho, E, F) + weak_value(rho, np.eye(d) - E, F)
        np.testing.assert_allclose(total, 1.0, atol=1e-9)

    def test_observable_linearity(self, rng):
        for _ in range(10):
            rho = random_density(rng, 3)
            F = random_projector(rng, 3)
            O = rng.normal(size=(3, 3))
            O = O + O.T
            res = weak_value_observable(rho, O, F)
            direct = np.trace(F @ O @ rho) / np.trace(F @ rho).real
            np.testing.assert_allclose(res.value, direct, atol=1e-9)

    def test_kd_real_part_lower_bound(self, rng):
        worst = min(
            kd_quasiprob(random_pure(rng, 2), random_projector(rng, 2), random_projector(rng, 2)).real
            for _ in range(2000)
        )
        assert worst >= -1 / 8 - 1e-12


class TestSpectral:
    def test_reconstruct(self, rng):
        for d in (2, 3, 5):
            m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            h = m + m.conj().T
            dec = herm_eigendecomp(h)
            np.testing.assert_allclose(dec.reconstruct(), h, atol=1e-10)

    def test_degenerate_grouping(self):
        dec = herm_eigendecomp(np.diag([2.0, 2.0, -1.0]))
        assert dec.eigenvalues == pytest.approx((-1.0, 2.0))
        np.testing.assert_allclose(dec.projectors[1], np.diag([1, 1, 0]), atol=1e-12)
        assert sum(np.trace(p).real for p in dec.projectors) == pytest.approx(3)


def _erfi_series(t, terms=60):
    return 2 / math.sqrt(math.pi) * sum(t ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1)) for n in range(terms))


class TestErrorFunctions:
    @pytest.mark.parametrize("t", [0.0, 0.01, 0.3, 1.0, 2.5])
    def test_erfi_series(self, t):
        assert erf_family(t)["erfi"] == pytest.approx(_erfi_series(t), rel=1e-12, abs=1e-15)

    @pytest.mark.parametrize("t", [-2.0, -0.2, 0.0, 0.7, 3.0])
    def test_erf_quadrature(self, t):
        val, _ = integrate.quad(lambda u: 2 / math.sqrt(math.pi) * math.exp(-u * u), 0, t)
        fam = erf_family(t)
        assert fam["erf"] == pytest.approx(val, abs=1e-13)
        assert fam["erfc"] == pytest.approx(1 - val, abs=1e-13)

    def test_erfc_deep_tail_not_cancelled(self):
        assert erf_family(6.0)["erfc"] == pytest.approx(2.1519736712498913e-17, rel=1e-10)

    def test_nonfinite(self):
        with pytest.raises(ValueError):
            erf_family(float("nan"))


class TestGaussianOverlap:
    @pytest.mark.parametrize("a,b", [(1, 1), (0, 0), (1, 0)])
    @pytest.mark.parametrize("s", [0.4, 1.5, 10.0])
    @pytest.mark.parametrize("upper", [-1.0, 0.0, 0.5, 2.0])
    def test_quadrature(self, a, b, s, upper):
        val, _ = integrate.quad(lambda x: pointer(x - a, s) * pointer(x - b, s), -np.inf, upper, epsabs=1e-14)
        assert gaussian_overlap(a, b, s, upper) == pytest.approx(val, abs=1e-11)

    def test_full_line_normalised(self):
        assert gaussian_overlap(0.3, 0.3, 2.0) == 1.0
        assert gaussian_overlap(0, 0, 1.0, -math.inf) == 0.0

    @pytest.mark.parametrize("lo,hi", [(-math.inf, -3.0), (-1.0, 0.0), (0.2, 0.4), (5.0, math.inf), (-2, 3)])
    def test_interval_additivity(self, lo, hi):
        s = 0.7
        direct, _ = integrate.quad(lambda x: pointer(x - 1, s) * pointer(x, s), lo, hi, epsabs=1e-14)
        assert gaussian_overlap_interval(1, 0, s, lo, hi) == pytest.approx(direct, abs=1e-12)

    def test_far_tail_relative_accuracy(self):
        # difference of two erfc values would lose everything here
        val = gaussian_overlap_interval(0, 0, 1.0, 8.0, 9.0)
        assert val == pytest.approx(0.5 * (math.erfc(8.0) - math.erfc(9.0)), rel=1e-12)
        assert val > 0

    def test_bad_spread(self):
        with pytest.raises(ValueError):
            gaussian_overlap(0, 0, 0.0)
