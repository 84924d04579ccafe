import math

import numpy as np
import pytest
from scipy import integrate

from wvctx import schemes
from wvctx.qmath import DomainError, ValidationError, ket_projector
from wvctx.schemes import (
    SchemeSpec,
    c_s_value,
    coarse_grained_povm,
    coarse_grained_stats,
    dephasing_form,
    disturbance_pd,
    gaussian_momentum_stats,
    gaussian_position_stats,
    marginal_channel,
    momentum_alpha,
    noisy_postselection,
    qubit_pointer_kraus,
    qubit_pointer_stats,
    run_scheme,
    sigma_preparations,
    spread_for_disturbance,
)

from conftest import random_density, random_projector


def pointer(x, s):
    return (math.pi * s * s) ** -0.25 * math.exp(-x * x / (2 * s * s))


def position_density(rho, E, F, s, x):
    Ec = np.eye(E.shape[0]) - E
    N = pointer(x - 1, s) * E + pointer(x, s) * Ec
    return np.trace(F @ N @ rho @ N.conj().T).real


def momentum_density(rho, E, F, s, p):
    # pointer momentum amplitude; a unit position shift multiplies it by exp(-ip)
    w = s / math.sqrt(math.pi) * math.exp(-(p * s) ** 2)
    Ec = np.eye(E.shape[0]) - E
    N = np.exp(-1j * p) * E + Ec
    return w * np.trace(F @ N @ rho @ N.conj().T).real


class TestDisturbance:
    def test_matches_channel_overlap(self):
        for s in (0.3, 1.0, 8.10336):
            overlap, _ = integrate.quad(lambda x: pointer(x - 1, s) * pointer(x, s), -np.inf, np.inf)
            assert disturbance_pd(s) == pytest.approx((1 - overlap) / 2, abs=1e-12)

    def test_inverse(self):
        for pd in (1e-6, 0.0019, 0.05, 0.3):
            assert disturbance_pd(spread_for_disturbance(pd)) == pytest.approx(pd, rel=1e-12)

    def test_small_pd_no_cancellation(self):
        s = 1e4
        assert disturbance_pd(s) == pytest.approx(1 / (8 * s * s), rel=1e-8)

    def test_dephasing_form(self, rng):
        for _ in range(5):
            rho = random_density(rng, 3)
            E = random_projector(rng, 3)
            s = rng.uniform(0.2, 3)
            np.testing.assert_allclose(
                marginal_channel(rho, E, "gaussian_position", s),
                dephasing_form(rho, E, disturbance_pd(s)),
                atol=1e-12,
            )


class TestGaussianPosition:
    @pytest.mark.parametrize("s", [0.5, 1.540391, 4.0])
    def test_quadrature_oracle(self, rng, s):
        for _ in range(3):
            rho = random_density(rng, 3)
            E = random_projector(rng, 3)
            F = random_projector(rng, 3)
            st = gaussian_position_stats(rho, E, F, s)
            val, _ = integrate.quad(lambda x: position_density(rho, E, F, s, x), -np.inf, 0, epsabs=1e-13)
            assert st.p_minus == pytest.approx(val, abs=1e-10)

    def test_anomalous_numbers(self, anomalous):
        rho, E, Pi = anomalous
        st = gaussian_position_stats(rho, E, Pi, spread_for_disturbance(0.05))
        assert st.p_F == pytest.approx(0.2, abs=1e-12)
        assert st.p_d == pytest.approx(0.05, abs=1e-12)
        assert st.kd_numerator.real == pytest.approx(-0.1, abs=1e-12)
        assert st.p_minus == pytest.approx(0.1467269450792755, abs=1e-12)

    def test_orthogonal_postselection(self):
        with pytest.raises(DomainError):
            gaussian_position_stats(ket_projector([1, 0]), ket_projector([1, 1]), ket_projector([0, 1]), 1.0)

    def test_leading_order(self, anomalous):
        rho, E, Pi = anomalous
        errs = []
        for s in (10, 20, 40, 80):
            st = gaussian_position_stats(rho, E, Pi, s)
            errs.append(abs(st.p_minus - st.leading_order_p_minus) * s)
        assert all(a > b for a, b in zip(errs, errs[1:]))


class TestMomentum:
    def test_alpha_via_dawson(self):
        from scipy.special import dawsn

        for s in (0.3, 1.0, 40.0):
            z = 1 / (2 * s)
            expected = math.exp(-z * z) + 2j / math.sqrt(math.pi) * dawsn(z)
            assert momentum_alpha(s) == pytest.approx(expected, abs=1e-13)

    @pytest.mark.parametrize("s", [0.6, 2.0, 40.0])
    def test_quadrature_oracle(self, rng, s):
        for _ in range(3):
            rho = random_density(rng, 2)
            E = random_projector(rng, 2, 1)
            F = random_projector(rng, 2, 1)
            st = gaussian_momentum_stats(rho, E, F, s)
            val, _ = integrate.quad(lambda p: momentum_density(rho, E, F, s, p), -np.inf, 0, epsabs=1e-13)
            assert st.p_minus == pytest.approx(val, abs=1e-10)

    def test_real_matrices_give_half(self, rng):
        # all-real operators: Im KD = 0 and the cross term is real
        for _ in range(10):
            v = rng.normal(size=2)
            rho = ket_projector(v)
            F = ket_projector(rng.normal(size=2))
            E = ket_projector([0, 1])
            for s in (1.0, 10.0, 40.0):
                st = gaussian_momentum_stats(rho, E, F, s)
                assert st.p_minus <= st.p_F / 2 + (1 - st.p_F) * st.p_d + 1e-12


class TestQubitPointer:
    def test_kraus_completeness(self, rng):
        E = random_projector(rng, 3)
        for eps in (0.01, 0.3, math.pi / 4):
            a, b = qubit_pointer_kraus(E, eps)
            np.testing.assert_allclose(a.conj().T @ a + b.conj().T @ b, np.eye(3), atol=1e-12)

    def test_pm_pd(self, anomalous):
        rho, E, Pi = anomalous
        eps = 0.05
        st = qubit_pointer_stats(rho, E, Pi, eps)
        assert st.p_m == math.sin(2 * eps)
        assert st.p_d == math.sin(eps) ** 2

    def test_channel_is_dephasing(self, rng):
        rho = random_density(rng, 2)
        E = ket_projector([0, 1])
        eps = 0.2
        np.testing.assert_allclose(
            marginal_channel(rho, E, "qubit_pointer", eps), dephasing_form(rho, E, math.sin(eps) ** 2), atol=1e-12
        )

    def test_leading_order(self, anomalous):
        rho, E, Pi = anomalous
        for eps in (0.01, 0.05, 0.1):
            st = qubit_pointer_stats(rho, E, Pi, eps)
            assert abs(st.p_minus - st.leading_order_p_minus) <= 5 * eps**2

    def test_eps_range(self, anomalous):
        with pytest.raises(ValidationError):
            qubit_pointer_stats(*anomalous, 1.0)


class TestCoarseGrained:
    def test_povm(self, rng):
        E = random_projector(rng, 3)
        minus, plus = coarse_grained_povm(E, 0.8)
        np.testing.assert_allclose(minus + plus, np.eye(3), atol=1e-12)
        assert np.linalg.eigvalsh(minus).min() >= 0

    def test_mixture_decomposition(self):
        # binned effect = p_m * sharp + (1 - p_m) * fair coin
        E = ket_projector([0, 1])
        s = 0.9
        pm = schemes.coarse_grained_pm(s)
        minus, _ = coarse_grained_povm(E, s)
        np.testing.assert_allclose(minus, pm * (np.eye(2) - E) + (1 - pm) * 0.5 * np.eye(2), atol=1e-12)

    def test_quadrature_oracle(self, rng):
        s = 1.3
        rho = random_density(rng, 2)
        E = random_projector(rng, 2, 1)
        F = random_projector(rng, 2, 1)
        st = coarse_grained_stats(rho, E, F, s)
        val, _ = integrate.quad(lambda x: position_density(rho, E, F, s, x), -np.inf, 0.5, epsabs=1e-13)
        assert st.p_minus == pytest.approx(val, abs=1e-10)

    def test_leading_order_slope(self, anomalous):
        rho, E, Pi = anomalous
        errs = [abs(coarse_grained_stats(rho, E, Pi, s).p_minus - coarse_grained_stats(rho, E, Pi, s).leading_order_p_minus) * s for s in (10, 20, 40, 80)]
        assert all(a > b for a, b in zip(errs, errs[1:]))


class TestNoisyPostselection:
    def test_linear_in_effect(self, anomalous):
        rho, E, Pi = anomalous
        eps = 0.1
        post = noisy_postselection(Pi, eps)
        noisy = gaussian_position_stats(rho, E, post, 2.0)
        clean = gaussian_position_stats(rho, E, Pi, 2.0)
        full = gaussian_position_stats(rho, E, np.eye(2), 2.0)
        assert noisy.p_minus == pytest.approx((1 - 2 * eps) * clean.p_minus + eps * full.p_minus, abs=1e-12)

    def test_effects_complete(self):
        post = noisy_postselection(ket_projector([1, 1]), 0.2)
        np.testing.assert_allclose(post.effect_pass + post.effect_fail, np.eye(2), atol=1e-15)

    def test_eps_range(self):
        with pytest.raises(ValidationError):
            noisy_postselection(ket_projector([1, 0]), 0.5)


class TestPreparations:
    @pytest.mark.parametrize("d,rank", [(2, 1), (3, 1), (3, 2), (4, 2)])
    def test_equivalence_and_cs(self, rng, d, rank):
        Pi = random_projector(rng, d, rank)
        ens = sigma_preparations(Pi, random_density(rng, d))
        assert ens.residual() < 1e-12
        for eps in (0.0, 0.1, 0.3):
            assert c_s_value(ens, noisy_postselection(Pi, eps)) == pytest.approx(1 - eps, abs=1e-12)

    def test_trivial_projector_rejected(self):
        with pytest.raises(ValidationError):
            sigma_preparations(np.eye(2), np.eye(2) / 2)


class TestSchemeSpec:
    def test_dispatch(self, anomalous):
        rho, E, Pi = anomalous
        for spec in (
            SchemeSpec("gaussian_position", s=2.0),
            SchemeSpec("gaussian_momentum", s=2.0),
            SchemeSpec("coarse_grained", s=2.0),
            SchemeSpec("qubit_pointer", epsilon_pointer=0.1),
        ):
            assert run_scheme(spec, rho, E, Pi).kind == spec.kind

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(kind="nope", s=1.0),
            dict(kind="gaussian_position"),
            dict(kind="gaussian_position", s=-1.0),
            dict(kind="qubit_pointer", s=1.0),
            dict(kind="qubit_pointer", epsilon_pointer=0.1, noise_eps=0.6),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            SchemeSpec(**kwargs)
