import json

import numpy as np
import pytest

from wvctx.onticmodels import (
    OnticModel,
    audit_model,
    build_full_disturbance_model,
    build_minimal_disturbance_model,
    build_psi_complete_model,
    cell_edges,
    extract_operational_data,
    psi_complete_inputs,
)
from wvctx.qmath import DomainError, ValidationError, ket_projector
from wvctx.schemes import dephasing_form, gaussian_position_stats, sigma_preparations, spread_for_disturbance

from conftest import random_density, random_projector

S_ANOMALOUS = spread_for_disturbance(0.05)


@pytest.fixture
def anomalous_data(anomalous):
    rho, E, Pi = anomalous
    return extract_operational_data(rho, E, Pi, S_ANOMALOUS, 64, sigma_preparations(Pi, rho))


@pytest.fixture
def commuting_data():
    P0 = ket_projector([1, 0])
    return extract_operational_data(P0, P0, P0, S_ANOMALOUS, 64)


class TestExtraction:
    def test_edges_include_zero(self):
        edges = cell_edges(1.0, 7)
        assert 0.0 in edges
        assert len(edges) == 8
        with pytest.raises(ValidationError):
            cell_edges(1.0, 1)

    def test_two_bins_match_scheme(self, anomalous):
        rho, E, Pi = anomalous
        data = extract_operational_data(rho, E, Pi, S_ANOMALOUS, 2)
        st = gaussian_position_stats(rho, E, Pi, S_ANOMALOUS)
        assert data.n_cells == 4
        assert data.p_minus == pytest.approx(st.p_minus, abs=1e-12)
        after = np.trace(Pi @ dephasing_form(rho, E, st.p_d)).real
        assert data.joint[:, 1].sum() == pytest.approx(after, abs=1e-12)
        assert data.marginal_y[1] == pytest.approx(st.p_F, abs=1e-12)

    def test_tails_small(self, anomalous_data):
        assert anomalous_data.joint[[0, -1]].sum() < 1e-6

    def test_refinement_consistency(self, anomalous):
        rho, E, Pi = anomalous
        d16 = extract_operational_data(rho, E, Pi, S_ANOMALOUS, 16)
        d32 = extract_operational_data(rho, E, Pi, S_ANOMALOUS, 32)
        assert abs(d16.p_minus - d32.p_minus) < 1e-9
        np.testing.assert_allclose(d16.joint.sum(axis=0), d32.joint.sum(axis=0), atol=1e-9)

    def test_normalisation(self, rng):
        for _ in range(5):
            rho = random_density(rng, 3)
            data = extract_operational_data(rho, random_projector(rng, 3), random_projector(rng, 3), 0.7, 10)
            assert data.joint.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(data.joint >= 0)


class TestMinimalDisturbance:
    def test_anomalous(self, anomalous_data):
        m = build_minimal_disturbance_model(anomalous_data)
        transition = m.instrument.sum(axis=0)
        off = transition.sum(axis=0) - np.diag(transition)
        assert off.max() <= 0.05 + 1e-12
        # lambda = 1 leans towards negative pointer positions
        neg = m.instrument.sum(axis=1)[anomalous_data.negative_cells].sum(axis=0)
        assert neg[1] > 0.5
        rep = audit_model(m, anomalous_data)
        assert rep.reproduces_stats and rep.max_residual < 1e-8
        assert rep.failing == ["condition1"]

    def test_commuting_identity(self, commuting_data):
        m = build_minimal_disturbance_model(commuting_data)
        np.testing.assert_allclose(m.instrument.sum(axis=0), np.eye(2), atol=1e-15)
        rep = audit_model(m, commuting_data)
        assert rep.reproduces_stats and rep.failing == []

    def test_feasibility_on_random_data(self, rng):
        for _ in range(20):
            rho = random_density(rng, 2)
            E = random_projector(rng, 2, 1)
            F = random_projector(rng, 2, 1)
            data = extract_operational_data(rho, E, F, rng.uniform(0.3, 3.0), 12)
            m = build_minimal_disturbance_model(data)
            assert audit_model(m, data).reproduces_stats
            assert audit_model(m, data).condition2_holds

    def test_rate_too_large(self, anomalous_data):
        from dataclasses import replace

        with pytest.raises(DomainError):
            build_minimal_disturbance_model(replace(anomalous_data, p_d=0.001))


class TestFullDisturbance:
    def test_anomalous(self, anomalous_data):
        m = build_full_disturbance_model(anomalous_data)
        np.testing.assert_allclose(m.instrument[:, :, 0], m.instrument[:, :, 1])
        transition = m.instrument.sum(axis=0)
        assert transition[0, 1] > 0.7
        rep = audit_model(m, anomalous_data)
        assert rep.max_residual < 1e-8
        assert rep.failing == ["condition2"]

    def test_commuting(self, commuting_data):
        rep = audit_model(build_full_disturbance_model(commuting_data), commuting_data)
        assert rep.failing == []


class TestPsiComplete:
    def test_anomalous(self, anomalous_data):
        m = build_psi_complete_model(*psi_complete_inputs(anomalous_data))
        rep = audit_model(m, anomalous_data)
        assert rep.reproduces_stats
        assert rep.condition1_holds and rep.condition2_holds
        assert rep.prep_nc_holds is False

    def test_requires_mf(self):
        with pytest.raises(ValidationError):
            build_psi_complete_model([("a", np.eye(2) / 2)], [("M", [np.eye(2)])])

    def test_duplicate_labels(self):
        with pytest.raises(ValidationError):
            build_psi_complete_model([("a", np.eye(2) / 2), ("a", np.eye(2) / 2)], [("M_F", [np.eye(2)])])


class TestModelObject:
    def test_rejects_unnormalised(self):
        with pytest.raises(ValidationError):
            OnticModel("x", (0, 1), {"P_star": np.array([0.5, 0.6])}, np.eye(2))

    def test_json_roundtrip_values(self, anomalous_data):
        m = build_minimal_disturbance_model(anomalous_data)
        blob = json.loads(json.dumps(m.to_json()))
        inst = np.array(blob["instrument"], dtype=float)
        np.testing.assert_array_equal(inst, m.instrument)
        assert isinstance(blob["preparations"]["P_star"][0], str)

    def test_cell_mismatch(self, anomalous, anomalous_data):
        rho, E, Pi = anomalous
        other = extract_operational_data(rho, E, Pi, S_ANOMALOUS, 8)
        with pytest.raises(ValidationError):
            audit_model(build_full_disturbance_model(other), anomalous_data)
