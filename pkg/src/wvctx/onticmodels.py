"""Explicit noncontextual-looking ontic models for the Gaussian position scheme.

Each construction reproduces the quantum statistics exactly but breaks one of
the operational equivalences the bounds rely on. :func:`audit_model` reports
which one.

Pointer positions are discretised into cells whose probabilities come from
closed-form Gaussian overlaps, so nothing here is sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .qmath import DomainError, ValidationError, gaussian_overlap_interval
from .schemes import (
    PreparationEnsemble,
    _interference_terms,
    _prepare,
    disturbance_pd,
    noisy_postselection,
    PostselectionModel,
)

NORMALIZATION_TOL = 1e-9
AUDIT_TOL = 1e-9


@dataclass(frozen=True)
class OperationalData:
    """Discretised joint statistics ``p(x-cell, y | P_star, M_W, M_F)``.

    ``y = 1`` is a passed postselection. Cells are ``(-inf, e_0]``, the ``B``
    intervals between consecutive ``edges`` and ``[e_B, inf)``.
    """

    edges: np.ndarray
    joint: np.ndarray
    marginal_y: np.ndarray
    p_d: float
    p_tilde: float
    s: float
    equivalence: Optional[tuple[dict, dict]] = None
    states: dict = field(default_factory=dict)
    effects: dict = field(default_factory=dict)

    def __post_init__(self):
        if abs(self.joint.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValidationError("joint table does not sum to 1")
        if abs(self.marginal_y.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValidationError("marginal_y does not sum to 1")

    @property
    def n_cells(self) -> int:
        return self.joint.shape[0]

    @property
    def cells(self) -> list[tuple[float, float]]:
        bounds = [-math.inf, *self.edges.tolist(), math.inf]
        return list(zip(bounds[:-1], bounds[1:]))

    @property
    def negative_cells(self) -> np.ndarray:
        return np.array([hi <= 0.0 for _, hi in self.cells])

    @property
    def p_minus(self) -> float:
        return float(self.joint[self.negative_cells, 1].sum())


def cell_edges(s: float, bins: int) -> np.ndarray:
    """Uniform bins on ``[-4s, 0]`` and ``[0, 1+4s]`` so that ``x = 0`` is an edge."""
    if bins < 2:
        raise ValidationError("need at least two bins")
    left = bins // 2
    right = bins - left
    return np.concatenate(
        [np.linspace(-4.0 * s, 0.0, left + 1), np.linspace(0.0, 1.0 + 4.0 * s, right + 1)[1:]]
    )


def _cell_effect_weights(cells, s):
    """Per-cell overlaps for the ``E``, ``E_perp`` and interference terms."""
    ov = np.array(
        [
            [
                gaussian_overlap_interval(1.0, 1.0, s, lo, hi),
                gaussian_overlap_interval(0.0, 0.0, s, lo, hi),
                gaussian_overlap_interval(1.0, 0.0, s, lo, hi),
            ]
            for lo, hi in cells
        ]
    )
    return ov


def extract_operational_data(
    rho,
    E,
    post,
    s: float,
    bins: int = 64,
    ensemble: Optional[PreparationEnsemble] = None,
) -> OperationalData:
    """Exact cell-integrated statistics of the Gaussian position scheme.

    ``post`` is a projector or a :class:`PostselectionModel`. Passing an
    ``ensemble`` records its preparation equivalence for the preparation
    noncontextuality audit.
    """
    if not s > 0:
        raise ValidationError("s must be positive")
    if not isinstance(post, PostselectionModel):
        post = noisy_postselection(post, 0.0)
    edges = cell_edges(s, bins)
    bounds = [-math.inf, *edges.tolist(), math.inf]
    cells = list(zip(bounds[:-1], bounds[1:]))
    ov = _cell_effect_weights(cells, s)

    rho_v, E_v, Ec, F, p_F = _prepare(rho, E, post.effect_pass)
    joint = np.zeros((len(cells), 2))
    for y, eff in ((1, post.effect_pass), (0, post.effect_fail)):
        t_ee, t_cc, t_ce = _interference_terms(rho_v, E_v, Ec, eff)
        joint[:, y] = ov[:, 0] * t_ee + ov[:, 1] * t_cc + ov[:, 2] * 2.0 * t_ce.real
    joint = np.clip(joint, 0.0, None)
    marginal = np.array([1.0 - p_F, p_F])

    states = {"P_star": rho_v}
    equivalence = None
    if ensemble is not None:
        states.update(S0=ensemble.sigma0, S1=ensemble.sigma1, P_perp=ensemble.rho_perp)
        equivalence = (
            {"S0": ensemble.q0, "S1": ensemble.q1},
            {"P_star": ensemble.q_star, "P_perp": 1.0 - ensemble.q_star},
        )
    effects = {
        "E": E_v,
        "F_pass": post.effect_pass,
        "F_fail": post.effect_fail,
        "cell_overlaps": ov,
    }
    return OperationalData(
        edges=edges,
        joint=joint,
        marginal_y=marginal,
        p_d=disturbance_pd(s),
        p_tilde=0.5,
        s=float(s),
        equivalence=equivalence,
        states=states,
        effects=effects,
    )


@dataclass(frozen=True)
class OnticModel:
    """Finite ontic model.

    ``instrument[x, l2, l1]`` is ``p_{M_W}(x, lambda'=l2 | lambda=l1)`` and
    ``response_F[l, y]`` is ``p_{M_F}(y | lambda=l)``. Models without a
    state-update rule (the preparation-indexed one) leave ``instrument`` unset
    and carry measurement responses in ``responses`` instead.
    """

    name: str
    lambdas: tuple
    preparations: dict
    response_F: np.ndarray
    instrument: Optional[np.ndarray] = None
    responses: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.lambdas)
        for label, dist in self.preparations.items():
            _check_distribution(dist, f"preparation {label}")
            if dist.shape != (n,):
                raise ValidationError(f"preparation {label} has the wrong length")
        for row in self.response_F:
            _check_distribution(row, "response_F row")
        if self.instrument is not None:
            if self.instrument.shape[1:] != (n, n):
                raise ValidationError("instrument shape does not match lambdas")
            for l1 in range(n):
                _check_distribution(self.instrument[:, :, l1], f"instrument column {l1}")

    @property
    def prep(self) -> np.ndarray:
        return self.preparations["P_star"]

    def predicted_joint(self) -> np.ndarray:
        if self.instrument is None:
            raise ValidationError(f"model {self.name!r} has no instrument")
        # sum over lambda, lambda'
        return np.einsum("l,xml,my->xy", self.prep, self.instrument, self.response_F)

    def to_json(self) -> dict:
        def enc(a):
            return np.vectorize(lambda v: format(float(v), ".17g"), otypes=[object])(np.asarray(a)).tolist()

        out = {
            "name": self.name,
            "lambdas": [str(l) for l in self.lambdas],
            "preparations": {k: enc(v) for k, v in self.preparations.items()},
            "response_F": enc(self.response_F),
            "responses": {k: enc(v) for k, v in self.responses.items()},
        }
        if self.instrument is not None:
            out["instrument"] = enc(self.instrument)
        return out


def _check_distribution(p, what: str) -> None:
    p = np.asarray(p)
    if np.any(p < -NORMALIZATION_TOL):
        raise ValidationError(f"{what} has negative entries")
    if abs(p.sum() - 1.0) > NORMALIZATION_TOL:
        raise ValidationError(f"{what} is not normalised")


def _conditionals(joint: np.ndarray) -> np.ndarray:
    """``p(x | y)`` per column; a zero-weight column falls back to the x-marginal."""
    m = joint.sum(axis=0)
    x_marg = joint.sum(axis=1)
    out = np.empty_like(joint)
    for y in range(joint.shape[1]):
        out[:, y] = joint[:, y] / m[y] if m[y] > 0 else x_marg / x_marg.sum()
    return out


def build_minimal_disturbance_model(data: OperationalData) -> OnticModel:
    """Ontic state = postselection outcome; the measurement flips it as little as possible.

    Raises
    ------
    DomainError
        If the required flip rate exceeds ``p_d`` or divides by a zero weight.
    """
    joint = data.joint
    p = data.marginal_y
    after = joint.sum(axis=0)
    eps = float(after[1] - p[1])
    perm = [0, 1]
    if eps < 0:
        perm = [1, 0]
        eps = -eps
    src, dst = perm  # mass flows from label ``src`` to label ``dst``
    D = np.eye(2)
    if eps > 0:
        if p[src] <= 0:
            raise DomainError("cannot disturb a label that is never prepared")
        rate = eps / p[src]
        if rate > data.p_d + AUDIT_TOL:
            raise DomainError(f"required flip rate {rate!r} exceeds p_d = {data.p_d!r}")
        D[src, src] -= rate
        D[src, dst] += rate
    cond = _conditionals(joint)
    # D[l, l'] = D(l' | l)
    instrument = np.einsum("xm,lm->xml", cond, D)
    return OnticModel(
        name="minimal_disturbance",
        lambdas=(0, 1),
        preparations={"P_star": p.copy()},
        response_F=np.eye(2),
        instrument=instrument,
    )


def build_full_disturbance_model(data: OperationalData) -> OnticModel:
    """The measurement resamples the ontic state from the joint table, ignoring its input."""
    instrument = np.repeat(data.joint[:, :, None], 2, axis=2)
    return OnticModel(
        name="full_disturbance",
        lambdas=(0, 1),
        preparations={"P_star": data.marginal_y.copy()},
        response_F=np.eye(2),
        instrument=instrument,
    )


def psi_complete_inputs(data: OperationalData):
    """Preparations and measurements for :func:`build_psi_complete_model` from recorded data."""
    ov = data.effects["cell_overlaps"]
    E = data.effects["E"]
    Ec = np.eye(E.shape[0]) - E
    F_pass, F_fail = data.effects["F_pass"], data.effects["F_fail"]
    cell_effects = [ov[i, 0] * E + ov[i, 1] * Ec for i in range(ov.shape[0])]
    decay = math.exp(-1.0 / (4.0 * data.s**2))

    def unread(F):
        return E @ F @ E + Ec @ F @ Ec + decay * (E @ F @ Ec + Ec @ F @ E)

    measurements = [
        ("M_F", [F_fail, F_pass]),
        ("M_W", cell_effects),
        ("M_seq", [unread(F_fail), unread(F_pass)]),
    ]
    return list(data.states.items()), measurements


def build_psi_complete_model(preparations: Sequence, measurements: Sequence) -> OnticModel:
    """One ontic state per listed preparation; responses are Born probabilities.

    ``preparations`` is a list of ``(label, density matrix)``; ``measurements``
    a list of ``(name, effects)`` and must include ``"M_F"`` with outcome order
    ``(fail, pass)``.
    """
    labels = tuple(label for label, _ in preparations)
    if len(set(labels)) != len(labels):
        raise ValidationError("preparation labels must be distinct")
    n = len(labels)
    preps = {label: np.eye(n)[i] for i, label in enumerate(labels)}
    responses = {}
    for name, effects in measurements:
        table = np.array(
            [[float(np.trace(np.asarray(e) @ rho).real) for e in effects] for _, rho in preparations]
        )
        responses[name] = np.clip(table, 0.0, None)
    if "M_F" not in responses:
        raise ValidationError("measurement list must include M_F")
    return OnticModel(
        name="psi_complete",
        lambdas=labels,
        preparations=preps,
        response_F=responses["M_F"],
        responses=responses,
    )


@dataclass(frozen=True)
class AuditReport:
    model: str
    reproduces_stats: bool
    max_residual: float
    condition1_holds: bool
    condition2_holds: bool
    prep_nc_holds: Optional[bool]
    details: dict = field(default_factory=dict)

    @property
    def failing(self) -> list[str]:
        out = []
        if not self.condition1_holds:
            out.append("condition1")
        if not self.condition2_holds:
            out.append("condition2")
        if self.prep_nc_holds is False:
            out.append("preparation_nc")
        return out


def _prep_nc(model: OnticModel, data: OperationalData) -> Optional[bool]:
    if data.equivalence is None:
        return None
    sides = []
    for side in data.equivalence:
        if not all(label in model.preparations for label in side):
            return None
        sides.append(sum(w * model.preparations[label] for label, w in side.items()))
    return bool(np.max(np.abs(sides[0] - sides[1])) <= AUDIT_TOL)


def audit_model(model: OnticModel, data: OperationalData, reproduction_tol: float = 1e-8) -> AuditReport:
    """Check reproduction of ``data`` and the two measurement conditions.

    Condition 1 bounds the negative-cell mass of the pointer response by
    ``p_tilde``. Condition 2 asks that the unread measurement act as the
    identity with weight ``1 - p_d``: on the ontic-state transition matrix
    when the model has an instrument, otherwise on the sequential response.
    Only ontic states with positive weight under ``P_star`` are audited.
    """
    neg = data.negative_cells
    if model.instrument is not None:
        if model.instrument.shape[0] != data.n_cells:
            raise ValidationError("model and data have different cell structures")
        predicted = model.predicted_joint()
        support = model.prep > 0
        x_given_l = model.instrument.sum(axis=1)  # (cells, lambda)
        neg_mass = x_given_l[neg].sum(axis=0)
        transition = model.instrument.sum(axis=0)  # (lambda', lambda)
        off_diag = transition.sum(axis=0) - np.diag(transition)
        cond1 = bool(np.all(neg_mass[support] <= data.p_tilde + AUDIT_TOL))
        cond2 = bool(np.all(off_diag[support] <= data.p_d + AUDIT_TOL))
        details = {"negative_mass": neg_mass.tolist(), "off_diagonal": off_diag.tolist()}
    else:
        try:
            cells = model.responses["M_W"]
            seq = model.responses["M_seq"]
        except KeyError as exc:
            raise ValidationError("model lacks the M_W or M_seq responses") from exc
        if cells.shape[1] != data.n_cells:
            raise ValidationError("model and data have different cell structures")
        star = model.prep
        # Only x and y marginals are available without a state-update rule.
        predicted = np.zeros_like(data.joint)
        residual_extra = max(
            float(np.max(np.abs(star @ cells - data.joint.sum(axis=1)))),
            float(np.max(np.abs(star @ seq - data.joint.sum(axis=0)))),
            float(np.max(np.abs(star @ model.response_F - data.marginal_y))),
        )
        neg_mass = cells[:, neg].sum(axis=1)
        cond1 = bool(np.all(neg_mass <= data.p_tilde + AUDIT_TOL))
        if data.p_d > 0:
            other = (seq - (1.0 - data.p_d) * model.response_F) / data.p_d
            cond2 = bool(np.all(other >= -AUDIT_TOL) and np.all(other <= 1.0 + AUDIT_TOL))
        else:
            other = None
            cond2 = bool(np.max(np.abs(seq - model.response_F)) <= AUDIT_TOL)
        details = {"negative_mass": neg_mass.tolist()}
        if other is not None:
            details["disturbing_response"] = other.tolist()
    if model.instrument is not None:
        residual = float(np.max(np.abs(predicted - data.joint)))
        marg = float(np.max(np.abs(model.prep @ model.response_F - data.marginal_y)))
        residual = max(residual, marg)
    else:
        residual = residual_extra
    return AuditReport(
        model=model.name,
        reproduces_stats=residual <= reproduction_tol,
        max_residual=residual,
        condition1_holds=cond1,
        condition2_holds=cond2,
        prep_nc_holds=_prep_nc(model, data),
        details=details,
    )
