"""Closed-form statistics of weak-measurement schemes followed by a postselection.

Four pointer schemes are covered: Gaussian pointer read out in position or in
momentum, a qubit pointer, and the Gaussian position pointer coarse-grained to
two outcomes. Every function returns exact probabilities (no sampling, no
numerical integration) together with the leading-order asymptotic
prediction, so callers can compare the two.

The postselection is either an ideal projector or a :class:`PostselectionModel`
with unbiased noise. All statistics are linear in the postselection effect,
so the noisy case is handled by substituting the noisy effect everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .qmath import (
    DomainError,
    ORTHOGONALITY_TOL,
    ValidationError,
    as_density,
    as_effect,
    as_projector,
    erf_family,
    gaussian_overlap,
    kd_quasiprob,
)

SCHEME_KINDS = ("gaussian_position", "gaussian_momentum", "qubit_pointer", "coarse_grained")


@dataclass(frozen=True)
class SchemeSpec:
    kind: str
    s: Optional[float] = None
    epsilon_pointer: Optional[float] = None
    noise_eps: float = 0.0

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValidationError(f"unknown scheme kind {self.kind!r}")
        if self.kind == "qubit_pointer":
            if self.epsilon_pointer is None or self.s is not None:
                raise ValidationError("qubit_pointer takes epsilon_pointer and no s")
            if not 0.0 < self.epsilon_pointer <= math.pi / 4:
                raise ValidationError("epsilon_pointer must lie in (0, pi/4]")
        else:
            if self.s is None or self.epsilon_pointer is not None:
                raise ValidationError(f"{self.kind} takes s and no epsilon_pointer")
            if not self.s > 0:
                raise ValidationError("s must be positive")
        if not 0.0 <= self.noise_eps < 0.5:
            raise ValidationError("noise_eps must lie in [0, 1/2)")


@dataclass(frozen=True)
class ExperimentStats:
    kind: str
    p_minus: float
    p_F: float
    p_d: float
    p_tilde: float
    p_m: Optional[float]
    kd_numerator: complex
    leading_order_p_minus: float
    parameter: float

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "parameter": self.parameter,
            "p_minus": self.p_minus,
            "p_F": self.p_F,
            "p_d": self.p_d,
            "p_tilde": self.p_tilde,
            "p_m": self.p_m,
            "kd_re": self.kd_numerator.real,
            "kd_im": self.kd_numerator.imag,
            "leading_order_p_minus": self.leading_order_p_minus,
        }


@dataclass(frozen=True)
class PostselectionModel:
    effect_pass: np.ndarray
    effect_fail: np.ndarray
    ideal_projector: np.ndarray
    noise_eps: float


def noisy_postselection(Pi, eps: float = 0.0) -> PostselectionModel:
    """Projective postselection mixed with a fair coin: ``(1-2eps) Pi + eps 1``."""
    if not 0.0 <= eps < 0.5:
        raise ValidationError(f"noise eps must lie in [0, 1/2), got {eps!r}")
    Pi = as_projector(Pi)
    ident = np.eye(Pi.shape[0])
    passing = (1.0 - 2.0 * eps) * Pi + eps * ident
    return PostselectionModel(passing, ident - passing, Pi, float(eps))


def _pass_effect(post) -> np.ndarray:
    if isinstance(post, PostselectionModel):
        return post.effect_pass
    return as_effect(post)


def _prepare(rho, E, post):
    rho = as_density(rho)
    E = as_projector(E)
    F = _pass_effect(post)
    if not rho.shape == E.shape == F.shape:
        raise ValidationError("state, projector and postselection dimensions differ")
    p_F = float(np.trace(F @ rho).real)
    if p_F <= ORTHOGONALITY_TOL:
        raise DomainError("postselection probability is zero")
    return rho, E, np.eye(E.shape[0]) - E, F, p_F


def _interference_terms(rho, E, Ec, F):
    """``Tr(E F E rho)``, ``Tr(Ec F Ec rho)`` and the complex ``Tr(Ec F E rho)``."""
    t_ee = float(np.trace(E @ F @ E @ rho).real)
    t_cc = float(np.trace(Ec @ F @ Ec @ rho).real)
    t_ce = complex(np.trace(Ec @ F @ E @ rho))
    return t_ee, t_cc, t_ce


def disturbance_pd(s: float) -> float:
    """Weight of the disturbing branch of the unread Gaussian pointer channel."""
    if not s > 0:
        raise ValueError(f"s must be positive, got {s!r}")
    return -0.5 * math.expm1(-1.0 / (4.0 * s * s))


def spread_for_disturbance(p_d: float) -> float:
    """Inverse of :func:`disturbance_pd`."""
    if not 0.0 < p_d < 0.5:
        raise ValueError("p_d must lie in (0, 1/2)")
    return 1.0 / (2.0 * math.sqrt(-math.log1p(-2.0 * p_d)))


def gaussian_position_stats(rho, E, post, s: float) -> ExperimentStats:
    """Probability of a negative pointer position together with a passed postselection."""
    if not s > 0:
        raise ValueError("s must be positive")
    rho, E, Ec, F, p_F = _prepare(rho, E, post)
    t_ee, t_cc, t_ce = _interference_terms(rho, E, Ec, F)
    p_minus = (
        gaussian_overlap(1.0, 1.0, s, 0.0) * t_ee
        + gaussian_overlap(0.0, 0.0, s, 0.0) * t_cc
        + gaussian_overlap(1.0, 0.0, s, 0.0) * 2.0 * t_ce.real
    )
    kd = kd_quasiprob(rho, E, F)
    return ExperimentStats(
        kind="gaussian_position",
        p_minus=p_minus,
        p_F=p_F,
        p_d=disturbance_pd(s),
        p_tilde=0.5,
        p_m=None,
        kd_numerator=kd,
        leading_order_p_minus=p_F / 2.0 - kd.real / (math.sqrt(math.pi) * s),
        parameter=float(s),
    )


def momentum_alpha(s: float) -> complex:
    """Twice the half-line characteristic function of the momentum distribution."""
    return math.exp(-1.0 / (4.0 * s * s)) * complex(1.0, erf_family(1.0 / (2.0 * s))["erfi"])


def gaussian_momentum_stats(rho, E, post, s: float) -> ExperimentStats:
    """Probability of a negative pointer momentum together with a passed postselection.

    A noisy ``post`` is accepted; the momentum formula is extended linearly in
    the postselection effect, which is a derived rather than a stated result.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    rho, E, Ec, F, p_F = _prepare(rho, E, post)
    t_ee, t_cc, t_ce = _interference_terms(rho, E, Ec, F)
    alpha = momentum_alpha(s)
    p_minus = 0.5 * (t_ee + t_cc + 2.0 * (alpha * t_ce).real)
    kd = kd_quasiprob(rho, E, F)
    return ExperimentStats(
        kind="gaussian_momentum",
        p_minus=p_minus,
        p_F=p_F,
        p_d=disturbance_pd(s),
        p_tilde=0.5,
        p_m=None,
        kd_numerator=kd,
        leading_order_p_minus=p_F / 2.0 - kd.imag / (math.sqrt(math.pi) * s),
        parameter=float(s),
    )


def qubit_pointer_kraus(E, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Kraus operators ``(N_+1, N_-1)`` of the qubit-pointer weak measurement."""
    E = as_projector(E)
    Z = 2.0 * E - np.eye(E.shape[0])
    c, sn = math.cos(eps), math.sin(eps)
    ident = np.eye(E.shape[0])
    return (c * ident + sn * Z) / math.sqrt(2.0), (c * ident - sn * Z) / math.sqrt(2.0)


def qubit_pointer_stats(rho, E, post, eps: float) -> ExperimentStats:
    if not 0.0 < eps <= math.pi / 4:
        raise ValidationError("qubit pointer eps must lie in (0, pi/4]")
    rho, E, _, F, p_F = _prepare(rho, E, post)
    _, n_minus = qubit_pointer_kraus(E, eps)
    p_minus = float(np.trace(n_minus.conj().T @ F @ n_minus @ rho).real)
    p_m = math.sin(2.0 * eps)
    kd = kd_quasiprob(rho, E, F)
    return ExperimentStats(
        kind="qubit_pointer",
        p_minus=p_minus,
        p_F=p_F,
        p_d=math.sin(eps) ** 2,
        p_tilde=0.5 * (1.0 + p_m),
        p_m=p_m,
        kd_numerator=kd,
        leading_order_p_minus=p_F * (1.0 + p_m) / 2.0 - 2.0 * eps * kd.real,
        parameter=float(eps),
    )


def coarse_grained_pm(s: float) -> float:
    """Sharp-measurement weight of the Gaussian pointer binned at ``x = 1/2``."""
    return erf_family(1.0 / (2.0 * s))["erf"]


def coarse_grained_stats(rho, E, post, s: float) -> ExperimentStats:
    """Gaussian position pointer binned into ``x <= 1/2`` (outcome -1) and ``x > 1/2``."""
    if not s > 0:
        raise ValueError("s must be positive")
    rho, E, Ec, F, p_F = _prepare(rho, E, post)
    t_ee, t_cc, t_ce = _interference_terms(rho, E, Ec, F)
    p_minus = (
        gaussian_overlap(1.0, 1.0, s, 0.5) * t_ee
        + gaussian_overlap(0.0, 0.0, s, 0.5) * t_cc
        + gaussian_overlap(1.0, 0.0, s, 0.5) * 2.0 * t_ce.real
    )
    p_m = coarse_grained_pm(s)
    kd = kd_quasiprob(rho, E, F)
    return ExperimentStats(
        kind="coarse_grained",
        p_minus=p_minus,
        p_F=p_F,
        p_d=disturbance_pd(s),
        p_tilde=0.5 * (1.0 + p_m),
        p_m=p_m,
        kd_numerator=kd,
        leading_order_p_minus=p_F * (1.0 + p_m) / 2.0 - kd.real / (math.sqrt(math.pi) * s),
        parameter=float(s),
    )


def coarse_grained_povm(E, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Binned effects ``([X=-1], [X=+1])``."""
    E = as_projector(E)
    a = gaussian_overlap(1.0, 1.0, s, 0.5)
    ident = np.eye(E.shape[0])
    minus = a * E + (1.0 - a) * (ident - E)
    return minus, ident - minus


def run_scheme(spec: SchemeSpec, rho, E, Pi) -> ExperimentStats:
    """Dispatch on ``spec.kind`` with the noisy postselection built from ``Pi``."""
    post = noisy_postselection(Pi, spec.noise_eps)
    if spec.kind == "gaussian_position":
        return gaussian_position_stats(rho, E, post, spec.s)
    if spec.kind == "gaussian_momentum":
        return gaussian_momentum_stats(rho, E, post, spec.s)
    if spec.kind == "coarse_grained":
        return coarse_grained_stats(rho, E, post, spec.s)
    return qubit_pointer_stats(rho, E, post, spec.epsilon_pointer)


def marginal_channel(rho, E, kind: str, parameter: float) -> np.ndarray:
    """Unread-outcome channel of a scheme applied to ``rho``, in closed form.

    Both Gaussian readouts share the same channel; the coarse graining does
    not change it either.
    """
    rho = np.asarray(rho, dtype=complex)
    E = as_projector(E)
    Ec = np.eye(E.shape[0]) - E
    if kind == "qubit_pointer":
        n_plus, n_minus = qubit_pointer_kraus(E, parameter)
        return n_plus @ rho @ n_plus.conj().T + n_minus @ rho @ n_minus.conj().T
    if kind not in SCHEME_KINDS:
        raise ValidationError(f"unknown scheme kind {kind!r}")
    decay = gaussian_overlap(1.0, 0.0, parameter)
    return E @ rho @ E + Ec @ rho @ Ec + decay * (E @ rho @ Ec + Ec @ rho @ E)


def dephasing_form(rho, E, p_d: float) -> np.ndarray:
    """``(1-p_d) rho + p_d Z rho Z`` with ``Z = E - E_perp``."""
    rho = np.asarray(rho, dtype=complex)
    Z = 2.0 * np.asarray(E) - np.eye(rho.shape[0])
    return (1.0 - p_d) * rho + p_d * Z @ rho @ Z


@dataclass(frozen=True)
class PreparationEnsemble:
    sigma0: np.ndarray
    sigma1: np.ndarray
    q0: float
    q1: float
    rho_star: np.ndarray
    rho_perp: np.ndarray
    q_star: float

    def residual(self) -> float:
        lhs = self.q_star * self.rho_star + (1.0 - self.q_star) * self.rho_perp
        rhs = self.q0 * self.sigma0 + self.q1 * self.sigma1
        return float(np.max(np.abs(lhs - rhs)))


def sigma_preparations(Pi, rho_star) -> PreparationEnsemble:
    """Sharpness-test preparations and a complementary ensemble, both mixing to ``1/d``."""
    Pi = as_projector(Pi)
    rho_star = as_density(rho_star)
    d = Pi.shape[0]
    if d < 2:
        raise ValidationError("dimension must be at least 2")
    rank = round(float(np.trace(Pi).real))
    if rank in (0, d):
        raise ValidationError("postselection projector must be neither zero nor the identity")
    ident = np.eye(d)
    return PreparationEnsemble(
        sigma0=(ident - Pi) / (d - rank),
        sigma1=Pi / rank,
        q0=1.0 - rank / d,
        q1=rank / d,
        rho_star=rho_star,
        rho_perp=(ident - rho_star) / (d - 1),
        q_star=1.0 / d,
    )


def c_s_value(ensemble: PreparationEnsemble, post: PostselectionModel) -> float:
    """Correlation between the sharpness-test preparation label and the postselection outcome."""
    if ensemble.sigma0.shape != post.effect_pass.shape:
        raise ValidationError("dimension mismatch between ensemble and postselection")
    value = (
        ensemble.q0 * np.trace(post.effect_fail @ ensemble.sigma0).real
        + ensemble.q1 * np.trace(post.effect_pass @ ensemble.sigma1).real
    )
    # a probability; clip rounding so downstream range checks stay exact
    return float(min(max(value, 0.0), 1.0))
